#include "sepcast/cascade.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace sepcast {

std::string to_string(CascadeMode mode) {
  switch (mode) {
    case CascadeMode::one_subset: return "one_subset";
    case CascadeMode::two_subsets: return "two_subsets";
    case CascadeMode::six_subsets: return "six_subsets";
  }
  return "one_subset";
}

CascadeMode cascade_mode_from_subsets(int subsets) {
  switch (subsets) {
    case 1: return CascadeMode::one_subset;
    case 2: return CascadeMode::two_subsets;
    case 6: return CascadeMode::six_subsets;
  }
  throw ConfigError("subsets must be 1, 2 or 6, got " + std::to_string(subsets));
}

int subsets_of(CascadeMode mode) {
  switch (mode) {
    case CascadeMode::one_subset: return 1;
    case CascadeMode::two_subsets: return 2;
    case CascadeMode::six_subsets: return 6;
  }
  return 1;
}

std::vector<int> CascadeSpec::intermediate_horizons() const {
  switch (mode) {
    case CascadeMode::one_subset: return {};
    case CascadeMode::two_subsets: return {3};
    case CascadeMode::six_subsets: return {1, 2, 3, 4, 5};
  }
  return {};
}

void CascadeSpec::validate() const {
  window.validate();
  params.validate();
  sampler.validate();
  if (target_horizon < 1) throw ConfigError("target_horizon must be >= 1");
  for (int h : intermediate_horizons())
    if (h >= target_horizon)
      throw ConfigError("intermediate horizon " + std::to_string(h) +
                        " must be below target horizon " +
                        std::to_string(target_horizon));
  if (oof_folds < 2) throw ConfigError("oof_folds must be >= 2");
}

std::string subset_prob_column(int horizon) {
  return "subset_prob_" + std::to_string(horizon) + "hr";
}

PatientFolds assign_patient_folds(const Cohort& cohort, int k, uint64_t seed) {
  if (k < 2) throw ConfigError("fold count must be >= 2");
  std::vector<const PatientSeries*> pos, neg;
  for (const auto& p : cohort.patients)
    ((p.labels.onset.array() == 1).any() ? pos : neg).push_back(&p);
  if (static_cast<int>(pos.size()) < k)
    throw DegenerateClassError(
        "stratified fold assignment impossible: " + std::to_string(pos.size()) +
        " event patients for " + std::to_string(k) + " folds");

  Rng rng(derive_seed(seed, "patient_folds"));
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  PatientFolds folds;
  folds.k = k;
  for (size_t i = 0; i < pos.size(); ++i)
    folds.fold_of[pos[i]->patient_id] = static_cast<int>(i % k);
  for (size_t i = 0; i < neg.size(); ++i)
    folds.fold_of[neg[i]->patient_id] = static_cast<int>(i % k);
  return folds;
}

Cohort shift_cohort(const Cohort& cohort, int h,
                    std::vector<std::string>* skipped) {
  Cohort out;
  out.schema = cohort.schema;
  for (const auto& p : cohort.patients) {
    if (p.rows() <= h) {
      if (skipped) skipped->push_back(p.patient_id);
      continue;
    }
    PatientSeries q = p;
    q.labels = shift_labels(p.labels, h);
    out.patients.push_back(std::move(q));
  }
  return out;
}

namespace {

void require_two_classes(const FeatureFrame& frame, int horizon) {
  const long n_pos = (frame.target.array() == 1).count();
  if (frame.n() == 0 || n_pos == 0 || n_pos == frame.n())
    throw DegenerateClassError("horizon " + std::to_string(horizon) +
                               ": training rows hold a single class");
}

/// Out-of-fold probabilities at master rows: for each fold, fit on the
/// horizon frame restricted to other folds' patients, score this fold's
/// master rows.
OofResult oof_probs_impl(const FeatureFrame& horizon_frame,
                         const FeatureFrame& master, int horizon,
                         const CascadeSpec& spec, const PatientFolds& folds) {
  OofResult res;
  res.prob = VectorXd::Zero(master.n());
  res.audit.horizon = horizon;
  res.audit.rows = master.rows;
  res.audit.scoring_fold.assign(master.n(), -1);
  res.audit.patient_fold = folds.fold_of;

  for (int fold = 0; fold < folds.k; ++fold) {
    std::vector<long> train_idx, score_idx;
    for (long i = 0; i < horizon_frame.n(); ++i)
      if (folds.fold_of.at(horizon_frame.rows[i].patient_id) != fold)
        train_idx.push_back(i);
    for (long i = 0; i < master.n(); ++i)
      if (folds.fold_of.at(master.rows[i].patient_id) == fold)
        score_idx.push_back(i);
    if (score_idx.empty()) continue;

    FeatureFrame sub = frame_rows(horizon_frame, train_idx);
    const long n_pos = (sub.target.array() == 1).count();
    if (sub.n() == 0 || n_pos == 0 || n_pos == sub.n())
      throw DegenerateClassError("out-of-fold split " + std::to_string(fold) +
                                 " at horizon " + std::to_string(horizon) +
                                 " lacks a class");
    SamplerConfig sc = spec.sampler;
    sc.seed = derive_seed(spec.sampler.seed, "oof_fit",
                          static_cast<uint64_t>(horizon),
                          static_cast<uint64_t>(fold));
    TrainParams tp = spec.params;
    tp.seed = derive_seed(spec.params.seed, "oof_fit",
                          static_cast<uint64_t>(horizon),
                          static_cast<uint64_t>(fold));
    GbdtModel m = fit(rebalance(sub, sc), tp);

    FeatureFrame score = frame_rows(master, score_idx);
    VectorXd p = predict_proba_values(m, score.values, score.columns);
    for (size_t t = 0; t < score_idx.size(); ++t) {
      res.prob[score_idx[t]] = p[static_cast<long>(t)];
      res.audit.scoring_fold[score_idx[t]] = fold;
    }
  }
  for (long i = 0; i < master.n(); ++i)
    if (res.audit.scoring_fold[i] < 0)
      throw DataError("out-of-fold scoring left row " + std::to_string(i) +
                      " uncovered");
  return res;
}

void capture_feature_stats(CascadeModel& model, const FeatureFrame& frame,
                           const FeatureSchema& schema) {
  const long n = frame.n();
  const long cols = frame.values.cols();
  model.target_features = frame.columns;
  model.feature_mean = frame.values.colwise().mean();
  model.feature_std.resize(cols);
  for (long j = 0; j < cols; ++j) {
    const double var =
        (frame.values.col(j).array() - model.feature_mean[j]).square().sum() /
        static_cast<double>(n);
    model.feature_std[j] = std::sqrt(var);
  }
  // Raw non-trendable columns are static or category-coded: the explainer
  // resamples them from a training marginal pool instead of Gaussian noise.
  model.feature_gaussian.assign(cols, 1);
  model.feature_marginals.assign(cols, {});
  for (int j = 0; j < schema.size(); ++j) {
    if (schema.columns[j].trendable) continue;
    model.feature_gaussian[j] = 0;
    const long step = std::max<long>(1, n / 256);
    auto& pool = model.feature_marginals[j];
    for (long i = 0; i < n; i += step) pool.push_back(frame.values(i, j));
  }
}

}  // namespace

CascadeModel train_cascade(const Cohort& cohort, const CascadeSpec& spec) {
  spec.validate();
  CascadeModel model;
  model.spec = spec;

  Cohort master_cohort = shift_cohort(cohort, spec.target_horizon);
  if (master_cohort.patients.empty())
    throw DataError("no patient has enough rows for the target horizon");
  FeatureFrame master = assemble_design_matrix(master_cohort, spec.window);
  require_two_classes(master, spec.target_horizon);

  const auto horizons = spec.intermediate_horizons();
  PatientFolds folds;
  if (!horizons.empty() && spec.leakage_control == LeakageControl::oof)
    folds = assign_patient_folds(cohort, spec.oof_folds,
                                 derive_seed(spec.sampler.seed, "cascade_oof"));

  ExtraColumns extras;
  extras.rows = master.rows;
  extras.values.resize(master.n(), static_cast<long>(horizons.size()));
  for (size_t hi = 0; hi < horizons.size(); ++hi) {
    const int h = horizons[hi];
    FeatureFrame horizon_frame =
        assemble_design_matrix(shift_cohort(cohort, h), spec.window);
    require_two_classes(horizon_frame, h);

    SamplerConfig sc = spec.sampler;
    sc.seed = derive_seed(spec.sampler.seed, "intermediate",
                          static_cast<uint64_t>(h));
    TrainParams tp = spec.params;
    tp.seed = derive_seed(spec.params.seed, "intermediate",
                          static_cast<uint64_t>(h));
    GbdtModel full = fit(rebalance(horizon_frame, sc), tp);

    if (spec.leakage_control == LeakageControl::oof) {
      OofResult oof = oof_probs_impl(horizon_frame, master, h, spec, folds);
      extras.values.col(static_cast<long>(hi)) = oof.prob;
      model.train_audit.push_back(std::move(oof.audit));
    } else {
      extras.values.col(static_cast<long>(hi)) =
          predict_proba_values(full, master.values, master.columns);
    }
    extras.names.push_back(subset_prob_column(h));
    model.intermediates.emplace(h, std::move(full));
  }

  FeatureFrame target_frame =
      horizons.empty() ? std::move(master)
                       : append_extra_columns(std::move(master), extras);
  capture_feature_stats(model, target_frame, cohort.schema);

  SamplerConfig sc = spec.sampler;
  sc.seed = derive_seed(spec.sampler.seed, "target");
  TrainParams tp = spec.params;
  tp.seed = derive_seed(spec.params.seed, "target");
  model.target = fit(rebalance(target_frame, sc), tp);
  return model;
}

OofResult out_of_fold_probs(const Cohort& cohort, int horizon,
                            const CascadeSpec& spec, int k,
                            const PatientFolds* folds) {
  if (k < 2) throw ConfigError("out_of_fold_probs: k must be >= 2");
  if (horizon >= spec.target_horizon)
    throw ConfigError("out_of_fold_probs: horizon must be below the target");
  PatientFolds local;
  if (!folds) {
    local = assign_patient_folds(cohort, k,
                                 derive_seed(spec.sampler.seed, "cascade_oof"));
    folds = &local;
  }
  FeatureFrame horizon_frame =
      assemble_design_matrix(shift_cohort(cohort, horizon), spec.window);
  require_two_classes(horizon_frame, horizon);
  FeatureFrame master =
      assemble_design_matrix(shift_cohort(cohort, spec.target_horizon),
                             spec.window);
  return oof_probs_impl(horizon_frame, master, horizon, spec, *folds);
}

namespace {

VectorXd score_base(const CascadeModel& model, const FeatureFrame& base) {
  const auto horizons = model.spec.intermediate_horizons();
  if (horizons.empty())
    return predict_proba_values(model.target, base.values, base.columns);

  MatrixXd vals(base.values.rows(),
                base.values.cols() + static_cast<long>(horizons.size()));
  vals.leftCols(base.values.cols()) = base.values;
  std::vector<std::string> names = base.columns;
  for (size_t hi = 0; hi < horizons.size(); ++hi) {
    const auto& m = model.intermediates.at(horizons[hi]);
    vals.col(base.values.cols() + static_cast<long>(hi)) =
        predict_proba_values(m, base.values, base.columns);
    names.push_back(subset_prob_column(horizons[hi]));
  }
  return predict_proba_values(model.target, vals, names);
}

}  // namespace

CascadePrediction predict_cascade(const CascadeModel& model, const Cohort& cohort) {
  FeatureFrame base = assemble_feature_rows(cohort, model.spec.window);
  CascadePrediction out;
  out.rows = base.rows;
  out.prob = score_base(model, base);
  return out;
}

VectorXd predict_cascade_frame(const CascadeModel& model,
                               const FeatureFrame& base_frame) {
  return score_base(model, base_frame);
}

namespace {

constexpr const char* kCascadeFormat = "sepcast-cascade";
constexpr int kCascadeVersion = 1;

nlohmann::ordered_json spec_to_json(const CascadeSpec& spec) {
  nlohmann::ordered_json j;
  j["target_horizon"] = spec.target_horizon;
  j["mode"] = to_string(spec.mode);
  j["window"] = {{"w", spec.window.w},
                 {"enable_delta", spec.window.enable_delta},
                 {"enable_stats", spec.window.enable_stats}};
  j["params"] = {{"n_rounds", spec.params.n_rounds},
                 {"max_depth", spec.params.max_depth},
                 {"learning_rate", spec.params.learning_rate},
                 {"reg_lambda", spec.params.reg_lambda},
                 {"gamma", spec.params.gamma},
                 {"min_child_weight", spec.params.min_child_weight},
                 {"base_score", spec.params.base_score},
                 {"seed", spec.params.seed}};
  j["sampler"] = {{"oversample_ratio", spec.sampler.oversample_ratio},
                  {"undersample_to_parity", spec.sampler.undersample_to_parity},
                  {"seed", spec.sampler.seed}};
  j["leakage_control"] =
      spec.leakage_control == LeakageControl::oof ? "oof" : "insample";
  j["oof_folds"] = spec.oof_folds;
  return j;
}

CascadeSpec spec_from_json(const nlohmann::json& j) {
  CascadeSpec spec;
  spec.target_horizon = j.at("target_horizon").get<int>();
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "one_subset") spec.mode = CascadeMode::one_subset;
  else if (mode == "two_subsets") spec.mode = CascadeMode::two_subsets;
  else if (mode == "six_subsets") spec.mode = CascadeMode::six_subsets;
  else throw DataError("unknown cascade mode '" + mode + "'");
  const auto& w = j.at("window");
  spec.window.w = w.at("w").get<int>();
  spec.window.enable_delta = w.at("enable_delta").get<bool>();
  spec.window.enable_stats = w.at("enable_stats").get<bool>();
  const auto& p = j.at("params");
  spec.params.n_rounds = p.at("n_rounds").get<int>();
  spec.params.max_depth = p.at("max_depth").get<int>();
  spec.params.learning_rate = p.at("learning_rate").get<double>();
  spec.params.reg_lambda = p.at("reg_lambda").get<double>();
  spec.params.gamma = p.at("gamma").get<double>();
  spec.params.min_child_weight = p.at("min_child_weight").get<double>();
  spec.params.base_score = p.at("base_score").get<double>();
  spec.params.seed = p.at("seed").get<uint64_t>();
  const auto& s = j.at("sampler");
  spec.sampler.oversample_ratio = s.at("oversample_ratio").get<double>();
  spec.sampler.undersample_to_parity = s.at("undersample_to_parity").get<bool>();
  spec.sampler.seed = s.at("seed").get<uint64_t>();
  spec.leakage_control = j.at("leakage_control").get<std::string>() == "oof"
                             ? LeakageControl::oof
                             : LeakageControl::insample;
  spec.oof_folds = j.at("oof_folds").get<int>();
  return spec;
}

}  // namespace

void save_cascade(const CascadeModel& model, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create model directory: " + dir);

  nlohmann::ordered_json manifest;
  manifest["format"] = kCascadeFormat;
  manifest["version"] = kCascadeVersion;
  manifest["spec"] = spec_to_json(model.spec);

  nlohmann::ordered_json files;
  files["target"] = "target.json";
  nlohmann::ordered_json inter = nlohmann::ordered_json::object();
  for (const auto& [h, m] : model.intermediates) {
    const std::string name = "subset_" + std::to_string(h) + "hr.json";
    inter[std::to_string(h)] = name;
    save_model(m, (fs::path(dir) / name).string());
  }
  files["intermediates"] = std::move(inter);
  manifest["files"] = std::move(files);
  save_model(model.target, (fs::path(dir) / "target.json").string());

  if (model.preprocess) {
    nlohmann::ordered_json pp;
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (const auto& c : model.preprocess->ingest_schema.columns)
      cols.push_back({{"name", c.name},
                      {"group", to_string(c.group)},
                      {"trendable", c.trendable}});
    pp["ingest_schema"] = std::move(cols);
    std::vector<std::string> gs;
    for (auto g : model.preprocess->groups) gs.push_back(to_string(g));
    pp["groups"] = gs;
    pp["start_day"] = model.preprocess->start_day;
    pp["end_day"] = model.preprocess->end_day;
    manifest["preprocess"] = std::move(pp);
  }

  nlohmann::ordered_json feats;
  feats["names"] = model.target_features;
  feats["mean"] = std::vector<double>(model.feature_mean.begin(),
                                      model.feature_mean.end());
  feats["std"] = std::vector<double>(model.feature_std.begin(),
                                     model.feature_std.end());
  feats["gaussian"] = model.feature_gaussian;
  feats["marginals"] = model.feature_marginals;
  manifest["features"] = std::move(feats);

  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw DataError("cannot write cascade manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

CascadeModel load_cascade(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw DataError("cannot open cascade manifest in " + dir);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed cascade manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != kCascadeFormat)
    throw DataError("not a cascade model directory: " + dir);
  if (manifest.value("version", -1) != kCascadeVersion)
    throw DataError("unsupported cascade version");

  CascadeModel model;
  model.spec = spec_from_json(manifest.at("spec"));
  model.target = load_model((fs::path(dir) / manifest.at("files").at("target")
                                 .get<std::string>()).string());
  for (const auto& [key, file] :
       manifest.at("files").at("intermediates").items()) {
    model.intermediates.emplace(std::stoi(key),
                                load_model((fs::path(dir) /
                                            file.get<std::string>()).string()));
  }
  if (manifest.contains("preprocess")) {
    const auto& pp = manifest.at("preprocess");
    Preprocess pre;
    for (const auto& c : pp.at("ingest_schema"))
      pre.ingest_schema.columns.push_back(
          {c.at("name").get<std::string>(),
           group_from_string(c.at("group").get<std::string>()),
           c.at("trendable").get<bool>()});
    pre.groups.clear();
    for (const auto& g : pp.at("groups"))
      pre.groups.insert(group_from_string(g.get<std::string>()));
    pre.start_day = pp.at("start_day").get<int>();
    pre.end_day = pp.at("end_day").get<int>();
    model.preprocess = std::move(pre);
  }
  const auto& feats = manifest.at("features");
  model.target_features = feats.at("names").get<std::vector<std::string>>();
  const auto mean = feats.at("mean").get<std::vector<double>>();
  const auto sd = feats.at("std").get<std::vector<double>>();
  model.feature_mean = Eigen::Map<const VectorXd>(mean.data(), mean.size());
  model.feature_std = Eigen::Map<const VectorXd>(sd.data(), sd.size());
  model.feature_gaussian = feats.at("gaussian").get<std::vector<uint8_t>>();
  model.feature_marginals =
      feats.at("marginals").get<std::vector<std::vector<double>>>();
  return model;
}

}  // namespace sepcast
