#include "sepcast/run.hpp"

#include <fstream>

namespace sepcast {

std::string to_string(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::baseline: return "baseline";
    case FeatureSet::delta: return "delta";
    case FeatureSet::stats: return "stats";
    case FeatureSet::delta_stats: return "delta+stats";
  }
  return "baseline";
}

FeatureSet feature_set_from_string(const std::string& s) {
  if (s == "baseline") return FeatureSet::baseline;
  if (s == "delta") return FeatureSet::delta;
  if (s == "stats") return FeatureSet::stats;
  if (s == "delta+stats" || s == "delta_stats") return FeatureSet::delta_stats;
  throw ConfigError("unknown feature set '" + s +
                    "' (baseline|delta|stats|delta+stats)");
}

WindowSpec window_of(FeatureSet fs, int w) {
  WindowSpec spec;
  spec.w = w;
  spec.enable_delta = fs == FeatureSet::delta || fs == FeatureSet::delta_stats;
  spec.enable_stats = fs == FeatureSet::stats || fs == FeatureSet::delta_stats;
  return spec;
}

CascadeSpec RunConfig::cascade_spec() const {
  CascadeSpec spec;
  spec.target_horizon = target_horizon;
  spec.mode = subsets;
  spec.window = window_of(features, window);
  spec.params = params;
  spec.sampler = sampler;
  spec.leakage_control = leakage_control;
  spec.oof_folds = oof_folds;
  return spec;
}

nlohmann::ordered_json run_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["input"] = cfg.input_csv;
  j["schema"] = cfg.schema_json;
  std::vector<std::string> gs;
  for (auto g : cfg.groups) gs.push_back(to_string(g));
  j["groups"] = gs;
  j["features"] = to_string(cfg.features);
  j["subsets"] = subsets_of(cfg.subsets);
  j["window"] = cfg.window;
  j["target_horizon"] = cfg.target_horizon;
  j["folds"] = cfg.folds;
  j["threshold"] = cfg.threshold;
  j["start_day"] = cfg.start_day;
  j["end_day"] = cfg.end_day;
  j["params"] = {{"n_rounds", cfg.params.n_rounds},
                 {"max_depth", cfg.params.max_depth},
                 {"learning_rate", cfg.params.learning_rate},
                 {"reg_lambda", cfg.params.reg_lambda},
                 {"gamma", cfg.params.gamma},
                 {"min_child_weight", cfg.params.min_child_weight},
                 {"base_score", cfg.params.base_score}};
  j["sampler"] = {{"oversample_ratio", cfg.sampler.oversample_ratio},
                  {"undersample_to_parity", cfg.sampler.undersample_to_parity}};
  j["leakage_control"] =
      cfg.leakage_control == LeakageControl::oof ? "oof" : "insample";
  j["oof_folds"] = cfg.oof_folds;
  j["seed"] = cfg.seed;
  return j;
}

std::string config_hash_hex(const nlohmann::ordered_json& config) {
  const uint64_t h = fnv1a64(config.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

nlohmann::ordered_json roc_to_json(const std::vector<RocPoint>& roc) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& pt : roc)
    arr.push_back({{"fpr", pt.fpr},
                   {"tpr", pt.tpr},
                   {"threshold", std::isinf(pt.threshold)
                                     ? nlohmann::ordered_json("inf")
                                     : nlohmann::ordered_json(pt.threshold)}});
  return arr;
}

nlohmann::ordered_json build_report_json(const RunConfig& cfg,
                                         const EvalReport& report,
                                         const FilterStats& filter) {
  nlohmann::ordered_json j;
  j["tool"] = "sepcast";
  const auto config = run_config_json(cfg);
  j["config"] = config;
  j["config_hash"] = config_hash_hex(config);
  j["seed"] = cfg.seed;
  j["filter"] = {{"patients_in", filter.patients_in},
                 {"patients_excluded", filter.patients_excluded},
                 {"patients_onset_pre_window", filter.patients_onset_pre_window},
                 {"rows_in", filter.rows_in},
                 {"rows_out", filter.rows_out}};
  // Policy choices the numbers depend on but the data cannot show.
  j["notes"] = {
      {"leading_missing_policy", "cohort_median_observed_only"},
      {"fold_policy", "patient_level_stratified_by_event"},
      {"undersampling", "majority_down_to_minority_parity"},
      {"onset_pre_window_patients", "kept_as_negatives_when_nonempty"}};
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const auto& fr : report.per_fold) {
    nlohmann::ordered_json fj;
    fj["fold"] = fr.fold;
    fj["auroc"] = fr.auroc;
    fj["sensitivity"] = fr.sensitivity;
    fj["specificity"] = fr.specificity;
    fj["counts"] = {{"tp", fr.counts.tp},
                    {"fp", fr.counts.fp},
                    {"tn", fr.counts.tn},
                    {"fn", fr.counts.fn}};
    fj["n_rows"] = fr.n_rows;
    fj["n_patients"] = fr.n_patients;
    fj["roc"] = roc_to_json(fr.roc);
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  j["mean_auroc"] = report.mean_auroc;
  j["mean_sensitivity"] = report.mean_sensitivity;
  j["mean_specificity"] = report.mean_specificity;
  return j;
}

}  // namespace

RunOutput run_experiment(const RunConfig& cfg, const Cohort& raw) {
  if (cfg.folds < 2) throw ConfigError("folds must be >= 2");
  if (cfg.start_day < 1 || cfg.end_day < cfg.start_day)
    throw ConfigError("day range must satisfy 1 <= start_day <= end_day");
  if (cfg.threshold < 0.0 || cfg.threshold > 1.0)
    throw ConfigError("threshold must be in [0, 1]");

  Cohort selected = select_groups(raw, cfg.groups);
  FilterStats filter;
  Cohort filtered = filter_cohort(selected, cfg.start_day, cfg.end_day, &filter);
  if (filtered.patients.empty())
    throw DataError("no patients remain after day-range filtering");
  Cohort imputed = carry_forward_impute(filtered);

  const CascadeSpec spec = cfg.cascade_spec();
  EvalReport report = cross_validate(imputed, spec, cfg.folds, cfg.threshold,
                                     cfg.seed, cfg.threads);
  report.config_echo = run_config_json(cfg);

  if (!cfg.dump_features_csv.empty()) {
    FeatureFrame master = assemble_design_matrix(
        shift_cohort(imputed, cfg.target_horizon), spec.window);
    write_feature_csv(master, cfg.dump_features_csv);
  }
  if (!cfg.save_model_dir.empty()) {
    CascadeSpec final_spec = spec;
    final_spec.params.seed = derive_seed(cfg.seed, "final_params");
    final_spec.sampler.seed = derive_seed(cfg.seed, "final_sampler");
    CascadeModel model = train_cascade(imputed, final_spec);
    Preprocess pre;
    pre.ingest_schema = raw.schema;
    pre.groups = cfg.groups;
    pre.start_day = cfg.start_day;
    pre.end_day = cfg.end_day;
    model.preprocess = std::move(pre);
    save_cascade(model, cfg.save_model_dir);
  }

  RunOutput out;
  out.filter = filter;
  out.report_json = build_report_json(cfg, report, filter);
  out.report = std::move(report);
  return out;
}

RunOutput execute_run(const RunConfig& cfg) {
  if (cfg.input_csv.empty()) throw ConfigError("run: --input is required");
  if (cfg.schema_json.empty()) throw ConfigError("run: --schema is required");
  const FeatureSchema schema = schema_from_json_file(cfg.schema_json);
  const Cohort raw = ingest_csv(cfg.input_csv, schema);
  RunOutput out = run_experiment(cfg, raw);
  if (!cfg.out_report.empty()) write_report_file(out, cfg.out_report);
  if (!cfg.roc_prefix.empty()) write_roc_csvs(out.report, cfg.roc_prefix);
  return out;
}

void write_report_file(const RunOutput& out, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write report file: " + path);
  f << out.report_json.dump(2) << "\n";
}

void write_roc_csvs(const EvalReport& report, const std::string& prefix) {
  for (const auto& fr : report.per_fold) {
    const std::string path = prefix + "_fold" + std::to_string(fr.fold) + ".csv";
    std::ofstream f(path);
    if (!f) throw DataError("cannot write ROC file: " + path);
    f << "fpr,tpr,threshold\n";
    for (const auto& pt : fr.roc) {
      f << format_double(pt.fpr) << "," << format_double(pt.tpr) << ",";
      if (std::isinf(pt.threshold))
        f << "inf";
      else
        f << format_double(pt.threshold);
      f << "\n";
    }
  }
}

}  // namespace sepcast
