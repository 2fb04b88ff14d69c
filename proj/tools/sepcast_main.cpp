#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "sepcast/run.hpp"

namespace {

using namespace sepcast;

uint64_t default_seed() {
  if (const char* env = std::getenv("SEPCAST_SEED")) {
    long v = 0;
    if (parse_int(env, v) && v >= 0) return static_cast<uint64_t>(v);
    throw ConfigError("SEPCAST_SEED must be a nonnegative integer");
  }
  return 1;
}

std::set<Group> parse_groups(const std::string& list) {
  std::set<Group> groups;
  std::string cur;
  auto flush = [&]() {
    if (!cur.empty()) groups.insert(group_from_string(cur));
    cur.clear();
  };
  for (char c : list) {
    if (c == ',') flush();
    else cur += c;
  }
  flush();
  if (groups.empty()) throw ConfigError("--groups needs at least one of g1..g4");
  return groups;
}

int cmd_synth(const SynthConfig& cfg, const std::string& out_csv,
              const std::string& out_schema) {
  Cohort cohort = generate_cohort(cfg);
  write_csv(cohort, out_csv);
  if (!out_schema.empty()) schema_to_json_file(cohort.schema, out_schema);
  long events = 0;
  for (const auto& p : cohort.patients)
    if ((p.labels.onset.array() == 1).any()) ++events;
  std::cout << "wrote " << cohort.patients.size() << " patients ("
            << events << " with events, " << cohort.total_rows()
            << " rows) to " << out_csv << "\n";
  return 0;
}

int cmd_run(const RunConfig& cfg) {
  RunOutput out = execute_run(cfg);
  std::cout << "mean AUROC " << format_double(out.report.mean_auroc)
            << "  sensitivity " << format_double(out.report.mean_sensitivity)
            << "  specificity " << format_double(out.report.mean_specificity)
            << "  (" << out.report.per_fold.size() << " folds)\n";
  if (!cfg.out_report.empty())
    std::cout << "report written to " << cfg.out_report << "\n";
  return 0;
}

struct ExplainArgs {
  std::string model_dir;
  std::string input_csv;
  std::string patient;
  int hour = -1;
  long row_index = -1;
  int n = 500;
  int top_k = 5;
  uint64_t seed = 1;
  std::string out_json;
};

int cmd_explain(const ExplainArgs& args) {
  CascadeModel model = load_cascade(args.model_dir);
  if (!model.preprocess)
    throw DataError("model at " + args.model_dir +
                    " carries no preprocessing metadata; retrain with --save-model");
  const Preprocess& pre = *model.preprocess;

  Cohort raw = ingest_csv(args.input_csv, pre.ingest_schema);
  Cohort imputed = carry_forward_impute(
      filter_cohort(select_groups(raw, pre.groups), pre.start_day, pre.end_day));
  FeatureFrame base = assemble_design_matrix(
      shift_cohort(imputed, model.spec.target_horizon), model.spec.window);
  if (base.n() == 0) throw DataError("no scorable rows in the cohort");

  long row = -1;
  if (!args.patient.empty()) {
    for (long i = 0; i < base.n(); ++i)
      if (base.rows[i].patient_id == args.patient &&
          (args.hour < 0 || base.rows[i].hour == args.hour)) {
        row = i;
        break;
      }
    if (row < 0)
      throw DataError("no scorable row for patient '" + args.patient + "'" +
                      (args.hour >= 0 ? " at hour " + std::to_string(args.hour)
                                      : ""));
  } else if (args.row_index >= 0) {
    if (args.row_index >= base.n())
      throw DataError("--row out of range (frame has " +
                      std::to_string(base.n()) + " rows)");
    row = args.row_index;
  } else {
    Rng rng(derive_seed(args.seed, "explain_pick"));
    std::uniform_int_distribution<long> pick(0, base.n() - 1);
    row = pick(rng);
  }

  // Lift the base row into the target feature space via the intermediates.
  const auto horizons = model.spec.intermediate_horizons();
  VectorXd instance(base.values.cols() + static_cast<long>(horizons.size()));
  instance.head(base.values.cols()) = base.values.row(row);
  for (size_t hi = 0; hi < horizons.size(); ++hi) {
    const auto& m = model.intermediates.at(horizons[hi]);
    instance[base.values.cols() + static_cast<long>(hi)] =
        predict_proba_values(m, base.values.row(row), base.columns)[0];
  }

  const std::string id = base.rows[row].patient_id + "@" +
                         std::to_string(base.rows[row].hour);
  Explanation exp =
      local_surrogate(model, instance, args.n, args.top_k, args.seed, id);
  const auto gain_top = rank_features(model, args.top_k);

  nlohmann::ordered_json j;
  j["model"] = args.model_dir;
  j["local_surrogate"] = exp.to_json();
  nlohmann::ordered_json gains = nlohmann::ordered_json::array();
  for (const auto& [name, gain] : gain_top)
    gains.push_back({{"feature", name}, {"gain", gain}});
  j["gain_top"] = std::move(gains);
  if (!args.out_json.empty()) {
    std::ofstream f(args.out_json);
    if (!f) throw DataError("cannot write explanation: " + args.out_json);
    f << j.dump(2) << "\n";
  }
  std::cout << "instance " << id << " (model prob "
            << format_double(exp.model_prob) << ")\n"
            << exp.to_text();
  if (exp.ridge_fallback)
    std::cout << "note: singular weighted design, ridge fallback used\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"early clinical event prediction with horizon cascades"};
  app.require_subcommand(1);

  // synth
  SynthConfig synth_cfg;
  std::string synth_out = "cohort.csv";
  std::string synth_schema_out = "schema.json";
  std::string synth_mode = "progressive";
  double miss_g1 = 0.05, miss_g2 = 0.02, miss_g3 = 0.05, miss_g4 = 0.90;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort CSV");
  synth->add_option("--out", synth_out, "cohort CSV path");
  synth->add_option("--schema-out", synth_schema_out, "schema JSON path");
  synth->add_option("--patients", synth_cfg.n_patients, "number of patients");
  synth->add_option("--event-rate", synth_cfg.event_rate, "fraction with events");
  synth->add_option("--stay-min", synth_cfg.stay_hours_min, "min stay hours");
  synth->add_option("--stay-max", synth_cfg.stay_hours_max, "max stay hours");
  synth->add_option("--mode", synth_mode, "progressive|sudden");
  synth->add_option("--ramp-hours", synth_cfg.pre_onset_ramp_hours,
                    "progressive pre-onset ramp length");
  synth->add_option("--signal-scale", synth_cfg.signal_scale, "drift multiplier");
  synth->add_option("--onset-day-min", synth_cfg.onset_day_min, "earliest onset day");
  synth->add_option("--onset-day-max", synth_cfg.onset_day_max, "latest onset day");
  synth->add_option("--min-onset-hour", synth_cfg.min_onset_hour, "earliest onset hour");
  synth->add_option("--missing-g1", miss_g1, "G1 missing rate");
  synth->add_option("--missing-g2", miss_g2, "G2 missing rate");
  synth->add_option("--missing-g3", miss_g3, "G3 missing rate");
  synth->add_option("--missing-g4", miss_g4, "G4 missing rate");
  auto* synth_seed = synth->add_option("--seed", synth_cfg.seed, "generator seed");

  // run
  RunConfig run_cfg;
  std::string run_groups = "g1,g2,g3,g4";
  std::string run_features = "delta+stats";
  std::string run_leakage = "oof";
  int run_subsets = 1;
  bool no_undersample = false;
  auto* run = app.add_subcommand("run", "cross-validated cascade experiment");
  run->add_option("--input", run_cfg.input_csv, "cohort CSV")->required();
  run->add_option("--schema", run_cfg.schema_json, "schema JSON")->required();
  run->add_option("--subsets", run_subsets, "1, 2 or 6");
  run->add_option("--features", run_features, "baseline|delta|stats|delta+stats");
  run->add_option("--groups", run_groups, "comma list of g1..g4");
  run->add_option("--window", run_cfg.window, "observation window w");
  run->add_option("--horizon", run_cfg.target_horizon, "target horizon hours");
  run->add_option("--folds", run_cfg.folds, "cross-validation folds");
  run->add_option("--threshold", run_cfg.threshold, "decision threshold");
  run->add_option("--start-day", run_cfg.start_day, "first retained stay day");
  run->add_option("--end-day", run_cfg.end_day, "last retained stay day");
  run->add_option("--rounds", run_cfg.params.n_rounds, "boosting rounds");
  run->add_option("--depth", run_cfg.params.max_depth, "max tree depth");
  run->add_option("--eta", run_cfg.params.learning_rate, "learning rate");
  run->add_option("--lambda", run_cfg.params.reg_lambda, "L2 on leaf weights");
  run->add_option("--gamma", run_cfg.params.gamma, "min split gain");
  run->add_option("--min-child-weight", run_cfg.params.min_child_weight,
                  "min child hessian sum");
  run->add_option("--base-score", run_cfg.params.base_score, "prior probability");
  run->add_option("--oversample-ratio", run_cfg.sampler.oversample_ratio,
                  "minority target vs majority");
  run->add_flag("--no-undersample", no_undersample,
                "skip undersampling to parity");
  run->add_option("--leakage", run_leakage, "oof|insample");
  run->add_option("--oof-folds", run_cfg.oof_folds, "internal OOF folds");
  run->add_option("--threads", run_cfg.threads, "fold worker cap");
  run->add_option("--out", run_cfg.out_report, "report JSON path");
  run->add_option("--roc-prefix", run_cfg.roc_prefix, "per-fold ROC CSV prefix");
  run->add_option("--dump-features", run_cfg.dump_features_csv,
                  "design matrix CSV for debugging");
  run->add_option("--save-model", run_cfg.save_model_dir,
                  "train on all data and save the cascade here");
  auto* run_seed = run->add_option("--seed", run_cfg.seed, "master seed");

  // explain
  ExplainArgs ex;
  auto* explain = app.add_subcommand("explain", "local surrogate explanation");
  explain->add_option("--model", ex.model_dir, "saved cascade directory")->required();
  explain->add_option("--input", ex.input_csv, "cohort CSV")->required();
  explain->add_option("--patient", ex.patient, "patient id to explain");
  explain->add_option("--hour", ex.hour, "hour within the patient");
  explain->add_option("--row", ex.row_index, "frame row index");
  explain->add_option("--n", ex.n, "perturbation count");
  explain->add_option("--top-k", ex.top_k, "features to report");
  explain->add_option("--out", ex.out_json, "explanation JSON path");
  auto* explain_seed = explain->add_option("--seed", ex.seed, "surrogate seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      if (synth_seed->count() == 0) synth_cfg.seed = default_seed();
      synth_cfg.signal_mode = signal_mode_from_string(synth_mode);
      synth_cfg.missing_rate = {{Group::G1, miss_g1},
                                {Group::G2, miss_g2},
                                {Group::G3, miss_g3},
                                {Group::G4, miss_g4}};
      return cmd_synth(synth_cfg, synth_out, synth_schema_out);
    }
    if (run->parsed()) {
      if (run_seed->count() == 0) run_cfg.seed = default_seed();
      run_cfg.subsets = cascade_mode_from_subsets(run_subsets);
      run_cfg.features = feature_set_from_string(run_features);
      run_cfg.groups = parse_groups(run_groups);
      run_cfg.sampler.undersample_to_parity = !no_undersample;
      if (run_leakage == "oof") run_cfg.leakage_control = LeakageControl::oof;
      else if (run_leakage == "insample")
        run_cfg.leakage_control = LeakageControl::insample;
      else throw ConfigError("--leakage must be oof or insample");
      return cmd_run(run_cfg);
    }
    if (explain->parsed()) {
      if (explain_seed->count() == 0) ex.seed = default_seed();
      return cmd_explain(ex);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateClassError& e) {
    std::cerr << "degenerate class error: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
