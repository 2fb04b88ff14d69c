#pragma once

#include "sepcast/eval.hpp"
#include "sepcast/explain.hpp"
#include "sepcast/synth.hpp"

namespace sepcast {

enum class FeatureSet { baseline, delta, stats, delta_stats };

std::string to_string(FeatureSet fs);
FeatureSet feature_set_from_string(const std::string& s);
WindowSpec window_of(FeatureSet fs, int w);

struct RunConfig {
  std::string input_csv;
  std::string schema_json;

  std::set<Group> groups = {Group::G1, Group::G2, Group::G3, Group::G4};
  FeatureSet features = FeatureSet::delta_stats;
  CascadeMode subsets = CascadeMode::one_subset;
  int window = 6;
  int target_horizon = 6;
  int folds = 5;
  double threshold = 0.5;
  int start_day = 2;
  int end_day = 14;
  TrainParams params;
  SamplerConfig sampler;
  LeakageControl leakage_control = LeakageControl::oof;
  int oof_folds = 5;
  uint64_t seed = 1;
  int threads = 1;

  // Output paths; never part of the config echo or hash.
  std::string out_report;
  std::string roc_prefix;
  std::string dump_features_csv;
  std::string save_model_dir;

  CascadeSpec cascade_spec() const;
};

/// Config echo embedded in every artifact. Excludes outputs and thread
/// count, so equal hashes mean byte-identical reports.
nlohmann::ordered_json run_config_json(const RunConfig& cfg);
std::string config_hash_hex(const nlohmann::ordered_json& config);

struct RunOutput {
  EvalReport report;
  FilterStats filter;
  nlohmann::ordered_json report_json;
};

/// The full experiment on an already-ingested raw cohort:
/// select groups -> filter -> impute -> cross-validated cascade -> report.
RunOutput run_experiment(const RunConfig& cfg, const Cohort& raw);

/// File-level entry point used by the CLI: ingests, runs, writes the report
/// and any optional artifacts (ROC CSVs, feature dump, final saved model).
RunOutput execute_run(const RunConfig& cfg);

void write_report_file(const RunOutput& out, const std::string& path);
void write_roc_csvs(const EvalReport& report, const std::string& prefix);

}  // namespace sepcast
