#pragma once

#include <map>
#include <optional>

#include "sepcast/gbdt.hpp"
#include "sepcast/labeling.hpp"
#include "sepcast/sampling.hpp"

namespace sepcast {

enum class CascadeMode { one_subset, two_subsets, six_subsets };

std::string to_string(CascadeMode mode);
CascadeMode cascade_mode_from_subsets(int subsets);  // 1, 2 or 6
int subsets_of(CascadeMode mode);

/// oof: probabilities fed to the target model's training rows come from
/// internal out-of-fold models (no model scores a patient it saw).
/// insample: the full-fit intermediate scores its own training rows, the
/// naive reading of the method description.
enum class LeakageControl { oof, insample };

struct CascadeSpec {
  int target_horizon = 6;
  CascadeMode mode = CascadeMode::two_subsets;
  WindowSpec window;
  TrainParams params;
  SamplerConfig sampler;
  LeakageControl leakage_control = LeakageControl::oof;
  int oof_folds = 5;

  /// [] for one_subset, [3] for two_subsets, [1..5] for six_subsets.
  std::vector<int> intermediate_horizons() const;
  void validate() const;
};

std::string subset_prob_column(int horizon);  // "subset_prob_<h>hr"

struct PatientFolds {
  std::map<std::string, int> fold_of;
  int k = 0;
};

/// Patient-level fold assignment, stratified by patient-has-event.
/// Throws DegenerateClassError when fewer event patients than folds exist.
PatientFolds assign_patient_folds(const Cohort& cohort, int k, uint64_t seed);

/// Per-row provenance of out-of-fold intermediate probabilities.
struct OofAudit {
  int horizon = 0;
  std::vector<RowKey> rows;
  std::vector<int> scoring_fold;  // fold excluded from the scoring model
  std::map<std::string, int> patient_fold;
};

struct OofResult {
  VectorXd prob;
  OofAudit audit;
};

/// How the training cohort was produced from raw input; saved with the
/// model so the explain path can rebuild features consistently.
struct Preprocess {
  FeatureSchema ingest_schema;
  std::set<Group> groups = {Group::G1, Group::G2, Group::G3, Group::G4};
  int start_day = 2;
  int end_day = 14;
};

struct CascadeModel {
  CascadeSpec spec;
  std::map<int, GbdtModel> intermediates;  // horizon -> full-fit model
  GbdtModel target;
  std::optional<Preprocess> preprocess;

  // Perturbation statistics from the unresampled target training frame,
  // consumed by the local surrogate explainer.
  std::vector<std::string> target_features;
  VectorXd feature_mean;
  VectorXd feature_std;
  std::vector<uint8_t> feature_gaussian;  // 0: resample from marginal pool
  std::vector<std::vector<double>> feature_marginals;

  // Training-time provenance; in-memory only, not serialized.
  std::vector<OofAudit> train_audit;
};

/// Cohort with onset labels shifted by h; patients with too few rows for the
/// horizon are dropped (optionally reported).
Cohort shift_cohort(const Cohort& cohort, int h,
                    std::vector<std::string>* skipped = nullptr);

/// Trains the intermediate horizon models and the target model. The cohort
/// must already be filtered (truncated, clipped) and imputed. Resampling is
/// applied per model on that model's own training rows.
CascadeModel train_cascade(const Cohort& cohort, const CascadeSpec& spec);

/// Out-of-fold intermediate probabilities at the target-horizon row set:
/// each row is scored by a model whose training folds excluded the row's
/// patient. `folds` lets a caller reuse one assignment across horizons.
OofResult out_of_fold_probs(const Cohort& cohort, int horizon,
                            const CascadeSpec& spec, int k,
                            const PatientFolds* folds = nullptr);

struct CascadePrediction {
  std::vector<RowKey> rows;
  VectorXd prob;
};

/// Scores every row of an imputed cohort: intermediates first, their
/// outputs appended as features, then the target model.
CascadePrediction predict_cascade(const CascadeModel& model, const Cohort& cohort);

/// Same scoring path over a prebuilt base-feature frame (target-horizon rows).
VectorXd predict_cascade_frame(const CascadeModel& model,
                               const FeatureFrame& base_frame);

/// Directory layout: manifest.json plus one model JSON per horizon.
void save_cascade(const CascadeModel& model, const std::string& dir);
CascadeModel load_cascade(const std::string& dir);

}  // namespace sepcast
