#pragma once

#include <json.hpp>

#include "sepcast/cascade.hpp"

namespace sepcast {

struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

struct RocPoint {
  double fpr = 0.0, tpr = 0.0;
  double threshold = 0.0;
};

/// Probability that a random positive outranks a random negative, ties
/// counted half (Mann-Whitney); identical to the trapezoidal area under the
/// tie-grouped ROC curve. Throws DegenerateClassError on a single class.
double auroc(const VectorXd& scores, const VectorXi& labels);

/// ROC sweep over distinct score thresholds, (0,0) to (1,1); points carry
/// the threshold producing them ((0,0) carries +inf).
std::vector<RocPoint> roc_points(const VectorXd& scores, const VectorXi& labels);

struct SensSpec {
  double sensitivity = 0.0;
  double specificity = 0.0;
  ConfusionCounts counts;
};

/// Positive iff score >= threshold; sensitivity TP/(TP+FN),
/// specificity TN/(FP+TN).
SensSpec sensitivity_specificity(const VectorXd& scores, const VectorXi& labels,
                                 double threshold);

struct FoldReport {
  int fold = 0;
  double auroc = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  ConfusionCounts counts;
  std::vector<RocPoint> roc;
  long n_rows = 0;
  long n_patients = 0;
};

struct EvalReport {
  std::vector<FoldReport> per_fold;
  double mean_auroc = 0.0;
  double mean_sensitivity = 0.0;
  double mean_specificity = 0.0;
  int k = 0;
  double threshold = 0.5;
  uint64_t seed = 0;
  nlohmann::ordered_json config_echo;  // filled by the CLI layer
};

/// Patient-level stratified k-fold cross-validation: per fold, a cascade is
/// trained on the other folds (resampling inside) and evaluated on the
/// untouched fold. The cohort must be filtered and imputed. Fold work may
/// run on up to n_threads workers; results are independent of the count.
EvalReport cross_validate(const Cohort& cohort, const CascadeSpec& spec, int k,
                          double threshold, uint64_t seed, int n_threads = 1);

}  // namespace sepcast
