#include "sepcast/eval.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <thread>

namespace sepcast {

namespace {

struct ClassCounts {
  long n_pos = 0, n_neg = 0;
};

ClassCounts count_classes(const VectorXd& scores, const VectorXi& labels,
                          const char* op) {
  if (scores.size() != labels.size())
    throw DataError(std::string(op) + ": scores and labels differ in length");
  if (scores.size() == 0) throw DataError(std::string(op) + ": empty input");
  ClassCounts c;
  for (long i = 0; i < labels.size(); ++i)
    (labels[i] == 1 ? c.n_pos : c.n_neg)++;
  if (c.n_pos == 0 || c.n_neg == 0)
    throw DegenerateClassError(std::string(op) + ": needs both classes present");
  return c;
}

std::vector<long> order_by_score_desc(const VectorXd& scores) {
  std::vector<long> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0L);
  std::sort(idx.begin(), idx.end(), [&scores](long a, long b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  });
  return idx;
}

}  // namespace

double auroc(const VectorXd& scores, const VectorXi& labels) {
  const auto c = count_classes(scores, labels, "auroc");
  const auto idx = order_by_score_desc(scores);
  const long n = scores.size();

  // Exact in integers: twice the tie-weighted pair count.
  unsigned long long num2 = 0;
  long long tp = 0;
  long i = 0;
  while (i < n) {
    long j = i;
    long long pos_g = 0, neg_g = 0;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? pos_g : neg_g)++;
      ++j;
    }
    num2 += static_cast<unsigned long long>(neg_g) *
            static_cast<unsigned long long>(2 * tp + pos_g);
    tp += pos_g;
    i = j;
  }
  return static_cast<double>(num2) /
         (2.0 * static_cast<double>(c.n_pos) * static_cast<double>(c.n_neg));
}

std::vector<RocPoint> roc_points(const VectorXd& scores, const VectorXi& labels) {
  const auto c = count_classes(scores, labels, "roc_points");
  const auto idx = order_by_score_desc(scores);
  const long n = scores.size();

  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  long tp = 0, fp = 0;
  long i = 0;
  while (i < n) {
    long j = i;
    const double s = scores[idx[i]];
    while (j < n && scores[idx[j]] == s) {
      (labels[idx[j]] == 1 ? tp : fp)++;
      ++j;
    }
    points.push_back({static_cast<double>(fp) / static_cast<double>(c.n_neg),
                      static_cast<double>(tp) / static_cast<double>(c.n_pos), s});
    i = j;
  }
  return points;
}

SensSpec sensitivity_specificity(const VectorXd& scores, const VectorXi& labels,
                                 double threshold) {
  count_classes(scores, labels, "sensitivity_specificity");
  SensSpec out;
  for (long i = 0; i < scores.size(); ++i) {
    const bool predicted_pos = scores[i] >= threshold;
    if (labels[i] == 1)
      (predicted_pos ? out.counts.tp : out.counts.fn)++;
    else
      (predicted_pos ? out.counts.fp : out.counts.tn)++;
  }
  out.sensitivity = static_cast<double>(out.counts.tp) /
                    static_cast<double>(out.counts.tp + out.counts.fn);
  out.specificity = static_cast<double>(out.counts.tn) /
                    static_cast<double>(out.counts.fp + out.counts.tn);
  return out;
}

namespace {

Cohort cohort_subset(const Cohort& cohort, const PatientFolds& folds, int fold,
                     bool in_fold) {
  Cohort out;
  out.schema = cohort.schema;
  for (const auto& p : cohort.patients)
    if ((folds.fold_of.at(p.patient_id) == fold) == in_fold)
      out.patients.push_back(p);
  return out;
}

FoldReport evaluate_fold(const Cohort& cohort, const PatientFolds& folds,
                         int fold, const CascadeSpec& spec, double threshold,
                         uint64_t seed) {
  Cohort train = cohort_subset(cohort, folds, fold, false);
  Cohort test = cohort_subset(cohort, folds, fold, true);

  CascadeSpec fold_spec = spec;
  fold_spec.params.seed =
      derive_seed(seed, "cv_params", static_cast<uint64_t>(fold));
  fold_spec.sampler.seed =
      derive_seed(seed, "cv_sampler", static_cast<uint64_t>(fold));
  CascadeModel model = train_cascade(train, fold_spec);

  Cohort shifted = shift_cohort(test, spec.target_horizon);
  if (shifted.patients.empty())
    throw DataError("evaluation fold " + std::to_string(fold) +
                    " has no scorable rows");
  FeatureFrame master = assemble_design_matrix(shifted, spec.window);
  const VectorXd probs = predict_cascade_frame(model, master);

  FoldReport fr;
  fr.fold = fold;
  fr.n_rows = master.n();
  fr.n_patients = static_cast<long>(test.patients.size());
  fr.auroc = auroc(probs, master.target);
  const SensSpec ss = sensitivity_specificity(probs, master.target, threshold);
  fr.sensitivity = ss.sensitivity;
  fr.specificity = ss.specificity;
  fr.counts = ss.counts;
  fr.roc = roc_points(probs, master.target);
  return fr;
}

}  // namespace

EvalReport cross_validate(const Cohort& cohort, const CascadeSpec& spec, int k,
                          double threshold, uint64_t seed, int n_threads) {
  if (k < 2) throw ConfigError("cross_validate: k must be >= 2");
  spec.validate();
  const PatientFolds folds =
      assign_patient_folds(cohort, k, derive_seed(seed, "cv_folds"));

  EvalReport report;
  report.k = k;
  report.threshold = threshold;
  report.seed = seed;
  report.per_fold.resize(k);
  std::vector<std::exception_ptr> errors(k);

  const int workers = std::max(1, std::min(n_threads, k));
  if (workers == 1) {
    for (int fold = 0; fold < k; ++fold) {
      try {
        report.per_fold[fold] =
            evaluate_fold(cohort, folds, fold, spec, threshold, seed);
      } catch (...) {
        errors[fold] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    auto work = [&]() {
      for (int fold = next.fetch_add(1); fold < k; fold = next.fetch_add(1)) {
        try {
          report.per_fold[fold] =
              evaluate_fold(cohort, folds, fold, spec, threshold, seed);
        } catch (...) {
          errors[fold] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  // Deterministic error surfacing: lowest fold index wins.
  for (int fold = 0; fold < k; ++fold)
    if (errors[fold]) std::rethrow_exception(errors[fold]);

  for (const auto& fr : report.per_fold) {
    report.mean_auroc += fr.auroc;
    report.mean_sensitivity += fr.sensitivity;
    report.mean_specificity += fr.specificity;
  }
  report.mean_auroc /= k;
  report.mean_sensitivity /= k;
  report.mean_specificity /= k;
  return report;
}

}  // namespace sepcast
