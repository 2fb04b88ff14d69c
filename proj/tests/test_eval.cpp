#include <doctest.h>

#include <cmath>

#include "sepcast/eval.hpp"
#include "sepcast/run.hpp"
#include "sepcast/synth.hpp"
#include "test_util.hpp"

using namespace sepcast;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<long>(v.size()));
  long i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

VectorXi ivec(std::initializer_list<int> v) {
  VectorXi out(static_cast<long>(v.size()));
  long i = 0;
  for (int x : v) out[i++] = x;
  return out;
}

// O(n^2) oracle: all positive/negative pairs, ties half.
double all_pairs_auroc(const VectorXd& s, const VectorXi& y) {
  double wins = 0.0;
  long pairs = 0;
  for (long i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (long j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

double trapezoid_area(const std::vector<RocPoint>& pts) {
  double area = 0.0;
  for (size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) * 0.5;
  return area;
}

}  // namespace

TEST_CASE("auroc golden cases") {
  CHECK(auroc(vec({0.9, 0.8, 0.1}), ivec({1, 1, 0})) == 1.0);
  CHECK(auroc(vec({0.5, 0.5}), ivec({1, 0})) == 0.5);
  CHECK(auroc(vec({0.1, 0.9}), ivec({1, 0})) == 0.0);
  CHECK_THROWS_AS(auroc(vec({0.1, 0.9}), ivec({1, 1})), DegenerateClassError);
}

TEST_CASE("auroc equals the all-pairs oracle and the ROC trapezoid") {
  Rng rng(77);
  std::uniform_int_distribution<int> len(2, 50);
  std::uniform_int_distribution<int> grid(0, 9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = len(rng);
    VectorXd s(n);
    VectorXi y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = grid(rng) / 9.0;  // coarse grid forces ties
      y[i] = unit(rng) < 0.4 ? 1 : 0;
    }
    y[0] = 0;
    y[n - 1] = 1;
    const double a = auroc(s, y);
    CHECK(a == doctest::Approx(all_pairs_auroc(s, y)).epsilon(1e-9));
    CHECK(a == doctest::Approx(trapezoid_area(roc_points(s, y))).epsilon(1e-9));
  }
}

TEST_CASE("auroc is invariant under monotone transforms; complement flips") {
  Rng rng(78);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 60;
  VectorXd s(n);
  VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    s[i] = gauss(rng);  // continuous: ties have probability zero
    y[i] = unit(rng) < 0.5 ? 1 : 0;
  }
  y[0] = 0;
  y[1] = 1;
  const double a = auroc(s, y);
  VectorXd expd = s.unaryExpr([](double v) { return std::exp(v); });
  CHECK(auroc(expd, y) == doctest::Approx(a).epsilon(1e-12));
  VectorXd neg = -s;
  CHECK(auroc(neg, y) + a == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sensitivity and specificity golden cases") {
  auto all_above = sensitivity_specificity(vec({0.9, 0.8, 0.7}), ivec({1, 0, 1}), 0.1);
  CHECK(all_above.sensitivity == 1.0);
  CHECK(all_above.specificity == 0.0);

  auto exact = sensitivity_specificity(vec({0.7, 0.2}), ivec({1, 0}), 0.5);
  CHECK(exact.sensitivity == 1.0);
  CHECK(exact.specificity == 1.0);
  CHECK(exact.counts.tp == 1);
  CHECK(exact.counts.tn == 1);

  CHECK_THROWS_AS(sensitivity_specificity(vec({0.4}), ivec({1}), 0.5),
                  DegenerateClassError);
}

TEST_CASE("sensitivity/specificity match an independent recount") {
  Rng rng(79);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 30;
    VectorXd s(n);
    VectorXi y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = unit(rng);
      y[i] = unit(rng) < 0.5 ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    const double thr = unit(rng);
    auto got = sensitivity_specificity(s, y, thr);
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (int i = 0; i < n; ++i) {
      if (y[i] == 1 && s[i] >= thr) ++tp;
      if (y[i] == 1 && s[i] < thr) ++fn;
      if (y[i] == 0 && s[i] >= thr) ++fp;
      if (y[i] == 0 && s[i] < thr) ++tn;
    }
    CHECK(got.counts.tp == tp);
    CHECK(got.counts.fp == fp);
    CHECK(got.counts.tn == tn);
    CHECK(got.counts.fn == fn);
    CHECK(got.sensitivity == static_cast<double>(tp) / (tp + fn));
    CHECK(got.specificity == static_cast<double>(tn) / (fp + tn));
    CHECK(got.counts.total() == n);
  }
}

namespace {

Cohort small_eval_cohort(uint64_t seed, int patients = 24) {
  SynthConfig cfg;
  cfg.n_patients = patients;
  cfg.event_rate = 0.4;
  cfg.stay_hours_min = 40;
  cfg.stay_hours_max = 70;
  cfg.seed = seed;
  cfg.missing_rate = {{Group::G1, 0.0}, {Group::G2, 0.0},
                      {Group::G3, 0.0}, {Group::G4, 0.3}};
  Cohort raw = generate_cohort(cfg);
  Cohort g1 = select_groups(raw, {Group::G1});
  return carry_forward_impute(filter_cohort(g1, 2, 14));
}

CascadeSpec quick_spec() {
  CascadeSpec spec;
  spec.mode = CascadeMode::one_subset;
  spec.params.n_rounds = 8;
  spec.params.max_depth = 2;
  spec.window.enable_stats = false;
  return spec;
}

}  // namespace

TEST_CASE("cross_validate partitions patients and never resamples eval rows") {
  Cohort cohort = small_eval_cohort(5);
  EvalReport report = cross_validate(cohort, quick_spec(), 2, 0.5, 123);
  REQUIRE(report.per_fold.size() == 2);

  long patients_seen = 0, rows_seen = 0;
  for (const auto& fr : report.per_fold) {
    patients_seen += fr.n_patients;
    rows_seen += fr.n_rows;
    // confusion counts must add up to the fold's raw row count
    CHECK(fr.counts.total() == fr.n_rows);
    CHECK(fr.auroc >= 0.0);
    CHECK(fr.auroc <= 1.0);
  }
  CHECK(patients_seen == static_cast<long>(cohort.patients.size()));

  long scorable_rows = 0;
  for (const auto& p : cohort.patients)
    if (p.rows() > 6) scorable_rows += p.rows() - 6;
  CHECK(rows_seen == scorable_rows);
}

TEST_CASE("cross_validate is deterministic and means are arithmetic") {
  Cohort cohort = small_eval_cohort(6);
  EvalReport a = cross_validate(cohort, quick_spec(), 3, 0.5, 9);
  EvalReport b = cross_validate(cohort, quick_spec(), 3, 0.5, 9);
  REQUIRE(a.per_fold.size() == b.per_fold.size());
  for (size_t i = 0; i < a.per_fold.size(); ++i) {
    CHECK(a.per_fold[i].auroc == b.per_fold[i].auroc);
    CHECK(a.per_fold[i].counts.tp == b.per_fold[i].counts.tp);
  }
  double mean = 0.0;
  for (const auto& fr : a.per_fold) mean += fr.auroc;
  mean /= static_cast<double>(a.per_fold.size());
  CHECK(a.mean_auroc == doctest::Approx(mean).epsilon(1e-12));

  EvalReport c = cross_validate(cohort, quick_spec(), 3, 0.5, 10);
  bool identical = true;
  for (size_t i = 0; i < a.per_fold.size(); ++i)
    identical = identical && a.per_fold[i].auroc == c.per_fold[i].auroc;
  CHECK_FALSE(identical);
}

TEST_CASE("cross_validate needs at least k event patients") {
  Cohort cohort = small_eval_cohort(7, 16);
  // drop all but one event patient
  Cohort pruned;
  pruned.schema = cohort.schema;
  bool kept_event = false;
  for (const auto& p : cohort.patients) {
    const bool has_event = (p.labels.onset.array() == 1).any();
    if (has_event && kept_event) continue;
    kept_event = kept_event || has_event;
    pruned.patients.push_back(p);
  }
  CHECK_THROWS_AS(cross_validate(pruned, quick_spec(), 2, 0.5, 1),
                  DegenerateClassError);
}

TEST_CASE("cross_validate results do not depend on the worker count") {
  Cohort cohort = small_eval_cohort(8);
  EvalReport a = cross_validate(cohort, quick_spec(), 3, 0.5, 4, 1);
  EvalReport b = cross_validate(cohort, quick_spec(), 3, 0.5, 4, 4);
  for (size_t i = 0; i < a.per_fold.size(); ++i) {
    CHECK(a.per_fold[i].auroc == b.per_fold[i].auroc);
    CHECK(a.per_fold[i].sensitivity == b.per_fold[i].sensitivity);
  }
}
