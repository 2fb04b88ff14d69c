#include <doctest.h>

#include <cmath>

#include "sepcast/features.hpp"
#include "sepcast/labeling.hpp"
#include "test_util.hpp"

using namespace sepcast;

namespace {

FeatureSchema one_col_schema() {
  FeatureSchema s;
  s.columns = {{"heart_rate", Group::G1, true}};
  return s;
}

PatientSeries series_of(const std::vector<double>& vals) {
  PatientSeries p;
  p.patient_id = "p";
  p.values.resize(static_cast<int>(vals.size()), 1);
  for (size_t i = 0; i < vals.size(); ++i) p.values(static_cast<int>(i), 0) = vals[i];
  p.observed = MaskArray::Constant(p.rows(), 1, true);
  p.labels.onset = VectorXi::Zero(p.rows());
  return p;
}

// Direct translation of the six window statistics, independent of the
// implementation path.
struct StatsOracle {
  double mean, mn, mx, sd, skew, kurt;
};

StatsOracle stats_oracle(const std::vector<double>& s) {
  const double n = static_cast<double>(s.size());
  StatsOracle o{};
  o.mean = 0;
  for (double x : s) o.mean += x;
  o.mean /= n;
  o.mn = *std::min_element(s.begin(), s.end());
  o.mx = *std::max_element(s.begin(), s.end());
  double ss = 0;
  for (double x : s) ss += (x - o.mean) * (x - o.mean);
  o.sd = std::sqrt(ss / n);
  if (o.sd < 1e-12) {
    o.skew = o.kurt = 0.0;
  } else {
    double s3 = 0, s4 = 0;
    for (double x : s) {
      s3 += std::pow(x - o.mean, 3);
      s4 += std::pow(x - o.mean, 4);
    }
    o.skew = s3 / (n * std::pow(o.sd, 3));
    o.kurt = s4 / (n * std::pow(o.sd, 4));
  }
  return o;
}

}  // namespace

TEST_CASE("delta: 75 then 70 gives -5") {
  WindowSpec spec;
  auto cols = delta_features(series_of({75, 70}), one_col_schema(), spec);
  REQUIRE(cols.names.size() == 1);
  CHECK(cols.names[0] == "heart_rate_delta");
  CHECK(cols.values(0, 0) == 0.0);  // first row convention
  CHECK(cols.values(1, 0) == -5.0);
}

TEST_CASE("delta of a constant column is zero") {
  WindowSpec spec;
  auto cols = delta_features(series_of({3, 3, 3, 3}), one_col_schema(), spec);
  CHECK((cols.values.array() == 0.0).all());
}

TEST_CASE("delta matches the first-difference oracle and telescopes") {
  Rng rng(5);
  std::normal_distribution<double> gauss(0.0, 4.0);
  std::vector<double> vals(20);
  for (auto& v : vals) v = gauss(rng);
  WindowSpec spec;
  auto cols = delta_features(series_of(vals), one_col_schema(), spec);
  double total = 0.0;
  for (size_t i = 0; i < vals.size(); ++i) {
    const double expect = i == 0 ? 0.0 : vals[i] - vals[i - 1];
    CHECK(cols.values(static_cast<int>(i), 0) == doctest::Approx(expect).epsilon(1e-12));
    total += cols.values(static_cast<int>(i), 0);
  }
  CHECK(total == doctest::Approx(vals.back() - vals.front()).epsilon(1e-9));
}

TEST_CASE("window stats on constant and 1,2,3 windows") {
  WindowSpec spec;
  spec.w = 6;
  auto cols = window_stats(series_of({2, 2, 2}), one_col_schema(), spec);
  REQUIRE(cols.names.size() == 6);
  // at t=2 the window is [2,2,2]
  CHECK(cols.values(2, 0) == 2.0);  // mean
  CHECK(cols.values(2, 1) == 2.0);  // min
  CHECK(cols.values(2, 2) == 2.0);  // max
  CHECK(cols.values(2, 3) == 0.0);  // std
  CHECK(cols.values(2, 4) == 0.0);  // skew
  CHECK(cols.values(2, 5) == 0.0);  // kurt

  auto inc = window_stats(series_of({1, 2, 3}), one_col_schema(), spec);
  CHECK(inc.values(2, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(inc.values(2, 3) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(inc.values(2, 4) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("window stats: single sample prefix") {
  WindowSpec spec;
  auto cols = window_stats(series_of({7.5, 1.0}), one_col_schema(), spec);
  CHECK(cols.values(0, 0) == 7.5);
  CHECK(cols.values(0, 1) == 7.5);
  CHECK(cols.values(0, 2) == 7.5);
  CHECK(cols.values(0, 3) == 0.0);
}

TEST_CASE("window stats match the direct-formula oracle on random windows") {
  Rng rng(1234);
  std::normal_distribution<double> gauss(0.0, 3.0);
  std::uniform_int_distribution<int> len(1, 30);
  WindowSpec spec;
  spec.w = 6;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> vals(len(rng));
    for (auto& v : vals) v = gauss(rng);
    if (rep % 7 == 0) std::fill(vals.begin(), vals.end(), gauss(rng));
    auto cols = window_stats(series_of(vals), one_col_schema(), spec);
    for (int t = 0; t < static_cast<int>(vals.size()); ++t) {
      const int s0 = std::max(0, t - spec.w);
      std::vector<double> window(vals.begin() + s0, vals.begin() + t + 1);
      const auto o = stats_oracle(window);
      CHECK(cols.values(t, 0) == doctest::Approx(o.mean).epsilon(1e-9));
      CHECK(cols.values(t, 1) == o.mn);
      CHECK(cols.values(t, 2) == o.mx);
      CHECK(cols.values(t, 3) == doctest::Approx(o.sd).epsilon(1e-9));
      CHECK(cols.values(t, 4) == doctest::Approx(o.skew).epsilon(1e-9));
      CHECK(cols.values(t, 5) == doctest::Approx(o.kurt).epsilon(1e-9));
      CHECK(cols.values(t, 1) <= cols.values(t, 0) + 1e-12);
      CHECK(cols.values(t, 0) <= cols.values(t, 2) + 1e-12);
    }
  }
}

namespace {

Cohort toy_cohort(int n_trendable) {
  Cohort c;
  for (int j = 0; j < n_trendable; ++j)
    c.schema.columns.push_back({"v" + std::to_string(j), Group::G1, true});
  c.schema.columns.push_back({"age", Group::G2, false});
  Rng rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int pi = 0; pi < 3; ++pi) {
    PatientSeries p;
    p.patient_id = "p" + std::to_string(pi);
    const int t = 12;
    p.values.resize(t, c.schema.size());
    for (int i = 0; i < t; ++i)
      for (int j = 0; j < c.schema.size(); ++j) p.values(i, j) = gauss(rng);
    p.observed = MaskArray::Constant(t, c.schema.size(), true);
    p.labels.onset = VectorXi::Zero(t);
    p.labels.onset[t - 1] = 1;
    p.labels = shift_labels(p.labels, 3);
    c.patients.push_back(std::move(p));
  }
  return c;
}

}  // namespace

TEST_CASE("assemble: baseline keeps raw columns only") {
  Cohort c = toy_cohort(2);
  WindowSpec spec;
  spec.enable_delta = false;
  spec.enable_stats = false;
  FeatureFrame frame = assemble_design_matrix(c, spec);
  CHECK(frame.columns == std::vector<std::string>{"v0", "v1", "age"});
  CHECK(frame.n() == 3 * 9);  // t - h rows per patient
  CHECK(frame.has_target());
}

TEST_CASE("assemble: 6 trendable columns with delta+stats add 6 + 36") {
  Cohort c = toy_cohort(6);
  WindowSpec spec;
  FeatureFrame frame = assemble_design_matrix(c, spec);
  // 6 raw trendable + 1 static + 6 delta + 36 stats
  CHECK(static_cast<int>(frame.columns.size()) == 7 + 6 + 36);
  CHECK(frame.col("v0_delta") >= 0);
  CHECK(frame.col("v5_kurt") >= 0);
}

TEST_CASE("assemble: extras append last and misalignment is fatal") {
  Cohort c = toy_cohort(2);
  WindowSpec spec;
  FeatureFrame base = assemble_design_matrix(c, spec);

  ExtraColumns extras;
  extras.names = {"subset_prob_3hr"};
  extras.rows = base.rows;
  extras.values = MatrixXd::Constant(base.n(), 1, 0.25);
  FeatureFrame with = assemble_design_matrix(c, spec, extras);
  CHECK(with.columns.back() == "subset_prob_3hr");
  CHECK(static_cast<long>(with.columns.size()) == base.values.cols() + 1);

  extras.rows[2].hour += 99;
  CHECK_THROWS_AS(assemble_design_matrix(c, spec, extras), DataError);
  extras.rows = base.rows;
  extras.rows.pop_back();
  extras.values = MatrixXd::Constant(base.n() - 1, 1, 0.25);
  CHECK_THROWS_AS(assemble_design_matrix(c, spec, extras), DataError);
}

TEST_CASE("assemble requires imputed input") {
  Cohort c = toy_cohort(2);
  c.patients[0].values(1, 0) = std::numeric_limits<double>::quiet_NaN();
  WindowSpec spec;
  CHECK_THROWS_AS(assemble_design_matrix(c, spec), DataError);
}

TEST_CASE("feature dump CSV writes one row per (patient, hour)") {
  Cohort c = toy_cohort(2);
  WindowSpec spec;
  FeatureFrame frame = assemble_design_matrix(c, spec);
  const auto path = testutil::temp_path("features.csv");
  write_feature_csv(frame, path);
  const std::string body = testutil::read_file(path);
  CHECK(std::count(body.begin(), body.end(), '\n') == frame.n() + 1);
  CHECK(body.rfind("patient_id,hour,target,v0,v1,age,", 0) == 0);
}
