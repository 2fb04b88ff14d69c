#include <doctest.h>

#include <cmath>

#include "sepcast/explain.hpp"
#include "sepcast/synth.hpp"
#include "test_util.hpp"

using namespace sepcast;
using testutil::make_frame;

namespace {

PerturbationStats unit_stats(int f) {
  PerturbationStats stats;
  for (int j = 0; j < f; ++j) stats.names.push_back("x" + std::to_string(j));
  stats.mean = VectorXd::Zero(f);
  stats.std = VectorXd::Ones(f);
  stats.gaussian.assign(f, 1);
  stats.marginals.assign(f, {});
  return stats;
}

// One informative column drives the labels; the rest is noise.
FeatureFrame single_signal_frame(uint64_t seed, long n, int f, int signal_col) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd vals(n, f);
  VectorXi y(n);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) vals(i, j) = gauss(rng);
    y[i] = vals(i, signal_col) > 0.0 ? 1 : 0;
  }
  y[0] = 0;
  y[n - 1] = 1;
  return make_frame(vals, y);
}

CascadeModel wrap_target(const GbdtModel& m, const FeatureFrame& frame) {
  CascadeModel model;
  model.spec.mode = CascadeMode::one_subset;
  model.target = m;
  model.target_features = frame.columns;
  model.feature_mean = frame.values.colwise().mean();
  model.feature_std.resize(frame.values.cols());
  for (long j = 0; j < frame.values.cols(); ++j) {
    const double var = (frame.values.col(j).array() - model.feature_mean[j])
                           .square()
                           .sum() /
                       static_cast<double>(frame.n());
    model.feature_std[j] = std::sqrt(var);
  }
  model.feature_gaussian.assign(frame.values.cols(), 1);
  model.feature_marginals.assign(frame.values.cols(), {});
  return model;
}

}  // namespace

TEST_CASE("a constant model has near-zero surrogate coefficients") {
  FeatureFrame frame = single_signal_frame(1, 200, 4, 0);
  TrainParams params;
  params.n_rounds = 0;
  GbdtModel constant = fit(frame, params);
  CascadeModel model = wrap_target(constant, frame);

  VectorXd instance = frame.values.row(5);
  Explanation exp = local_surrogate(model, instance, 400, 4, 11);
  REQUIRE(exp.weights.size() == 4);
  for (const auto& [name, w] : exp.weights) CHECK(std::abs(w) < 1e-6);
}

TEST_CASE("the signal feature ranks first on single-signal data") {
  FeatureFrame frame = single_signal_frame(2, 600, 5, 2);
  TrainParams params;
  params.n_rounds = 40;
  params.max_depth = 3;
  GbdtModel m = fit(frame, params);
  CascadeModel model = wrap_target(m, frame);

  int hits = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    VectorXd instance = VectorXd::Zero(5);
    Explanation exp = local_surrogate(model, instance, 300, 5, seed);
    if (exp.weights.front().first == "x2") ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("doubling n with the same seed keeps the top feature") {
  FeatureFrame frame = single_signal_frame(3, 500, 5, 1);
  TrainParams params;
  params.n_rounds = 30;
  GbdtModel m = fit(frame, params);
  CascadeModel model = wrap_target(m, frame);
  VectorXd instance = VectorXd::Zero(5);
  Explanation small = local_surrogate(model, instance, 300, 5, 21);
  Explanation big = local_surrogate(model, instance, 600, 5, 21);
  CHECK(small.weights.front().first == big.weights.front().first);
  CHECK(small.weights.front().first == "x1");
}

TEST_CASE("surrogate recovers the signs of a linear scorer") {
  const int f = 4;
  PerturbationStats stats = unit_stats(f);
  // y = 0.5 + 0.08 x0 - 0.15 x2; x1, x3 inert
  ScoreFn linear = [](const MatrixXd& rows) {
    VectorXd out(rows.rows());
    for (long i = 0; i < rows.rows(); ++i)
      out[i] = 0.5 + 0.08 * rows(i, 0) - 0.15 * rows(i, 2);
    return out;
  };
  VectorXd instance = VectorXd::Zero(f);
  Explanation exp = surrogate_explain(linear, stats, instance, 2000, f, 5);
  double w0 = 0, w2 = 0, others = 0;
  for (const auto& [name, w] : exp.weights) {
    if (name == "x0") w0 = w;
    else if (name == "x2") w2 = w;
    else others = std::max(others, std::abs(w));
  }
  CHECK(w0 > 0.0);
  CHECK(w2 < 0.0);
  CHECK(std::abs(w2) > std::abs(w0));
  CHECK(others < 0.02);
  CHECK(exp.intercept == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_FALSE(exp.ridge_fallback);
}

TEST_CASE("explanations are deterministic given the seed") {
  FeatureFrame frame = single_signal_frame(4, 300, 4, 0);
  TrainParams params;
  params.n_rounds = 15;
  GbdtModel m = fit(frame, params);
  CascadeModel model = wrap_target(m, frame);
  VectorXd instance = frame.values.row(7);
  Explanation a = local_surrogate(model, instance, 200, 4, 31);
  Explanation b = local_surrogate(model, instance, 200, 4, 31);
  REQUIRE(a.weights.size() == b.weights.size());
  for (size_t i = 0; i < a.weights.size(); ++i) {
    CHECK(a.weights[i].first == b.weights[i].first);
    CHECK(a.weights[i].second == b.weights[i].second);
  }
}

TEST_CASE("constant column triggers the ridge fallback and stays at zero") {
  const int f = 3;
  PerturbationStats stats = unit_stats(f);
  stats.std[1] = 0.0;  // constant column, zero perturbation
  ScoreFn linear = [](const MatrixXd& rows) {
    VectorXd out(rows.rows());
    for (long i = 0; i < rows.rows(); ++i) out[i] = 0.4 + 0.1 * rows(i, 0);
    return out;
  };
  VectorXd instance = VectorXd::Zero(f);
  Explanation exp = surrogate_explain(linear, stats, instance, 200, f, 6);
  CHECK(exp.ridge_fallback);
  for (const auto& [name, w] : exp.weights)
    if (name == "x1") CHECK(std::abs(w) < 1e-9);
}

TEST_CASE("surrogate input validation") {
  PerturbationStats stats = unit_stats(2);
  ScoreFn score = [](const MatrixXd& rows) {
    return VectorXd::Constant(rows.rows(), 0.5).eval();
  };
  VectorXd instance = VectorXd::Zero(2);
  CHECK_THROWS_AS(surrogate_explain(score, stats, instance, 10, 2, 1),
                  ConfigError);
  CHECK_THROWS_AS(surrogate_explain(score, stats, instance, 100, 0, 1),
                  ConfigError);
  VectorXd wrong = VectorXd::Zero(3);
  CHECK_THROWS_AS(surrogate_explain(score, stats, wrong, 100, 2, 1), DataError);
}

TEST_CASE("rank_features clamps and reports zero gains for empty ensembles") {
  FeatureFrame frame = single_signal_frame(5, 150, 3, 1);
  TrainParams params;
  params.n_rounds = 0;
  GbdtModel m = fit(frame, params);
  CascadeModel model = wrap_target(m, frame);
  auto ranked = rank_features(model, 10);
  CHECK(ranked.size() == 3);  // clamped to the feature count
  for (const auto& [name, gain] : ranked) CHECK(gain == 0.0);

  params.n_rounds = 25;
  model = wrap_target(fit(frame, params), frame);
  auto top1 = rank_features(model, 1);
  REQUIRE(top1.size() == 1);
  CHECK(top1[0].first == "x1");
}

TEST_CASE("explanation text table has the two-column shape") {
  Explanation exp;
  exp.weights = {{"subset_prob_3hr", 0.026}, {"creatinine_delta", -0.021}};
  const std::string text = exp.to_text();
  CHECK(text.find("Feature") == 0);
  CHECK(text.find("Value") != std::string::npos);
  CHECK(text.find("subset_prob_3hr") != std::string::npos);
  CHECK(text.find("0.0260") != std::string::npos);
  CHECK(text.find("-0.0210") != std::string::npos);
}
