#include <doctest.h>

#include <cmath>

#include "sepcast/eval.hpp"
#include "sepcast/gbdt.hpp"
#include "test_util.hpp"

using namespace sepcast;
using testutil::make_frame;

namespace {

FeatureFrame random_frame(uint64_t seed, long n, long f,
                          double signal_weight = 0.0) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd vals(n, f);
  VectorXi y(n);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < f; ++j) vals(i, j) = gauss(rng);
    const double logit_p = signal_weight * vals(i, 0);
    const double p = 1.0 / (1.0 + std::exp(-logit_p));
    y[i] = unit(rng) < p ? 1 : 0;
  }
  // guarantee both classes
  y[0] = 0;
  y[n - 1] = 1;
  return make_frame(vals, y);
}

}  // namespace

TEST_CASE("zero rounds predicts the base score everywhere") {
  FeatureFrame frame = random_frame(1, 50, 3);
  TrainParams params;
  params.n_rounds = 0;
  params.base_score = 0.5;
  GbdtModel model = fit(frame, params);
  VectorXd p = predict_proba(model, frame);
  CHECK((p.array() == 0.5).all());

  params.base_score = 0.2;
  GbdtModel m2 = fit(frame, params);
  VectorXd p2 = predict_proba(m2, frame);
  for (long i = 0; i < p2.size(); ++i)
    CHECK(p2[i] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("separable 1D data reaches training AUROC 1.0 at depth 1") {
  Rng rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const long n = 200;
  MatrixXd vals(n, 1);
  VectorXi y(n);
  for (long i = 0; i < n; ++i) {
    const double x = gauss(rng);
    vals(i, 0) = x;
    y[i] = x < 0 ? 0 : 1;
  }
  FeatureFrame frame = make_frame(vals, y);
  TrainParams params;
  params.n_rounds = 50;
  params.max_depth = 1;
  GbdtModel model = fit(frame, params);
  CHECK(auroc(predict_proba(model, frame), y) == 1.0);
}

TEST_CASE("leaf weights match -G/(H+lambda) on a 4-row depth-1 fixture") {
  MatrixXd vals(4, 1);
  vals << 0, 1, 2, 3;
  VectorXi y(4);
  y << 0, 0, 1, 1;
  FeatureFrame frame = make_frame(vals, y);
  TrainParams params;
  params.n_rounds = 1;
  params.max_depth = 1;
  params.reg_lambda = 1.0;
  params.base_score = 0.5;
  GbdtModel model = fit(frame, params);
  REQUIRE(model.trees.size() == 1);
  const auto& nodes = model.trees[0].nodes;
  REQUIRE(nodes.size() == 3);
  REQUIRE_FALSE(nodes[0].is_leaf());

  // hand oracle: p=0.5 so g = 0.5 - y, h = 0.25 per row; best split is the
  // class boundary between x=1 and x=2
  CHECK(nodes[0].feature == 0);
  CHECK(nodes[0].threshold == doctest::Approx(1.5).epsilon(1e-15));
  const double gl = 0.5 + 0.5, hl = 0.25 + 0.25;
  const double gr = -0.5 - 0.5, hr = 0.25 + 0.25;
  const double expected_left = -gl / (hl + 1.0);
  const double expected_right = -gr / (hr + 1.0);
  CHECK(nodes[nodes[0].left].weight == doctest::Approx(expected_left).epsilon(1e-12));
  CHECK(nodes[nodes[0].right].weight == doctest::Approx(expected_right).epsilon(1e-12));
  // recorded gain oracle
  const double expected_gain =
      0.5 * (gl * gl / (hl + 1.0) + gr * gr / (hr + 1.0) - 0.0 / (1.0 + 1.0));
  CHECK(nodes[0].gain == doctest::Approx(expected_gain).epsilon(1e-12));
}

TEST_CASE("training log-loss is non-increasing (eta=0.1, gamma=0)") {
  for (uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL, 15ULL}) {
    FeatureFrame frame = random_frame(seed, 120, 4, 1.2);
    TrainParams params;
    params.n_rounds = 60;
    params.learning_rate = 0.1;
    params.gamma = 0.0;
    GbdtModel model = fit(frame, params);
    REQUIRE(model.train_logloss.size() == 60);
    for (size_t r = 1; r < model.train_logloss.size(); ++r)
      CHECK(model.train_logloss[r] <= model.train_logloss[r - 1] + 1e-12);
  }
}

TEST_CASE("huge lambda pins predictions at the base score") {
  FeatureFrame frame = random_frame(3, 100, 3, 2.0);
  TrainParams params;
  params.n_rounds = 20;
  params.reg_lambda = 1e12;
  GbdtModel model = fit(frame, params);
  VectorXd p = predict_proba(model, frame);
  for (long i = 0; i < p.size(); ++i)
    CHECK(std::abs(p[i] - 0.5) < 1e-6);
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (node.is_leaf()) CHECK(std::abs(node.weight) < 1e-9);
}

TEST_CASE("depth cap and gamma threshold are honored") {
  FeatureFrame frame = random_frame(21, 300, 5, 1.0);
  TrainParams params;
  params.n_rounds = 30;
  params.max_depth = 3;
  params.gamma = 0.05;
  GbdtModel model = fit(frame, params);
  for (const auto& tree : model.trees) {
    CHECK(tree.depth() <= 3);
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) CHECK(node.gain > 0.05);
  }
}

TEST_CASE("fit is deterministic and probabilities sit strictly inside (0,1)") {
  FeatureFrame frame = random_frame(31, 150, 4, 0.8);
  TrainParams params;
  params.n_rounds = 15;
  GbdtModel a = fit(frame, params);
  GbdtModel b = fit(frame, params);
  CHECK(model_to_json(a).dump() == model_to_json(b).dump());

  VectorXd p = predict_proba(a, frame);
  CHECK((p.array() > 0.0).all());
  CHECK((p.array() < 1.0).all());

  // duplicated rows score identically
  std::vector<long> idx = {4, 4};
  FeatureFrame dup = frame_rows(frame, idx);
  VectorXd pd = predict_proba(a, dup);
  CHECK(pd[0] == pd[1]);
}

TEST_CASE("serialization round-trips predictions bit-exactly") {
  FeatureFrame frame = random_frame(41, 200, 6, 1.0);
  TrainParams params;
  params.n_rounds = 25;
  params.max_depth = 4;
  GbdtModel model = fit(frame, params);
  const auto path = testutil::temp_path("model.json");
  save_model(model, path);
  GbdtModel back = load_model(path);
  VectorXd p0 = predict_proba(model, frame);
  VectorXd p1 = predict_proba(back, frame);
  CHECK((p0.array() == p1.array()).all());
  CHECK(back.feature_names == model.feature_names);
}

TEST_CASE("gain importance bookkeeping") {
  FeatureFrame frame = random_frame(51, 250, 5, 0.0);
  // single informative column: rebuild labels from column 2 only
  for (long i = 0; i < frame.n(); ++i)
    frame.target[i] = frame.values(i, 2) > 0.3 ? 1 : 0;
  frame.target[0] = 0;
  frame.target[frame.n() - 1] = 1;
  TrainParams params;
  params.n_rounds = 20;
  GbdtModel model = fit(frame, params);
  auto gains = gain_importance(model);

  double best = -1.0;
  std::string best_name;
  double recomputed_total = 0.0, reported_total = 0.0;
  for (const auto& [name, g] : gains) {
    CHECK(g >= 0.0);
    reported_total += g;
    if (g > best) {
      best = g;
      best_name = name;
    }
  }
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) recomputed_total += node.gain;
  CHECK(reported_total == doctest::Approx(recomputed_total).epsilon(1e-9));
  CHECK(best_name == "x2");

  TrainParams empty;
  empty.n_rounds = 0;
  GbdtModel none = fit(frame, empty);
  for (const auto& [name, g] : gain_importance(none)) CHECK(g == 0.0);
}

TEST_CASE("fit input validation") {
  FeatureFrame frame = random_frame(61, 40, 2);
  TrainParams params;
  params.n_rounds = 2;

  FeatureFrame single = frame;
  single.target.setZero();
  CHECK_THROWS_AS(fit(single, params), DegenerateClassError);

  FeatureFrame nan_frame = frame;
  nan_frame.values(3, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit(nan_frame, params), DataError);

  GbdtModel model = fit(frame, params);
  FeatureFrame wrong = frame;
  wrong.columns[0] = "other";
  CHECK_THROWS_AS(predict_proba(model, wrong), DataError);

  TrainParams bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(fit(frame, bad), ConfigError);
  bad = TrainParams{};
  bad.base_score = 1.0;
  CHECK_THROWS_AS(fit(frame, bad), ConfigError);
}
