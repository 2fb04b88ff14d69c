#include "sepcast/explain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sepcast {

nlohmann::ordered_json Explanation::to_json() const {
  nlohmann::ordered_json j;
  j["instance"] = instance_id;
  j["kernel_width"] = kernel_width;
  j["n_perturbations"] = n_perturbations;
  j["seed"] = seed;
  j["ridge_fallback"] = ridge_fallback;
  j["model_prob"] = model_prob;
  j["intercept"] = intercept;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& [name, w] : weights)
    rows.push_back({{"feature", name}, {"weight", w}});
  j["weights"] = std::move(rows);
  return j;
}

std::string Explanation::to_text() const {
  size_t width = 7;  // "Feature"
  for (const auto& [name, w] : weights) width = std::max(width, name.size());
  std::ostringstream out;
  out << "Feature";
  out << std::string(width - 7 + 2, ' ') << "Value\n";
  char buf[32];
  for (const auto& [name, w] : weights) {
    std::snprintf(buf, sizeof(buf), "%.4f", w);
    out << name << std::string(width - name.size() + 2, ' ') << buf << "\n";
  }
  return out.str();
}

Explanation surrogate_explain(const ScoreFn& score,
                              const PerturbationStats& stats,
                              const VectorXd& instance, int n, int top_k,
                              uint64_t seed, double kernel_width,
                              const std::string& instance_id) {
  const int f = static_cast<int>(instance.size());
  if (f == 0) throw ConfigError("surrogate_explain: empty instance");
  if (static_cast<int>(stats.names.size()) != f ||
      stats.std.size() != f || stats.gaussian.size() != stats.names.size())
    throw DataError("surrogate_explain: stats do not match the instance width");
  if (n < 50) throw ConfigError("surrogate_explain: need n >= 50 perturbations");
  if (top_k < 1) throw ConfigError("surrogate_explain: top_k must be >= 1");

  const double kappa =
      kernel_width > 0.0 ? kernel_width : 0.75 * std::sqrt(static_cast<double>(f));

  // Effective scale for standardized offsets; constant columns get 1 so they
  // contribute nothing to distance without dividing by zero.
  VectorXd scale(f);
  for (int j = 0; j < f; ++j)
    scale[j] = stats.std[j] < 1e-12 ? 1.0 : stats.std[j];

  // One fresh generator per row keeps the first rows identical when n grows.
  MatrixXd perturbed(n, f);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "perturb", static_cast<uint64_t>(i)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < f; ++j) {
      if (stats.gaussian[j]) {
        perturbed(i, j) = instance[j] + stats.std[j] * gauss(rng);
      } else if (!stats.marginals[j].empty()) {
        std::uniform_int_distribution<size_t> pick(0, stats.marginals[j].size() - 1);
        perturbed(i, j) = stats.marginals[j][pick(rng)];
      } else {
        perturbed(i, j) = instance[j];
      }
    }
  }

  const VectorXd y = score(perturbed);
  if (y.size() != n) throw DataError("surrogate_explain: scorer row mismatch");

  MatrixXd design(n, f + 1);
  design.col(0).setOnes();
  VectorXd weights(n);
  for (int i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (int j = 0; j < f; ++j) {
      const double z = (perturbed(i, j) - instance[j]) / scale[j];
      design(i, j + 1) = z;
      d2 += z * z;
    }
    weights[i] = std::exp(-d2 / (kappa * kappa));
  }

  const MatrixXd xtw = design.transpose() * weights.asDiagonal();
  MatrixXd normal = xtw * design;
  const VectorXd rhs = xtw * y;

  Explanation exp;
  exp.instance_id = instance_id;
  exp.kernel_width = kappa;
  exp.n_perturbations = n;
  exp.seed = seed;

  Eigen::FullPivLU<MatrixXd> lu(normal);
  if (!lu.isInvertible()) {
    normal.diagonal().array() += 1e-6;
    lu.compute(normal);
    exp.ridge_fallback = true;
  }
  const VectorXd beta = lu.solve(rhs);
  exp.intercept = beta[0];

  MatrixXd self(1, f);
  self.row(0) = instance.transpose();
  exp.model_prob = score(self)[0];

  std::vector<std::pair<std::string, double>> coef;
  coef.reserve(f);
  for (int j = 0; j < f; ++j) coef.emplace_back(stats.names[j], beta[j + 1]);
  std::sort(coef.begin(), coef.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(a.second), mb = std::abs(b.second);
    return ma != mb ? ma > mb : a.first < b.first;
  });
  coef.resize(std::min<size_t>(coef.size(), static_cast<size_t>(top_k)));
  exp.weights = std::move(coef);
  return exp;
}

Explanation local_surrogate(const CascadeModel& model, const VectorXd& instance,
                            int n, int top_k, uint64_t seed,
                            const std::string& instance_id) {
  if (model.target.trees.empty() && model.target.params.n_rounds > 0)
    throw DataError("local_surrogate: model is not fitted");
  PerturbationStats stats;
  stats.names = model.target_features;
  stats.mean = model.feature_mean;
  stats.std = model.feature_std;
  stats.gaussian = model.feature_gaussian;
  stats.marginals = model.feature_marginals;
  ScoreFn score = [&model](const MatrixXd& rows) {
    return predict_proba_values(model.target, rows, model.target_features);
  };
  return surrogate_explain(score, stats, instance, n, top_k, seed, 0.0,
                           instance_id);
}

std::vector<std::pair<std::string, double>> rank_features(
    const CascadeModel& model, int top_k) {
  if (top_k < 1) throw ConfigError("rank_features: top_k must be >= 1");
  auto gains = gain_importance(model.target);
  std::vector<std::pair<std::string, double>> ranked(gains.begin(), gains.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  ranked.resize(std::min<size_t>(ranked.size(), static_cast<size_t>(top_k)));
  return ranked;
}

}  // namespace sepcast
