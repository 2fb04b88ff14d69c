#pragma once

#include <functional>
#include <utility>

#include "sepcast/cascade.hpp"

namespace sepcast {

struct Explanation {
  std::string instance_id;
  std::vector<std::pair<std::string, double>> weights;  // |w| desc, top_k rows
  double kernel_width = 0.0;
  int n_perturbations = 0;
  uint64_t seed = 0;
  bool ridge_fallback = false;
  double model_prob = 0.0;
  double intercept = 0.0;

  nlohmann::ordered_json to_json() const;
  /// Two-column feature/value table.
  std::string to_text() const;
};

using ScoreFn = std::function<VectorXd(const MatrixXd&)>;

struct PerturbationStats {
  std::vector<std::string> names;
  VectorXd mean;
  VectorXd std;
  std::vector<uint8_t> gaussian;  // 0: resample from the marginal pool
  std::vector<std::vector<double>> marginals;
};

/// Core surrogate: n perturbed rows around the instance (Gaussian with the
/// per-feature training std, or marginal resampling for static columns),
/// scored by `score`, then a proximity-weighted least-squares linear fit on
/// standardized offsets with kernel exp(-d^2/kappa^2). A singular weighted
/// design falls back to a small fixed ridge and flags the output.
Explanation surrogate_explain(const ScoreFn& score,
                              const PerturbationStats& stats,
                              const VectorXd& instance, int n, int top_k,
                              uint64_t seed, double kernel_width = 0.0,
                              const std::string& instance_id = "");

/// Explains the cascade's target model at an instance given in the target
/// feature space (subset probability columns included). kappa defaults to
/// 0.75 * sqrt(feature count).
Explanation local_surrogate(const CascadeModel& model, const VectorXd& instance,
                            int n, int top_k, uint64_t seed,
                            const std::string& instance_id = "");

/// Global companion: target-model split gains (cascade probability columns
/// included), sorted descending, clamped to top_k.
std::vector<std::pair<std::string, double>> rank_features(
    const CascadeModel& model, int top_k);

}  // namespace sepcast
