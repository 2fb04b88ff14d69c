#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepcast/features.hpp"

namespace sepcast {

struct TrainParams {
  int n_rounds = 200;
  int max_depth = 4;
  double learning_rate = 0.1;   // eta
  double reg_lambda = 1.0;      // L2 on leaf weights
  double gamma = 0.0;           // minimum split gain
  double min_child_weight = 0.0;
  double base_score = 0.5;
  uint64_t seed = 0;  // kept for config echo; exact greedy uses no randomness

  void validate() const;
};

/// Flat tree node: split when feature >= 0, leaf otherwise. Leaf weights are
/// in log-odds units, unscaled by the learning rate. default_left is kept in
/// the storage format for forward compatibility; imputation upstream means it
/// is never consulted.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool default_left = true;
  double gain = 0.0;    // split gain, exclusive of gamma
  double weight = 0.0;  // leaf value

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double value_at(const double* x) const;
  int depth() const;
};

/// prediction = sigmoid(logit(base_score) + eta * sum of tree outputs)
struct GbdtModel {
  TrainParams params;
  std::vector<std::string> feature_names;
  std::vector<Tree> trees;
  std::vector<double> train_logloss;  // after each round
};

/// Second-order boosting with logistic loss and exact greedy splits over
/// sorted feature values. Ties between equal-gain splits go to the lowest
/// feature index, then the lowest threshold.
GbdtModel fit(const FeatureFrame& frame, const TrainParams& params);

VectorXd predict_margin(const GbdtModel& model, const MatrixXd& values);
VectorXd predict_proba(const GbdtModel& model, const FeatureFrame& frame);
VectorXd predict_proba_values(const GbdtModel& model, const MatrixXd& values,
                              const std::vector<std::string>& columns);

/// Total split gain per feature; features never split report 0.
std::map<std::string, double> gain_importance(const GbdtModel& model);

nlohmann::ordered_json model_to_json(const GbdtModel& model);
GbdtModel model_from_json(const nlohmann::json& j);
void save_model(const GbdtModel& model, const std::string& path);
GbdtModel load_model(const std::string& path);

double mean_logloss(const VectorXd& prob, const VectorXi& y);

}  // namespace sepcast
