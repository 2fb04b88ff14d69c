#include "sepcast/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace sepcast {

void TrainParams::validate() const {
  if (n_rounds < 0) throw ConfigError("n_rounds must be >= 0");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw ConfigError("learning_rate must be in (0, 1]");
  if (reg_lambda < 0.0) throw ConfigError("reg_lambda must be >= 0");
  if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
  if (min_child_weight < 0.0) throw ConfigError("min_child_weight must be >= 0");
  if (!(base_score > 0.0 && base_score < 1.0))
    throw ConfigError("base_score must be in (0, 1)");
}

double Tree::value_at(const double* x) const {
  int id = 0;
  while (!nodes[id].is_leaf())
    id = x[nodes[id].feature] < nodes[id].threshold ? nodes[id].left
                                                    : nodes[id].right;
  return nodes[id].weight;
}

int Tree::depth() const {
  // Longest split chain from the root; a lone leaf has depth 0.
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[nodes[i].left] = d[i] + 1;
    d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

double mean_logloss(const VectorXd& prob, const VectorXi& y) {
  double total = 0.0;
  for (long i = 0; i < prob.size(); ++i) {
    const double p = std::min(1.0 - 1e-15, std::max(1e-15, prob[i]));
    total += y[i] == 1 ? -std::log(p) : -std::log1p(-p);
  }
  return total / static_cast<double>(prob.size());
}

namespace {

struct SplitCandidate {
  double gain = -1.0;
  int feature = -1;
  double threshold = 0.0;
  double left_g = 0.0, left_h = 0.0;
  long left_count = 0;

  bool valid() const { return feature >= 0; }

  // gain desc, then feature asc, then threshold asc
  bool beats(const SplitCandidate& o) const {
    if (!o.valid()) return valid();
    if (gain != o.gain) return gain > o.gain;
    if (feature != o.feature) return feature < o.feature;
    return threshold < o.threshold;
  }
};

struct NodeStats {
  double g = 0.0, h = 0.0;
  long count = 0;
};

class TreeBuilder {
public:
  TreeBuilder(const MatrixXd& values,
              const std::vector<std::vector<int32_t>>& order,
              const std::vector<std::vector<double>>& sorted_vals,
              const TrainParams& params)
      : values_(values), order_(order), sorted_vals_(sorted_vals),
        params_(params), n_(values.rows()), f_(static_cast<int>(values.cols())) {}

  /// Builds one tree and leaves pos[i] at each row's leaf node id.
  Tree build(const VectorXd& g, const VectorXd& h, std::vector<int32_t>& pos) {
    Tree tree;
    std::fill(pos.begin(), pos.end(), 0);

    NodeStats root;
    root.g = g.sum();
    root.h = h.sum();
    root.count = n_;
    tree.nodes.emplace_back();

    std::vector<int> level = {0};
    std::vector<NodeStats> level_stats = {root};

    for (int depth = 0; depth < params_.max_depth && !level.empty(); ++depth) {
      const int width = static_cast<int>(level.size());
      slot_of_node_.assign(tree.nodes.size(), -1);
      for (int s = 0; s < width; ++s) slot_of_node_[level[s]] = s;

      best_.assign(width, SplitCandidate{});
      parent_term_.resize(width);
      for (int s = 0; s < width; ++s) {
        const auto& st = level_stats[s];
        parent_term_[s] = st.g * st.g / (st.h + params_.reg_lambda);
      }

      for (int j = 0; j < f_; ++j) scan_feature(j, g, h, level_stats, pos);

      // Apply the winning split per node, or finalize the leaf.
      std::vector<int> next_level;
      std::vector<NodeStats> next_stats;
      std::vector<int8_t> did_split(width, 0);
      for (int s = 0; s < width; ++s) {
        const int node_id = level[s];
        const auto& st = level_stats[s];
        const auto& cand = best_[s];
        if (cand.valid() && cand.gain > params_.gamma) {
          TreeNode& node = tree.nodes[node_id];
          node.feature = cand.feature;
          node.threshold = cand.threshold;
          node.gain = cand.gain;
          node.left = static_cast<int>(tree.nodes.size());
          node.right = node.left + 1;
          tree.nodes.emplace_back();
          tree.nodes.emplace_back();
          NodeStats ls{cand.left_g, cand.left_h, cand.left_count};
          NodeStats rs{st.g - cand.left_g, st.h - cand.left_h,
                       st.count - cand.left_count};
          next_level.push_back(node.left);
          next_stats.push_back(ls);
          next_level.push_back(node.right);
          next_stats.push_back(rs);
          did_split[s] = 1;
        } else {
          finalize_leaf(tree.nodes[node_id], st);
        }
      }

      bool any_split = false;
      for (int8_t b : did_split) any_split |= (b != 0);
      if (any_split) {
        for (long i = 0; i < n_; ++i) {
          const int s = slot_of_node_[pos[i]];
          if (s < 0 || !did_split[s]) continue;
          const TreeNode& node = tree.nodes[level[s]];
          pos[i] = values_(i, node.feature) < node.threshold ? node.left
                                                             : node.right;
        }
      }
      level = std::move(next_level);
      level_stats = std::move(next_stats);
    }
    // Depth limit reached: whatever is still open becomes a leaf.
    for (size_t s = 0; s < level.size(); ++s)
      finalize_leaf(tree.nodes[level[s]], level_stats[s]);
    return tree;
  }

private:
  void finalize_leaf(TreeNode& node, const NodeStats& st) const {
    node.feature = -1;
    node.weight = -st.g / (st.h + params_.reg_lambda);
  }

  void scan_feature(int j, const VectorXd& g, const VectorXd& h,
                    const std::vector<NodeStats>& level_stats,
                    const std::vector<int32_t>& pos) {
    const int width = static_cast<int>(level_stats.size());
    acc_g_.assign(width, 0.0);
    acc_h_.assign(width, 0.0);
    acc_count_.assign(width, 0);
    last_val_.assign(width, 0.0);

    const int32_t* order = order_[j].data();
    const double* vals = sorted_vals_[j].data();
    const double lambda = params_.reg_lambda;
    const double mcw = params_.min_child_weight;

    for (long k = 0; k < n_; ++k) {
      const int32_t row = order[k];
      const int s = slot_of_node_[pos[row]];
      if (s < 0) continue;
      const double v = vals[k];
      if (acc_count_[s] > 0 && v != last_val_[s]) {
        const double gl = acc_g_[s], hl = acc_h_[s];
        const auto& st = level_stats[s];
        const double gr = st.g - gl, hr = st.h - hl;
        if (hl >= mcw && hr >= mcw) {
          const double gain = 0.5 * (gl * gl / (hl + lambda) +
                                     gr * gr / (hr + lambda) - parent_term_[s]);
          if (gain > params_.gamma) {
            SplitCandidate cand;
            cand.gain = gain;
            cand.feature = j;
            cand.threshold = 0.5 * (last_val_[s] + v);
            cand.left_g = gl;
            cand.left_h = hl;
            cand.left_count = acc_count_[s];
            if (cand.beats(best_[s])) best_[s] = cand;
          }
        }
      }
      acc_g_[s] += g[row];
      acc_h_[s] += h[row];
      ++acc_count_[s];
      last_val_[s] = v;
    }
  }

  const MatrixXd& values_;
  const std::vector<std::vector<int32_t>>& order_;
  const std::vector<std::vector<double>>& sorted_vals_;
  const TrainParams& params_;
  const long n_;
  const int f_;

  std::vector<int> slot_of_node_;
  std::vector<SplitCandidate> best_;
  std::vector<double> parent_term_;
  std::vector<double> acc_g_, acc_h_;
  std::vector<long> acc_count_;
  std::vector<double> last_val_;
};

}  // namespace

GbdtModel fit(const FeatureFrame& frame, const TrainParams& params) {
  params.validate();
  const long n = frame.n();
  if (n == 0) throw DataError("fit: empty frame");
  if (!frame.has_target()) throw DataError("fit: frame has no targets");
  if (!frame.values.allFinite())
    throw DataError("fit: non-finite feature value in frame");
  const long n_pos = (frame.target.array() == 1).count();
  if (n_pos == 0 || n_pos == n)
    throw DegenerateClassError("fit: training frame holds a single class");

  const int f = static_cast<int>(frame.values.cols());

  // Sorted row order per feature, reused by every round.
  std::vector<std::vector<int32_t>> order(f);
  std::vector<std::vector<double>> sorted_vals(f);
  for (int j = 0; j < f; ++j) {
    order[j].resize(n);
    std::iota(order[j].begin(), order[j].end(), 0);
    const auto col = frame.values.col(j);
    std::sort(order[j].begin(), order[j].end(),
              [&col](int32_t a, int32_t b) {
                return col[a] != col[b] ? col[a] < col[b] : a < b;
              });
    sorted_vals[j].resize(n);
    for (long k = 0; k < n; ++k) sorted_vals[j][k] = col[order[j][k]];
  }

  GbdtModel model;
  model.params = params;
  model.feature_names = frame.columns;

  const double base_margin = logit(params.base_score);
  VectorXd margin = VectorXd::Constant(n, base_margin);
  VectorXd g(n), h(n), prob(n);
  std::vector<int32_t> pos(n, 0);

  TreeBuilder builder(frame.values, order, sorted_vals, params);
  for (int round = 0; round < params.n_rounds; ++round) {
    for (long i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      prob[i] = p;
      g[i] = p - static_cast<double>(frame.target[i]);
      h[i] = p * (1.0 - p);
    }
    Tree tree = builder.build(g, h, pos);
    for (long i = 0; i < n; ++i)
      margin[i] += params.learning_rate * tree.nodes[pos[i]].weight;
    model.trees.push_back(std::move(tree));

    for (long i = 0; i < n; ++i) prob[i] = sigmoid(margin[i]);
    model.train_logloss.push_back(mean_logloss(prob, frame.target));
  }
  return model;
}

VectorXd predict_margin(const GbdtModel& model, const MatrixXd& values) {
  const long n = values.rows();
  VectorXd margin = VectorXd::Constant(n, logit(model.params.base_score));
  std::vector<double> row(values.cols());
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < values.cols(); ++j) row[j] = values(i, j);
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.value_at(row.data());
    margin[i] += model.params.learning_rate * sum;
  }
  return margin;
}

VectorXd predict_proba_values(const GbdtModel& model, const MatrixXd& values,
                              const std::vector<std::string>& columns) {
  if (columns != model.feature_names) {
    std::string msg = "predict: frame columns do not match model features";
    if (columns.size() != model.feature_names.size())
      msg += " (" + std::to_string(columns.size()) + " vs " +
             std::to_string(model.feature_names.size()) + ")";
    throw DataError(msg);
  }
  if (values.cols() != static_cast<long>(model.feature_names.size()))
    throw DataError("predict: value matrix width does not match feature list");
  VectorXd margin = predict_margin(model, values);
  return margin.unaryExpr([](double m) { return sigmoid(m); });
}

VectorXd predict_proba(const GbdtModel& model, const FeatureFrame& frame) {
  return predict_proba_values(model, frame.values, frame.columns);
}

std::map<std::string, double> gain_importance(const GbdtModel& model) {
  std::map<std::string, double> total;
  for (const auto& name : model.feature_names) total[name] = 0.0;
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) total[model.feature_names[node.feature]] += node.gain;
  return total;
}

namespace {
constexpr const char* kModelFormat = "sepcast-gbdt";
constexpr int kModelVersion = 1;
}  // namespace

nlohmann::ordered_json model_to_json(const GbdtModel& model) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  nlohmann::ordered_json p;
  p["n_rounds"] = model.params.n_rounds;
  p["max_depth"] = model.params.max_depth;
  p["learning_rate"] = model.params.learning_rate;
  p["reg_lambda"] = model.params.reg_lambda;
  p["gamma"] = model.params.gamma;
  p["min_child_weight"] = model.params.min_child_weight;
  p["base_score"] = model.params.base_score;
  p["seed"] = model.params.seed;
  j["params"] = std::move(p);
  j["feature_names"] = model.feature_names;
  j["train_logloss"] = model.train_logloss;
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (const auto& tree : model.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& node : tree.nodes) {
      nlohmann::ordered_json nj;
      if (node.is_leaf()) {
        nj["weight"] = node.weight;
      } else {
        nj["feature"] = node.feature;
        nj["threshold"] = node.threshold;
        nj["left"] = node.left;
        nj["right"] = node.right;
        nj["default_left"] = node.default_left;
        nj["gain"] = node.gain;
      }
      nodes.push_back(std::move(nj));
    }
    nlohmann::ordered_json tj;
    tj["nodes"] = std::move(nodes);
    trees.push_back(std::move(tj));
  }
  j["trees"] = std::move(trees);
  return j;
}

GbdtModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kModelFormat)
    throw DataError("model file is not a " + std::string(kModelFormat) + " document");
  if (j.value("version", -1) != kModelVersion)
    throw DataError("unsupported model version");
  GbdtModel model;
  const auto& p = j.at("params");
  model.params.n_rounds = p.at("n_rounds").get<int>();
  model.params.max_depth = p.at("max_depth").get<int>();
  model.params.learning_rate = p.at("learning_rate").get<double>();
  model.params.reg_lambda = p.at("reg_lambda").get<double>();
  model.params.gamma = p.at("gamma").get<double>();
  model.params.min_child_weight = p.at("min_child_weight").get<double>();
  model.params.base_score = p.at("base_score").get<double>();
  model.params.seed = p.at("seed").get<uint64_t>();
  model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  model.train_logloss = j.at("train_logloss").get<std::vector<double>>();
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode node;
      if (nj.contains("weight")) {
        node.weight = nj.at("weight").get<double>();
      } else {
        node.feature = nj.at("feature").get<int>();
        node.threshold = nj.at("threshold").get<double>();
        node.left = nj.at("left").get<int>();
        node.right = nj.at("right").get<int>();
        node.default_left = nj.at("default_left").get<bool>();
        node.gain = nj.at("gain").get<double>();
      }
      tree.nodes.push_back(node);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

void save_model(const GbdtModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << model_to_json(model).dump(2) << "\n";
}

GbdtModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed model JSON in " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace sepcast
