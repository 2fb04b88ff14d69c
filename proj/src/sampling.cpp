#include "sepcast/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace sepcast {

namespace {

struct ClassSplit {
  std::vector<long> minority;
  std::vector<long> majority;
  int minority_label = 1;
};

ClassSplit split_classes(const FeatureFrame& frame, const char* op) {
  if (!frame.has_target())
    throw DataError(std::string(op) + ": frame has no targets");
  std::vector<long> pos, neg;
  for (long i = 0; i < frame.n(); ++i)
    (frame.target[i] == 1 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty())
    throw DegenerateClassError(std::string(op) + ": frame holds a single class");
  ClassSplit s;
  if (pos.size() <= neg.size()) {
    s.minority = std::move(pos);
    s.majority = std::move(neg);
    s.minority_label = 1;
  } else {
    s.minority = std::move(neg);
    s.majority = std::move(pos);
    s.minority_label = 0;
  }
  return s;
}

}  // namespace

FeatureFrame random_oversample(const FeatureFrame& frame, const SamplerConfig& cfg) {
  cfg.validate();
  auto s = split_classes(frame, "random_oversample");
  const long target = std::llround(cfg.oversample_ratio *
                                   static_cast<double>(s.majority.size()));
  const long have = static_cast<long>(s.minority.size());
  if (have >= target) return frame;

  Rng rng(derive_seed(cfg.seed, "oversample"));
  std::uniform_int_distribution<long> pick(0, have - 1);
  std::vector<long> idx(frame.n());
  for (long i = 0; i < frame.n(); ++i) idx[i] = i;
  for (long k = 0; k < target - have; ++k)
    idx.push_back(s.minority[pick(rng)]);
  return frame_rows(frame, idx);
}

FeatureFrame random_undersample(const FeatureFrame& frame, const SamplerConfig& cfg) {
  cfg.validate();
  auto s = split_classes(frame, "random_undersample");
  const long want = static_cast<long>(s.minority.size());
  if (static_cast<long>(s.majority.size()) <= want) return frame;

  // Partial Fisher-Yates over the majority indices, then restore row order.
  Rng rng(derive_seed(cfg.seed, "undersample"));
  std::vector<long> pool = s.majority;
  for (long k = 0; k < want; ++k) {
    std::uniform_int_distribution<long> pick(k, static_cast<long>(pool.size()) - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  pool.resize(want);
  std::vector<long> idx(pool.begin(), pool.end());
  idx.insert(idx.end(), s.minority.begin(), s.minority.end());
  std::sort(idx.begin(), idx.end());
  return frame_rows(frame, idx);
}

FeatureFrame rebalance(const FeatureFrame& frame, const SamplerConfig& cfg) {
  FeatureFrame out = random_oversample(frame, cfg);
  if (cfg.undersample_to_parity) out = random_undersample(out, cfg);
  return out;
}

}  // namespace sepcast
