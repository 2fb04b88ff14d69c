#pragma once

#include "sepcast/features.hpp"

namespace sepcast {

struct SamplerConfig {
  double oversample_ratio = 0.8;  // minority target as a fraction of majority
  bool undersample_to_parity = true;
  uint64_t seed = 0;

  void validate() const {
    if (!(oversample_ratio > 0.0 && oversample_ratio <= 1.0))
      throw ConfigError("oversample_ratio must be in (0, 1]");
  }
};

/// Duplicates minority rows (uniform with replacement, seeded) until the
/// minority count reaches round(ratio * majority count). Majority rows are
/// untouched; no feature values change, only row multiplicities.
FeatureFrame random_oversample(const FeatureFrame& frame, const SamplerConfig& cfg);

/// Subsamples majority rows uniformly without replacement (seeded) down to
/// the minority count, yielding exact class parity.
FeatureFrame random_undersample(const FeatureFrame& frame, const SamplerConfig& cfg);

/// The training-time pipeline: oversample, then undersample to parity when
/// enabled. Applied to training rows only; evaluation rows never pass here.
FeatureFrame rebalance(const FeatureFrame& frame, const SamplerConfig& cfg);

}  // namespace sepcast
