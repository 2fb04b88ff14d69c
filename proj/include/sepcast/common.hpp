#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace sepcast {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;
using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Error taxonomy, mapped to CLI exit codes (config=2, data=3, degenerate=4).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateClassError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

uint64_t splitmix64(uint64_t x);
uint64_t fnv1a64(std::string_view s);

/// Deterministic sub-seed derivation: mixes a base seed with a purpose tag
/// and up to two integer qualifiers (horizon, fold, ...). Independent of
/// thread schedule by construction.
uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t a = 0,
                     uint64_t b = 0);

/// Shortest decimal form that parses back to the same double (to_chars).
std::string format_double(double v);

/// Strict double parse of a whole field; returns false on any trailing junk.
bool parse_double(std::string_view field, double& out);

bool parse_int(std::string_view field, long& out);

double sigmoid(double x);
double logit(double p);

}  // namespace sepcast
