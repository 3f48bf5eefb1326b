#pragma once
// Shared domain types and error taxonomy.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdw {

using FeatureVec = std::vector<double>;

struct Sample {
  FeatureVec features;  // M values in [0,1]
  int label = 0;        // class index in [0, N)
};

struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;  // N
  int dim = 0;          // M
  std::string split;    // "train" | "test" | ""
};

// N per-class confidence scores. Pre-defense vectors are a probability
// simplex; post-defense vectors may not be (noise is added, never renormalized).
using ConfidenceVector = std::vector<double>;

// Domain failures map to CLI exit code 1; config/usage failures (thrown as
// std::invalid_argument) map to exit code 2.
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct init_not_found : domain_error {
  using domain_error::domain_error;
};
struct calibration_failed : domain_error {
  using domain_error::domain_error;
};
struct nu_out_of_range : domain_error {
  using domain_error::domain_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Global argmax rule: ties break to the lowest index.
inline int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

// Normalized l2 distortion: sqrt(sum((x-x0)^2) / M).
inline double l2_distortion(const FeatureVec& x, const FeatureVec& x0) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - x0[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace bdw
