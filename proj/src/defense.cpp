#include "bdw/defense.hpp"

#include <algorithm>

#include "bdw/rng.hpp"

namespace bdw {

ConfidenceVector bd_transform(const ConfidenceVector& scores, double theta,
                              double sigma, const std::vector<double>& noise) {
  (void)sigma;  // the caller scales the noise; kept for signature clarity
  require(noise.size() == scores.size(), "bd_transform: noise length mismatch");
  double mx = *std::max_element(scores.begin(), scores.end());
  if (mx > theta) return scores;
  ConfidenceVector out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] + noise[i];
  return out;
}

std::vector<double> defense_noise(std::uint64_t seed, std::uint64_t query_index,
                                  int n, double sigma) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v[i] = sigma * normal_at(seed, query_index, static_cast<std::uint64_t>(i));
  return v;
}

ConfidenceVector DefendedOracle::query_soft_at(const FeatureVec& x,
                                               std::uint64_t q) const {
  auto scores = predict_soft(clf_, x);
  auto noise = defense_noise(cfg_.seed, q, clf_.num_classes, cfg_.sigma);
  auto out = bd_transform(scores, cfg_.theta, cfg_.sigma, noise);
  for (double& v : out) v = clamp01(v);
  return out;
}

int DefendedOracle::query_hard_at(const FeatureVec& x, std::uint64_t q) const {
  auto scores = predict_soft(clf_, x);
  auto noise = defense_noise(cfg_.seed, q, clf_.num_classes, cfg_.sigma);
  auto out = bd_transform(scores, cfg_.theta, cfg_.sigma, noise);
  return argmax_lowest(out);
}

}  // namespace bdw
