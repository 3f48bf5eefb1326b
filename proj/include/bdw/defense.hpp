#pragma once
// The BD(theta, sigma) oracle: wraps a classifier, detects boundary queries by
// confidence threshold, scrambles their confidence vectors with iid Gaussian
// noise, and serves soft or hard labels while counting queries.

#include <cstdint>

#include "bdw/classifier.hpp"
#include "bdw/types.hpp"

namespace bdw {

enum class OracleMode { soft, hard };

struct DefenseConfig {
  double theta = 0.0;  // pass-through when max F(x) > theta (strict)
  double sigma = 0.0;  // noise standard deviation
  std::uint64_t seed = 0;
  OracleMode mode = OracleMode::soft;
};

struct QueryLedger {
  std::uint64_t count = 0;
};

// If max(scores) > theta returns scores unchanged, else scores + noise
// elementwise. Never renormalizes.
ConfidenceVector bd_transform(const ConfidenceVector& scores, double theta,
                              double sigma, const std::vector<double>& noise);

// Noise vector for query index q: element i is sigma * N(0,1) drawn as a pure
// function of (seed, q, i). Exposed so tests can replay the stream.
std::vector<double> defense_noise(std::uint64_t seed, std::uint64_t query_index,
                                  int n, double sigma);

class DefendedOracle {
 public:
  DefendedOracle(Classifier classifier, DefenseConfig config)
      : clf_(std::move(classifier)), cfg_(config) {
    require(cfg_.theta >= 0.0 && cfg_.theta <= 1.0, "defense: theta must be in [0,1]");
    require(cfg_.sigma >= 0.0, "defense: sigma must be >= 0");
  }

  // Soft response: bd_transform then clip to [0,1]; ledger +1.
  ConfidenceVector query_soft(const FeatureVec& x) {
    return query_soft_at(x, ledger_.count++);
  }
  // Hard response: argmax (lowest-index ties) of the UNCLIPPED noisy vector.
  int query_hard(const FeatureVec& x) { return query_hard_at(x, ledger_.count++); }

  // Pure replay variants: the response query `q` would receive. Used for the
  // replay test and for parallel accuracy measurement (counter := sample
  // index); they do not touch the ledger.
  ConfidenceVector query_soft_at(const FeatureVec& x, std::uint64_t q) const;
  int query_hard_at(const FeatureVec& x, std::uint64_t q) const;

  const QueryLedger& ledger() const { return ledger_; }
  void reset_ledger() { ledger_.count = 0; }
  void add_queries(std::uint64_t n) { ledger_.count += n; }

  const Classifier& classifier() const { return clf_; }
  const DefenseConfig& config() const { return cfg_; }
  OracleMode mode() const { return cfg_.mode; }

 private:
  Classifier clf_;
  DefenseConfig cfg_;
  QueryLedger ledger_;
};

}  // namespace bdw
