#pragma once
// Victim classifiers exposing the raw (pre-defense) confidence vector.
//
// Two kinds:
//   prototype — per-class feature means; scores = softmax(-temperature * d_k^2)
//   mlp       — one hidden ReLU layer (fixed width 32), softmax output,
//               trained by seeded mini-batch gradient descent
//
// Classifiers are immutable after training; prediction is thread-safe.

#include <string>

#include "bdw/types.hpp"

namespace bdw {

enum class ClassifierKind { prototype, mlp };

struct Classifier {
  ClassifierKind kind = ClassifierKind::prototype;
  int num_classes = 0;  // N
  int dim = 0;          // M
  // prototype: centers row-major (N x M).
  // mlp: W1 (H x M) | b1 (H) | W2 (N x H) | b2 (N), H inferred from size.
  std::vector<double> params;
  double temperature = 1.0;  // multiplies logits before softmax

  int hidden() const {  // mlp only
    return static_cast<int>(params.size() - static_cast<std::size_t>(num_classes)) /
           (dim + num_classes + 1);
  }
};

constexpr int kMlpHidden = 32;
constexpr int kMlpBatch = 32;

// Builds a prototype classifier directly from explicit centers.
Classifier make_prototype(const std::vector<FeatureVec>& centers, double temperature);

// Trains on `dataset`. prototype: class means + 1-D temperature search
// maximizing training likelihood (falls back to 1.0 when nothing improves);
// epochs/lr are ignored. mlp: seeded mini-batch GD with softmax cross-entropy.
// Deterministic in (dataset, kind, epochs, lr, seed); single-threaded.
Classifier train(const Dataset& dataset, ClassifierKind kind, int epochs, double lr,
                 std::uint64_t seed);

ConfidenceVector predict_soft(const Classifier& clf, const FeatureVec& x);
int predict_hard(const Classifier& clf, const FeatureVec& x);

double accuracy(const Classifier& clf, const Dataset& ds);

// JSON object {kind, N, M, params, temperature}; params order as above.
void save_classifier(const Classifier& clf, const std::string& path);
Classifier load_classifier(const std::string& path);

}  // namespace bdw
