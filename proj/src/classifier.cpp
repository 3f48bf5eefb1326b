#include "bdw/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "bdw/rng.hpp"

namespace bdw {

static void softmax_inplace(std::vector<double>& z) {
  double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

// Raw logits before temperature scaling.
static std::vector<double> logits(const Classifier& clf, const FeatureVec& x) {
  const int N = clf.num_classes, M = clf.dim;
  std::vector<double> z(static_cast<std::size_t>(N));
  if (clf.kind == ClassifierKind::prototype) {
    for (int k = 0; k < N; ++k) {
      const double* c = clf.params.data() + static_cast<std::size_t>(k) * M;
      double d2 = 0.0;
      for (int j = 0; j < M; ++j) {
        double d = x[j] - c[j];
        d2 += d * d;
      }
      z[k] = -d2;
    }
  } else {
    const int H = clf.hidden();
    const double* W1 = clf.params.data();
    const double* b1 = W1 + static_cast<std::size_t>(H) * M;
    const double* W2 = b1 + H;
    const double* b2 = W2 + static_cast<std::size_t>(N) * H;
    std::vector<double> h(static_cast<std::size_t>(H));
    for (int i = 0; i < H; ++i) {
      double a = b1[i];
      const double* w = W1 + static_cast<std::size_t>(i) * M;
      for (int j = 0; j < M; ++j) a += w[j] * x[j];
      h[i] = a > 0.0 ? a : 0.0;
    }
    for (int k = 0; k < N; ++k) {
      double a = b2[k];
      const double* w = W2 + static_cast<std::size_t>(k) * H;
      for (int i = 0; i < H; ++i) a += w[i] * h[i];
      z[k] = a;
    }
  }
  return z;
}

ConfidenceVector predict_soft(const Classifier& clf, const FeatureVec& x) {
  require(static_cast<int>(x.size()) == clf.dim,
          "predict_soft: feature dimension mismatch");
  auto z = logits(clf, x);
  for (double& v : z) v *= clf.temperature;
  softmax_inplace(z);
  return z;
}

int predict_hard(const Classifier& clf, const FeatureVec& x) {
  return argmax_lowest(predict_soft(clf, x));
}

double accuracy(const Classifier& clf, const Dataset& ds) {
  require(!ds.samples.empty(), "accuracy: empty dataset");
  int ok = 0;
  for (const auto& s : ds.samples)
    if (predict_hard(clf, s.features) == s.label) ++ok;
  return static_cast<double>(ok) / static_cast<double>(ds.samples.size());
}

Classifier make_prototype(const std::vector<FeatureVec>& centers, double temperature) {
  require(!centers.empty(), "make_prototype: no centers");
  Classifier clf;
  clf.kind = ClassifierKind::prototype;
  clf.num_classes = static_cast<int>(centers.size());
  clf.dim = static_cast<int>(centers[0].size());
  clf.temperature = temperature;
  for (const auto& c : centers) {
    require(static_cast<int>(c.size()) == clf.dim, "make_prototype: ragged centers");
    clf.params.insert(clf.params.end(), c.begin(), c.end());
  }
  return clf;
}

// Mean train log-likelihood of the prototype model at a given temperature.
static double proto_loglik(const Classifier& clf, const Dataset& ds, double tau) {
  double ll = 0.0;
  for (const auto& s : ds.samples) {
    auto z = logits(clf, s.features);
    for (double& v : z) v *= tau;
    double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    ll += z[s.label] - mx - std::log(sum);
  }
  return ll / static_cast<double>(ds.samples.size());
}

static Classifier train_prototype(const Dataset& ds) {
  const int N = ds.num_classes, M = ds.dim;
  std::vector<FeatureVec> centers(static_cast<std::size_t>(N),
                                  FeatureVec(static_cast<std::size_t>(M), 0.0));
  std::vector<int> counts(static_cast<std::size_t>(N), 0);
  for (const auto& s : ds.samples) {
    ++counts[s.label];
    for (int j = 0; j < M; ++j) centers[s.label][j] += s.features[j];
  }
  for (int k = 0; k < N; ++k) {
    require(counts[k] > 0, "train: class " + std::to_string(k) + " has no samples");
    for (int j = 0; j < M; ++j) centers[k][j] /= counts[k];
  }
  Classifier clf = make_prototype(centers, 1.0);
  // 1-D likelihood search over a fixed log grid; keep 1.0 unless improved.
  double best_tau = 1.0, best_ll = proto_loglik(clf, ds, 1.0);
  for (int i = 0; i <= 60; ++i) {
    double tau = 1e-2 * std::pow(10.0, 5.0 * i / 60.0);  // 1e-2 .. 1e3
    double ll = proto_loglik(clf, ds, tau);
    if (ll > best_ll) {
      best_ll = ll;
      best_tau = tau;
    }
  }
  clf.temperature = best_tau;
  return clf;
}

static Classifier train_mlp(const Dataset& ds, int epochs, double lr,
                            std::uint64_t seed) {
  const int N = ds.num_classes, M = ds.dim, H = kMlpHidden;
  Classifier clf;
  clf.kind = ClassifierKind::mlp;
  clf.num_classes = N;
  clf.dim = M;
  clf.temperature = 1.0;
  clf.params.resize(static_cast<std::size_t>(H) * M + H +
                    static_cast<std::size_t>(N) * H + N);

  double* W1 = clf.params.data();
  double* b1 = W1 + static_cast<std::size_t>(H) * M;
  double* W2 = b1 + H;
  double* b2 = W2 + static_cast<std::size_t>(N) * H;

  RngStream rs(hash_mix(seed, 0x5D1E9F3B7A2C4E68ull));
  double s1 = 1.0 / std::sqrt(static_cast<double>(M));
  double s2 = 1.0 / std::sqrt(static_cast<double>(H));
  for (int i = 0; i < H * M; ++i) W1[i] = rs.uniform(-s1, s1);
  for (int i = 0; i < H; ++i) b1[i] = 0.0;
  for (int i = 0; i < N * H; ++i) W2[i] = rs.uniform(-s2, s2);
  for (int i = 0; i < N; ++i) b2[i] = 0.0;

  const std::size_t n = ds.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> gW1(static_cast<std::size_t>(H) * M), gb1(H);
  std::vector<double> gW2(static_cast<std::size_t>(N) * H), gb2(N);
  std::vector<double> h(H), dh(H);

  for (int ep = 0; ep < epochs; ++ep) {
    rs.shuffle(order);
    for (std::size_t start = 0; start < n; start += kMlpBatch) {
      std::size_t bsz = std::min<std::size_t>(kMlpBatch, n - start);
      std::fill(gW1.begin(), gW1.end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gW2.begin(), gW2.end(), 0.0);
      std::fill(gb2.begin(), gb2.end(), 0.0);
      for (std::size_t bi = 0; bi < bsz; ++bi) {
        const Sample& s = ds.samples[order[start + bi]];
        const double* x = s.features.data();
        for (int i = 0; i < H; ++i) {
          double a = b1[i];
          const double* w = W1 + static_cast<std::size_t>(i) * M;
          for (int j = 0; j < M; ++j) a += w[j] * x[j];
          h[i] = a > 0.0 ? a : 0.0;
        }
        std::vector<double> p(static_cast<std::size_t>(N));
        for (int k = 0; k < N; ++k) {
          double a = b2[k];
          const double* w = W2 + static_cast<std::size_t>(k) * H;
          for (int i = 0; i < H; ++i) a += w[i] * h[i];
          p[k] = a;
        }
        softmax_inplace(p);
        p[s.label] -= 1.0;  // dL/dlogit
        for (int k = 0; k < N; ++k) {
          gb2[k] += p[k];
          double* gw = gW2.data() + static_cast<std::size_t>(k) * H;
          for (int i = 0; i < H; ++i) gw[i] += p[k] * h[i];
        }
        for (int i = 0; i < H; ++i) {
          if (h[i] <= 0.0) {
            dh[i] = 0.0;
            continue;
          }
          double a = 0.0;
          for (int k = 0; k < N; ++k) a += p[k] * W2[static_cast<std::size_t>(k) * H + i];
          dh[i] = a;
        }
        for (int i = 0; i < H; ++i) {
          if (dh[i] == 0.0) continue;
          gb1[i] += dh[i];
          double* gw = gW1.data() + static_cast<std::size_t>(i) * M;
          for (int j = 0; j < M; ++j) gw[j] += dh[i] * x[j];
        }
      }
      double scale = lr / static_cast<double>(bsz);
      for (int i = 0; i < H * M; ++i) W1[i] -= scale * gW1[i];
      for (int i = 0; i < H; ++i) b1[i] -= scale * gb1[i];
      for (int i = 0; i < N * H; ++i) W2[i] -= scale * gW2[i];
      for (int i = 0; i < N; ++i) b2[i] -= scale * gb2[i];
    }
  }
  return clf;
}

Classifier train(const Dataset& dataset, ClassifierKind kind, int epochs, double lr,
                 std::uint64_t seed) {
  require(!dataset.samples.empty(), "train: empty dataset");
  require(lr > 0.0, "train: lr must be > 0");
  require(dataset.num_classes >= 2, "train: need at least 2 classes");
  if (kind == ClassifierKind::prototype) return train_prototype(dataset);
  return train_mlp(dataset, epochs, lr, seed);
}

void save_classifier(const Classifier& clf, const std::string& path) {
  nlohmann::json j;
  j["kind"] = clf.kind == ClassifierKind::prototype ? "prototype" : "mlp";
  j["N"] = clf.num_classes;
  j["M"] = clf.dim;
  j["params"] = clf.params;
  j["temperature"] = clf.temperature;
  std::ofstream f(path);
  require(f.good(), "save_classifier: cannot open " + path);
  f << j.dump(2) << "\n";
}

Classifier load_classifier(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "load_classifier: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  Classifier clf;
  std::string kind = j.at("kind").get<std::string>();
  require(kind == "prototype" || kind == "mlp", "load_classifier: unknown kind " + kind);
  clf.kind = kind == "prototype" ? ClassifierKind::prototype : ClassifierKind::mlp;
  clf.num_classes = j.at("N").get<int>();
  clf.dim = j.at("M").get<int>();
  clf.params = j.at("params").get<std::vector<double>>();
  clf.temperature = j.at("temperature").get<double>();
  std::size_t expect =
      clf.kind == ClassifierKind::prototype
          ? static_cast<std::size_t>(clf.num_classes) * clf.dim
          : static_cast<std::size_t>(clf.hidden()) * (clf.dim + clf.num_classes + 1) +
                clf.num_classes;
  require(clf.params.size() == expect, "load_classifier: bad params length");
  return clf;
}

}  // namespace bdw
