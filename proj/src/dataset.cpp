#include "bdw/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bdw/rng.hpp"

namespace bdw {

// Class centers sit on a sphere of this radius around (0.5,...,0.5); chosen
// greedily from seeded candidates to maximize the minimal pairwise distance,
// so low-dimensional layouts stay well separated (2 classes in 2-D end up
// ~0.7 apart, i.e. >= 10 spreads for spread <= 0.07).
static constexpr double kCenterRadius = 0.35;

static std::vector<FeatureVec> place_centers(int k, int dim, std::uint64_t seed) {
  RngStream rs(hash_mix(seed, 0xC3A5C85C97CB3127ull));
  const int n_cand = 64 * k;
  std::vector<FeatureVec> cand(n_cand);
  for (auto& c : cand) {
    c = rs.normal_vec(static_cast<std::size_t>(dim));
    double norm = 0.0;
    for (double v : c) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (double& v : c) v = clamp01(0.5 + kCenterRadius * v / norm);
  }
  auto dist2 = [&](const FeatureVec& a, const FeatureVec& b) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  std::vector<FeatureVec> centers;
  centers.push_back(cand[0]);
  while (static_cast<int>(centers.size()) < k) {
    int best = -1;
    double best_min = -1.0;
    for (int j = 0; j < n_cand; ++j) {
      double mn = 1e300;
      for (const auto& c : centers) mn = std::min(mn, dist2(cand[j], c));
      if (mn > best_min) {
        best_min = mn;
        best = j;
      }
    }
    centers.push_back(cand[best]);
  }
  return centers;
}

BlobData gen_blobs(int num_classes, int dim, double spread, int per_class,
                   std::uint64_t seed) {
  require(num_classes >= 2, "gen_blobs: num_classes must be >= 2");
  require(dim >= 2, "gen_blobs: dim must be >= 2");
  require(per_class >= 1, "gen_blobs: per_class must be >= 1");
  require(spread > 0.0, "gen_blobs: spread must be > 0");

  auto centers = place_centers(num_classes, dim, seed);
  BlobData out;
  out.train.num_classes = out.test.num_classes = num_classes;
  out.train.dim = out.test.dim = dim;
  out.train.split = "train";
  out.test.split = "test";

  const int n_train = (per_class * 4) / 5;  // stratified 80/20
  RngStream rs(hash_mix(seed, 0x8E9D2A1B4C6F0E37ull));
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.label = c;
      s.features.resize(static_cast<std::size_t>(dim));
      auto g = rs.normal_vec(static_cast<std::size_t>(dim));
      for (int d = 0; d < dim; ++d)
        s.features[d] = clamp01(centers[c][d] + spread * g[d]);
      (i < n_train ? out.train : out.test).samples.push_back(std::move(s));
    }
  }
  return out;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream f(path);
  require(f.good(), "save_csv: cannot open " + path);
  f << "label,dim=" << ds.dim << ",classes=" << ds.num_classes << "\n";
  char buf[32];
  for (const auto& s : ds.samples) {
    f << s.label;
    for (double v : s.features) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      f << ',' << buf;
    }
    f << "\n";
  }
}

Dataset load_csv(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "load_csv: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(f, line)), "load_csv: empty file " + path);
  Dataset ds;
  if (std::sscanf(line.c_str(), "label,dim=%d,classes=%d", &ds.dim,
                  &ds.num_classes) != 2)
    throw std::invalid_argument("load_csv: bad header in " + path + ": " + line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    Sample s;
    require(static_cast<bool>(std::getline(ss, tok, ',')), "load_csv: bad row");
    s.label = std::stoi(tok);
    while (std::getline(ss, tok, ',')) s.features.push_back(std::stod(tok));
    require(static_cast<int>(s.features.size()) == ds.dim,
            "load_csv: row dim mismatch in " + path);
    require(s.label >= 0 && s.label < ds.num_classes,
            "load_csv: label out of range in " + path);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace bdw
