#pragma once
// Synthetic Gaussian-blob datasets and CSV (de)serialization.

#include <string>

#include "bdw/types.hpp"

namespace bdw {

struct BlobData {
  Dataset train;
  Dataset test;
};

// Generates per_class samples per class around deterministic class centers
// (greedy max-min placement on a sphere of radius 0.35 around the cube
// center), features clipped to [0,1], stratified 80/20 train/test split.
// Requires num_classes >= 2, dim >= 2, per_class >= 1, spread > 0.
BlobData gen_blobs(int num_classes, int dim, double spread, int per_class,
                   std::uint64_t seed);

// CSV format: header `label,dim=M,classes=N`, then one row per sample:
// `label,f_0,...,f_{M-1}`.
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

}  // namespace bdw
