#pragma once

#include <cstdint>

#include "sada/pipeline.hpp"

namespace sada {

// Synthetic glyph-over-clutter classification data. Every image is a
// class-specific colored glyph at a random position over class-independent
// clutter, with the glyph support recorded as a ground-truth mask. Splits
// are deterministic in the seed and disjoint by construction.

struct DatasetSpec {
    int num_classes = 5;
    int shots = 1;              // default N used by sample_task
    int n_test_per_class = 100;
    int pool_per_class = 20;    // N-shot sets are resampled from this pool
    int H = 32, W = 32, C = 3;
    std::uint64_t seed = 99;
};

struct SyntheticDataset {
    DatasetSpec spec;
    std::vector<LabeledImage> train_pool;  // grouped by class, pool order
    std::vector<LabeledImage> val;         // 20% of the generated pool
    std::vector<LabeledImage> test;        // class-balanced
};

SyntheticDataset generate_synthetic(const DatasetSpec& spec);
SyntheticDataset generate_synthetic(int num_classes, int shots, int n_test_per_class,
                                    std::uint64_t seed);

// Draws a fresh N-shot training set from the pool; val and test are shared.
FewShotTask sample_task(const SyntheticDataset& data, int shots, std::uint64_t sample_seed);

}  // namespace sada
