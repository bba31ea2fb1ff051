#pragma once

#include <string>
#include <vector>

#include "sada/rng.hpp"
#include "sada/tape.hpp"

namespace sada {

// Selective attack: per-augmentation adapter pairs produce a spatial
// attention map; training adds Gaussian noise weighted by 1 - M∘M, inference
// reuses the averaged adapters to modulate the input instead.

// Attention maps live on the tape as HxWx1 tensors with entries in (0, 1).
using SpatialAttention = Tensor;

constexpr int kAttentionChannels = 8;  // conv7 output width

// Trainable parameter storage for one augmentation group.
struct AdapterGroup {
    Tensor conv7;  // 7 x 7 x C x kAttentionChannels
    Tensor conv3;  // 3 x 3 x 2 x 1
    int group_index = 0;
    bool frozen = false;
};

AdapterGroup make_adapter(int channels, int group_index, Rng& rng);

// Per-step tape handles of one adapter's parameters.
struct AdapterLeaves {
    Tensor conv7;
    Tensor conv3;
};

AdapterLeaves register_adapter(Tape& tape, const AdapterGroup& adapter);

// F = sigmoid(conv7(x)); M = sigmoid(conv3([avg_pool(F), max_pool(F)]))
SpatialAttention spatial_attention(Tape& tape, const AdapterLeaves& adapter, const Tensor& x);

// k(M) = 1 - M∘M
Tensor kernelize(Tape& tape, const SpatialAttention& m);

// x' = x + k(M) ∘ delta with delta ~ N(0, sigma^2) per spatial position,
// broadcast across channels. sigma == 0 returns x unchanged.
Tensor selective_attack(Tape& tape, const Tensor& x, const SpatialAttention& m, double sigma,
                        Rng& rng);

// Arithmetic mean of the groups' parameters; the result is frozen.
AdapterGroup average_adapters(const std::vector<AdapterGroup>& groups);

enum class InferenceMode { modulate, passthrough };
InferenceMode inference_mode_from_name(const std::string& name);
const char* inference_mode_name(InferenceMode mode);

// modulate: x ∘ M with M from the averaged adapter; passthrough: x. No noise
// is ever added here.
Tensor inference_transform(Tape& tape, const AdapterLeaves& adapter_avg, const Tensor& x,
                           InferenceMode mode);

}  // namespace sada
