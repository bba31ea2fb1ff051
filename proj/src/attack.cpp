#include "sada/attack.hpp"

#include <cmath>

#include "sada/errors.hpp"

namespace sada {

namespace {

Tensor uniform_fan_in(std::vector<int> shape, int fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.values) v = rng.uniform(-s, s);
    return t;
}

}  // namespace

AdapterGroup make_adapter(int channels, int group_index, Rng& rng) {
    if (channels < 1) throw ConfigError("adapter: channel count must be positive");
    AdapterGroup g;
    g.conv7 = uniform_fan_in({7, 7, channels, kAttentionChannels}, 7 * 7 * channels, rng);
    g.conv3 = uniform_fan_in({3, 3, 2, 1}, 3 * 3 * 2, rng);
    g.group_index = group_index;
    return g;
}

AdapterLeaves register_adapter(Tape& tape, const AdapterGroup& adapter) {
    const bool trainable = !adapter.frozen;
    return AdapterLeaves{tape.leaf(adapter.conv7.shape, adapter.conv7.values, trainable),
                         tape.leaf(adapter.conv3.shape, adapter.conv3.values, trainable)};
}

SpatialAttention spatial_attention(Tape& tape, const AdapterLeaves& adapter, const Tensor& x) {
    Tensor f = tape.sigmoid(tape.conv2d_same(x, adapter.conv7));
    Tensor pooled = tape.concat({tape.channel_avg_pool(f), tape.channel_max_pool(f)}, 2);
    return tape.sigmoid(tape.conv2d_same(pooled, adapter.conv3));
}

Tensor kernelize(Tape& tape, const SpatialAttention& m) {
    Tensor ones = tape.constant(Tensor::full(m.shape, 1.0));
    return tape.sub(ones, tape.square(m));
}

Tensor selective_attack(Tape& tape, const Tensor& x, const SpatialAttention& m, double sigma,
                        Rng& rng) {
    if (sigma < 0.0) throw ConfigError("selective_attack: sigma must be non-negative");
    if (m.rank() != 3 || m.shape[0] != x.shape[0] || m.shape[1] != x.shape[1] || m.shape[2] != 1)
        throw ShapeError("selective_attack: attention " + shape_str(m.shape) +
                         " does not match image " + shape_str(x.shape));
    if (sigma == 0.0) return x;
    Tensor delta = Tensor::zeros(m.shape);  // one draw per spatial position
    for (auto& v : delta.values) v = rng.normal(0.0, sigma);
    Tensor masked = tape.hadamard(kernelize(tape, m), tape.constant(delta));
    return tape.add(x, masked);
}

AdapterGroup average_adapters(const std::vector<AdapterGroup>& groups) {
    if (groups.empty()) throw ConfigError("average_adapters: empty group list");
    AdapterGroup avg;
    avg.conv7 = Tensor::zeros(groups[0].conv7.shape);
    avg.conv3 = Tensor::zeros(groups[0].conv3.shape);
    for (const auto& g : groups) {
        if (g.conv7.shape != avg.conv7.shape || g.conv3.shape != avg.conv3.shape)
            throw ShapeError("average_adapters: kernel shape mismatch across groups");
        for (std::size_t i = 0; i < avg.conv7.values.size(); ++i)
            avg.conv7.values[i] += g.conv7.values[i];
        for (std::size_t i = 0; i < avg.conv3.values.size(); ++i)
            avg.conv3.values[i] += g.conv3.values[i];
    }
    const double n = static_cast<double>(groups.size());
    for (auto& v : avg.conv7.values) v /= n;
    for (auto& v : avg.conv3.values) v /= n;
    avg.frozen = true;
    return avg;
}

InferenceMode inference_mode_from_name(const std::string& name) {
    if (name == "modulate") return InferenceMode::modulate;
    if (name == "passthrough") return InferenceMode::passthrough;
    throw ConfigError("unknown inference mode: " + name);
}

const char* inference_mode_name(InferenceMode mode) {
    return mode == InferenceMode::modulate ? "modulate" : "passthrough";
}

Tensor inference_transform(Tape& tape, const AdapterLeaves& adapter_avg, const Tensor& x,
                           InferenceMode mode) {
    if (mode == InferenceMode::passthrough) return x;
    SpatialAttention m = spatial_attention(tape, adapter_avg, x);
    return tape.hadamard(x, m);
}

}  // namespace sada
