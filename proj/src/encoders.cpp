#include "sada/encoders.hpp"

#include <cmath>

#include "sada/errors.hpp"

namespace sada {

namespace {

constexpr int kHiddenChannels = 8;

Tensor uniform_fan_in(std::vector<int> shape, int fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.values) v = rng.uniform(-s, s);
    return t;
}

// Residual centered sigmoid: x + sigmoid(x) - 1/2. Two properties matter
// at desk scale. Centering: the raw sigmoid pins all frozen activations near
// 0.5, which leaves every feature sharing one constant direction and
// collapses cosine similarities to 1. The identity path: plain sigmoid
// derivatives of at most 1/4 per layer shrink the Jacobians so far that the
// paper's learning-rate and epoch budget cannot move prompts or adapters
// measurably; with the residual the gain is 1..1.25 and the stand-ins stay
// trainable through, while still being nonlinear maps.
Tensor centered_sigmoid(Tape& tape, const Tensor& x) {
    return tape.add(x, tape.sub(tape.sigmoid(x), tape.constant(Tensor::full(x.shape, 0.5))));
}

}  // namespace

FrozenImageEncoder::FrozenImageEncoder(const EncoderDims& dims, Rng rng) : dims_(dims) {
    if (dims.H <= 0 || dims.W <= 0 || dims.C <= 0 || dims.D <= 0 || dims.blocks < 1)
        throw ConfigError("image encoder: non-positive dimension");
    if ((dims.H >> dims.blocks) << dims.blocks != dims.H ||
        (dims.W >> dims.blocks) << dims.blocks != dims.W)
        throw ConfigError("image encoder: H and W must be divisible by 2^blocks");
    int cin = dims.C;
    for (int b = 0; b < dims.blocks; ++b) {
        block_kernels_.push_back(uniform_fan_in({3, 3, cin, kHiddenChannels}, 3 * 3 * cin, rng));
        cin = kHiddenChannels;
    }
    head_ = uniform_fan_in({dims.D, cin}, cin, rng);
}

int FrozenImageEncoder::channels_at(int position) const {
    if (position < 0 || position > dims_.blocks)
        throw ConfigError("image encoder: hook position " + std::to_string(position) +
                          " outside [0, " + std::to_string(dims_.blocks) + "]");
    return position == 0 ? dims_.C : kHiddenChannels;
}

Tensor FrozenImageEncoder::encode(Tape& tape, const Tensor& image, const ImageHook& hook,
                                  int hook_position) const {
    if (image.shape != std::vector<int>{dims_.H, dims_.W, dims_.C})
        throw ShapeError("encode_image: expected " +
                         shape_str({dims_.H, dims_.W, dims_.C}) + ", got " +
                         shape_str(image.shape));
    Tensor x = image;
    if (hook && hook_position == 0) x = hook(tape, x);
    for (int b = 0; b < dims_.blocks; ++b) {
        x = tape.avg_pool2x2(centered_sigmoid(tape, tape.conv2d_same(x, block_kernels_[b])));
        if (hook && hook_position == b + 1) x = hook(tape, x);
    }
    Tensor pooled = tape.reduce_mean(x, {0, 1});
    return tape.l2_normalize(tape.matvec(tape.constant(head_), pooled));
}

std::vector<double> FrozenImageEncoder::parameter_snapshot() const {
    std::vector<double> out;
    for (const auto& k : block_kernels_) out.insert(out.end(), k.values.begin(), k.values.end());
    out.insert(out.end(), head_.values.begin(), head_.values.end());
    return out;
}

FrozenTextEncoder::FrozenTextEncoder(const EncoderDims& dims, int prompt_rows, Rng rng)
    : dims_(dims), prompt_rows_(prompt_rows) {
    if (dims.E <= 0 || dims.D <= 0 || prompt_rows < 1)
        throw ConfigError("text encoder: non-positive dimension");
    w1_ = uniform_fan_in({dims.D, dims.E}, dims.E, rng);
    w2_ = uniform_fan_in({dims.D, dims.D}, dims.D, rng);
}

Tensor FrozenTextEncoder::encode(Tape& tape, const Tensor& tokens, int cls_row) const {
    if (tokens.rank() != 2 || tokens.shape[1] != dims_.E || tokens.shape[0] != prompt_rows_)
        throw ShapeError("encode_text: expected " + shape_str({prompt_rows_, dims_.E}) +
                         " token sequence, got " + shape_str(tokens.shape));
    if (cls_row >= prompt_rows_)
        throw ShapeError("encode_text: class row " + std::to_string(cls_row) + " out of range");
    Tensor pooled = tape.reduce_mean(tokens);
    if (cls_row >= 0 && prompt_rows_ > 1) {
        // pooled = (context mean + cls) / 2, recovered from the full mean
        const int rows = prompt_rows_;
        Tensor cls = tape.reshape(tape.slice(tokens, cls_row, cls_row + 1), {dims_.E});
        Tensor ctx_mean = tape.scale(
            tape.sub(tape.scale(pooled, static_cast<double>(rows)), cls),
            1.0 / static_cast<double>(rows - 1));
        pooled = tape.scale(tape.add(ctx_mean, cls), 0.5);
    }
    Tensor hidden = centered_sigmoid(tape, tape.matvec(tape.constant(w1_), pooled));
    return tape.l2_normalize(tape.matvec(tape.constant(w2_), hidden));
}

std::vector<double> FrozenTextEncoder::parameter_snapshot() const {
    std::vector<double> out(w1_.values);
    out.insert(out.end(), w2_.values.begin(), w2_.values.end());
    return out;
}

EmbeddingTable::EmbeddingTable(int num_classes, int E, Rng rng) {
    if (num_classes < 1 || E < 1) throw ConfigError("embedding table: non-positive dimension");
    rows_.resize(static_cast<std::size_t>(num_classes));
    for (auto& row : rows_) {
        row.resize(static_cast<std::size_t>(E));
        double norm = 0.0;
        for (auto& v : row) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : row) v /= norm;
    }
}

const std::vector<double>& EmbeddingTable::row(int k) const {
    if (k < 0 || k >= num_classes())
        throw IndexError("class token " + std::to_string(k) + " of " +
                         std::to_string(num_classes()));
    return rows_[static_cast<std::size_t>(k)];
}

Encoders build_encoders(std::uint64_t seed, const EncoderDims& dims, int num_classes,
                        int prompt_len) {
    Rng root(seed);
    Encoders e;
    e.image = FrozenImageEncoder(dims, root.derive(1));
    e.text = FrozenTextEncoder(dims, prompt_len + 1, root.derive(2));
    e.table = EmbeddingTable(num_classes, dims.E, root.derive(3));
    return e;
}

}  // namespace sada
