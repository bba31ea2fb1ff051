#pragma once

#include <functional>
#include <vector>

#include "sada/rng.hpp"
#include "sada/tape.hpp"

namespace sada {

// Frozen, seed-deterministic stand-ins for a pretrained image/text encoder
// pair mapping into a shared D-dimensional space. Parameters never require
// gradients; gradients still flow through them to whatever feeds the input.

struct EncoderDims {
    int H = 32;
    int W = 32;
    int C = 3;
    int E = 32;   // token embedding width
    int D = 64;   // shared feature width
    int blocks = 2;
};

// Applied at one point of the image encoder stack; stage 0 is the raw input,
// stage b (1-based) is the feature map after block b.
using ImageHook = std::function<Tensor(Tape&, const Tensor&)>;

class FrozenImageEncoder {
public:
    FrozenImageEncoder() = default;
    FrozenImageEncoder(const EncoderDims& dims, Rng rng);

    // hook/position: optional transform spliced into the stack (selective
    // attack at training, attention modulation at inference).
    Tensor encode(Tape& tape, const Tensor& image, const ImageHook& hook = {},
                  int hook_position = 0) const;

    const EncoderDims& dims() const { return dims_; }
    int channels_at(int position) const;  // channel count seen by a hook
    std::vector<double> parameter_snapshot() const;

private:
    EncoderDims dims_;
    std::vector<Tensor> block_kernels_;  // 3x3xCinxCout each
    Tensor head_;                        // D x C_last linear map
};

class FrozenTextEncoder {
public:
    FrozenTextEncoder() = default;
    FrozenTextEncoder(const EncoderDims& dims, int prompt_rows, Rng rng);

    // tokens: (M+1) x E sequence pooled into one E-vector, then two frozen
    // linear maps with a centered sigmoid between, l2-normalized output.
    // When cls_row is given, pooling weighs the class-token row and the mean
    // of the context rows equally; a plain row mean would dilute the class
    // signal M+1 fold, which leaves the class geometry untrainable at the
    // desk scale. cls_row < 0 falls back to the plain mean.
    Tensor encode(Tape& tape, const Tensor& tokens, int cls_row = -1) const;

    int prompt_rows() const { return prompt_rows_; }
    std::vector<double> parameter_snapshot() const;

private:
    EncoderDims dims_;
    int prompt_rows_ = 0;
    Tensor w1_;  // D x E
    Tensor w2_;  // D x D
};

// One fixed unit-norm embedding row per class name token.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(int num_classes, int E, Rng rng);

    const std::vector<double>& row(int k) const;
    int num_classes() const { return static_cast<int>(rows_.size()); }
    int width() const { return rows_.empty() ? 0 : static_cast<int>(rows_[0].size()); }

private:
    std::vector<std::vector<double>> rows_;
};

struct Encoders {
    FrozenImageEncoder image;
    FrozenTextEncoder text;
    EmbeddingTable table;
};

// prompt_len is the number of learnable context rows M; text sequences carry
// M+1 rows including the class token.
Encoders build_encoders(std::uint64_t seed, const EncoderDims& dims, int num_classes,
                        int prompt_len);

}  // namespace sada
