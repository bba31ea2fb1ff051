#pragma once

#include <cstdint>

namespace sada::kernels {

// Raw array kernels behind the tape. Layout conventions:
//   images   H x W x C, row-major, channel fastest
//   conv     Kh x Kw x Cin x Cout
//   matrices R x C
// Forward and backward of each op live side by side. The element loops run
// through parallel_for (see parallel.hpp); reductions inside one output
// element are sequential, so results do not depend on the backend.

// ---------------------------------------------------------------- conv2d
// Zero-padded "same" convolution: output spatial size equals input.
void conv2d_same(const double* x, int H, int W, int Ci, const double* k, int Kh, int Kw, int Co,
                 double* y);
void conv2d_same_grad_x(const double* gy, int H, int W, int Ci, const double* k, int Kh, int Kw,
                        int Co, double* gx);
void conv2d_same_grad_k(const double* x, const double* gy, int H, int W, int Ci, int Kh, int Kw,
                        int Co, double* gk);

// ---------------------------------------------------------------- pooling
// 2x2 average pooling, stride 2. H and W must be even.
void avg_pool2x2(const double* x, int H, int W, int C, double* y);
void avg_pool2x2_grad(const double* gy, int H, int W, int C, double* gx);

// Channel-wise pooling, HxWxC -> HxWx1.
void channel_avg_pool(const double* x, int H, int W, int C, double* y);
void channel_avg_pool_grad(const double* gy, int H, int W, int C, double* gx);
// Ties route the gradient to the first maximal channel.
void channel_max_pool(const double* x, int H, int W, int C, double* y);
void channel_max_pool_grad(const double* x, const double* gy, int H, int W, int C, double* gx);

// ---------------------------------------------------------------- unary
void sigmoid(const double* x, std::int64_t n, double* y);
void sigmoid_grad(const double* y, const double* gy, std::int64_t n, double* gx);
// Input is clamped at kSqrtClamp before the root so the gradient stays
// finite when variances collapse; below the clamp the gradient is zero.
constexpr double kSqrtClamp = 1e-12;
void sqrt_clamped(const double* x, std::int64_t n, double* y);
void sqrt_clamped_grad(const double* x, const double* gy, std::int64_t n, double* gx);
void square(const double* x, std::int64_t n, double* y);
void square_grad(const double* x, const double* gy, std::int64_t n, double* gx);
void scale(const double* x, double c, std::int64_t n, double* y);
void scale_grad(const double* gy, double c, std::int64_t n, double* gx);

// ---------------------------------------------------------------- binary
// Elementwise ops over `outer * ca` elements. `cb` is either equal to `ca`
// or 1; cb == 1 broadcasts b across the trailing axis (an HxWx1 attention
// map applied to an HxWxC image).
enum class BinaryOp { add, sub, mul };
void binary(BinaryOp op, const double* a, const double* b, std::int64_t outer, int ca, int cb,
            double* y);
void binary_grad_a(BinaryOp op, const double* b, const double* gy, std::int64_t outer, int ca,
                   int cb, double* ga);
void binary_grad_b(BinaryOp op, const double* a, const double* gy, std::int64_t outer, int ca,
                   int cb, double* gb);

// ---------------------------------------------------------------- linear
void matvec(const double* a, int R, int C, const double* v, double* y);
void matvec_grad_a(const double* v, const double* gy, int R, int C, double* ga);
void matvec_grad_v(const double* a, const double* gy, int R, int C, double* gv);

// ---------------------------------------------------------------- reductions
// Mean over the leading `s` blocks of length `r`: (s, r) -> (r).
void reduce_mean_leading(const double* x, std::int64_t s, std::int64_t r, double* y);
void reduce_mean_leading_grad(const double* gy, std::int64_t s, std::int64_t r, double* gx);
// Population variance per column of an (s, r) matrix, floored elementwise.
// Where the raw variance sits below the floor the gradient is zero.
void reduce_var_leading(const double* x, std::int64_t s, std::int64_t r, double floor, double* y);
void reduce_var_leading_grad(const double* x, const double* gy, std::int64_t s, std::int64_t r,
                             double floor, double* gx);

// ---------------------------------------------------------------- vector ops
constexpr double kNormGuard = 1e-12;
void l2_normalize(const double* x, std::int64_t n, double* y);
void l2_normalize_grad(const double* x, const double* gy, std::int64_t n, double* gx);
double cosine_sim(const double* a, const double* b, std::int64_t n);
void cosine_sim_grad(const double* a, const double* b, std::int64_t n, double gy, double* ga,
                     double* gb);
// Softmax cross-entropy over logits/tau against a one-hot target.
double softmax_xent(const double* logits, int k, int target, double tau);
void softmax_xent_grad(const double* logits, int k, int target, double tau, double gy, double* gx);

}  // namespace sada::kernels
