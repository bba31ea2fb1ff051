#pragma once

// Shared helpers for the test suites: naive reference kernels and random
// tensor builders. Everything here is deliberately independent of the
// library's compute path.

#include <cmath>
#include <vector>

#include "sada/rng.hpp"
#include "sada/tensor.hpp"

namespace test_support {

inline sada::Tensor random_tensor(std::vector<int> shape, sada::Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
    sada::Tensor t = sada::Tensor::zeros(shape);
    for (auto& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

// Quadruple-loop zero-padded convolution, written without any of the
// library's indexing helpers.
inline std::vector<double> naive_conv2d_same(const std::vector<double>& x, int H, int W, int Ci,
                                             const std::vector<double>& k, int Kh, int Kw,
                                             int Co) {
    std::vector<double> y(static_cast<std::size_t>(H) * W * Co, 0.0);
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w)
            for (int co = 0; co < Co; ++co) {
                double acc = 0.0;
                for (int dh = 0; dh < Kh; ++dh)
                    for (int dw = 0; dw < Kw; ++dw)
                        for (int ci = 0; ci < Ci; ++ci) {
                            const int ih = h + dh - Kh / 2;
                            const int iw = w + dw - Kw / 2;
                            if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                            acc += x[(static_cast<std::size_t>(ih) * W + iw) * Ci + ci] *
                                   k[((static_cast<std::size_t>(dh) * Kw + dw) * Ci + ci) * Co +
                                     co];
                        }
                y[(static_cast<std::size_t>(h) * W + w) * Co + co] = acc;
            }
    return y;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace test_support
