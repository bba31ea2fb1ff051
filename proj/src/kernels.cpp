#include "sada/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "sada/parallel.hpp"

namespace sada {

Backend& kernel_backend() {
    static Backend backend = Backend::openmp;
    return backend;
}

}  // namespace sada

namespace sada::kernels {

// ---------------------------------------------------------------- conv2d

void conv2d_same(const double* x, int H, int W, int Ci, const double* k, int Kh, int Kw, int Co,
                 double* y) {
    const int ph = Kh / 2, pw = Kw / 2;
    parallel_for(static_cast<std::int64_t>(H) * W, [=](std::int64_t hw) {
        const int h = static_cast<int>(hw / W);
        const int w = static_cast<int>(hw % W);
        double* yo = y + hw * Co;
        for (int co = 0; co < Co; ++co) yo[co] = 0.0;
        for (int dh = 0; dh < Kh; ++dh) {
            const int ih = h + dh - ph;
            if (ih < 0 || ih >= H) continue;
            for (int dw = 0; dw < Kw; ++dw) {
                const int iw = w + dw - pw;
                if (iw < 0 || iw >= W) continue;
                const double* xi = x + (static_cast<std::int64_t>(ih) * W + iw) * Ci;
                const double* kk = k + ((static_cast<std::int64_t>(dh) * Kw + dw) * Ci) * Co;
                for (int ci = 0; ci < Ci; ++ci) {
                    const double xv = xi[ci];
                    const double* kc = kk + static_cast<std::int64_t>(ci) * Co;
                    for (int co = 0; co < Co; ++co) yo[co] += xv * kc[co];
                }
            }
        }
    });
}

void conv2d_same_grad_x(const double* gy, int H, int W, int Ci, const double* k, int Kh, int Kw,
                        int Co, double* gx) {
    const int ph = Kh / 2, pw = Kw / 2;
    parallel_for(static_cast<std::int64_t>(H) * W, [=](std::int64_t hw) {
        const int a = static_cast<int>(hw / W);
        const int b = static_cast<int>(hw % W);
        double* go = gx + hw * Ci;
        for (int ci = 0; ci < Ci; ++ci) go[ci] = 0.0;
        // x[a][b] feeds output (h, w) = (a - dh + ph, b - dw + pw)
        for (int dh = 0; dh < Kh; ++dh) {
            const int h = a - dh + ph;
            if (h < 0 || h >= H) continue;
            for (int dw = 0; dw < Kw; ++dw) {
                const int w = b - dw + pw;
                if (w < 0 || w >= W) continue;
                const double* gyo = gy + (static_cast<std::int64_t>(h) * W + w) * Co;
                const double* kk = k + ((static_cast<std::int64_t>(dh) * Kw + dw) * Ci) * Co;
                for (int ci = 0; ci < Ci; ++ci) {
                    const double* kc = kk + static_cast<std::int64_t>(ci) * Co;
                    double acc = 0.0;
                    for (int co = 0; co < Co; ++co) acc += gyo[co] * kc[co];
                    go[ci] += acc;
                }
            }
        }
    });
}

void conv2d_same_grad_k(const double* x, const double* gy, int H, int W, int Ci, int Kh, int Kw,
                        int Co, double* gk) {
    const int ph = Kh / 2, pw = Kw / 2;
    parallel_for(static_cast<std::int64_t>(Kh) * Kw * Ci * Co, [=](std::int64_t idx) {
        const int co = static_cast<int>(idx % Co);
        std::int64_t rest = idx / Co;
        const int ci = static_cast<int>(rest % Ci);
        rest /= Ci;
        const int dw = static_cast<int>(rest % Kw);
        const int dh = static_cast<int>(rest / Kw);
        const int h0 = std::max(0, ph - dh), h1 = std::min(H, H + ph - dh);
        const int w0 = std::max(0, pw - dw), w1 = std::min(W, W + pw - dw);
        double acc = 0.0;
        for (int h = h0; h < h1; ++h) {
            const int ih = h + dh - ph;
            for (int w = w0; w < w1; ++w) {
                const int iw = w + dw - pw;
                acc += x[(static_cast<std::int64_t>(ih) * W + iw) * Ci + ci] *
                       gy[(static_cast<std::int64_t>(h) * W + w) * Co + co];
            }
        }
        gk[idx] = acc;
    });
}

// ---------------------------------------------------------------- pooling

void avg_pool2x2(const double* x, int H, int W, int C, double* y) {
    const int Ho = H / 2, Wo = W / 2;
    parallel_for(static_cast<std::int64_t>(Ho) * Wo * C, [=](std::int64_t idx) {
        const int c = static_cast<int>(idx % C);
        const std::int64_t hw = idx / C;
        const int wo = static_cast<int>(hw % Wo);
        const int ho = static_cast<int>(hw / Wo);
        const std::int64_t base = (static_cast<std::int64_t>(2 * ho) * W + 2 * wo) * C + c;
        const std::int64_t rowstride = static_cast<std::int64_t>(W) * C;
        y[idx] = 0.25 * (x[base] + x[base + C] + x[base + rowstride] + x[base + rowstride + C]);
    });
}

void avg_pool2x2_grad(const double* gy, int H, int W, int C, double* gx) {
    const int Wo = W / 2;
    parallel_for(static_cast<std::int64_t>(H) * W * C, [=](std::int64_t idx) {
        const int c = static_cast<int>(idx % C);
        const std::int64_t hw = idx / C;
        const int w = static_cast<int>(hw % W);
        const int h = static_cast<int>(hw / W);
        gx[idx] = 0.25 * gy[(static_cast<std::int64_t>(h / 2) * Wo + w / 2) * C + c];
    });
}

void channel_avg_pool(const double* x, int H, int W, int C, double* y) {
    parallel_for(static_cast<std::int64_t>(H) * W, [=](std::int64_t hw) {
        const double* xi = x + hw * C;
        double acc = 0.0;
        for (int c = 0; c < C; ++c) acc += xi[c];
        y[hw] = acc / C;
    });
}

void channel_avg_pool_grad(const double* gy, int H, int W, int C, double* gx) {
    parallel_for(static_cast<std::int64_t>(H) * W, [=](std::int64_t hw) {
        const double g = gy[hw] / C;
        double* go = gx + hw * C;
        for (int c = 0; c < C; ++c) go[c] = g;
    });
}

void channel_max_pool(const double* x, int H, int W, int C, double* y) {
    parallel_for(static_cast<std::int64_t>(H) * W, [=](std::int64_t hw) {
        const double* xi = x + hw * C;
        double best = xi[0];
        for (int c = 1; c < C; ++c)
            if (xi[c] > best) best = xi[c];
        y[hw] = best;
    });
}

void channel_max_pool_grad(const double* x, const double* gy, int H, int W, int C, double* gx) {
    parallel_for(static_cast<std::int64_t>(H) * W, [=](std::int64_t hw) {
        const double* xi = x + hw * C;
        int arg = 0;
        for (int c = 1; c < C; ++c)
            if (xi[c] > xi[arg]) arg = c;
        double* go = gx + hw * C;
        for (int c = 0; c < C; ++c) go[c] = 0.0;
        go[arg] = gy[hw];
    });
}

// ---------------------------------------------------------------- unary

void sigmoid(const double* x, std::int64_t n, double* y) {
    parallel_for(n, [=](std::int64_t i) { y[i] = 1.0 / (1.0 + std::exp(-x[i])); });
}

void sigmoid_grad(const double* y, const double* gy, std::int64_t n, double* gx) {
    parallel_for(n, [=](std::int64_t i) { gx[i] = gy[i] * y[i] * (1.0 - y[i]); });
}

void sqrt_clamped(const double* x, std::int64_t n, double* y) {
    parallel_for(n, [=](std::int64_t i) { y[i] = std::sqrt(std::max(x[i], kSqrtClamp)); });
}

void sqrt_clamped_grad(const double* x, const double* gy, std::int64_t n, double* gx) {
    parallel_for(n, [=](std::int64_t i) {
        gx[i] = x[i] < kSqrtClamp ? 0.0 : gy[i] * 0.5 / std::sqrt(x[i]);
    });
}

void square(const double* x, std::int64_t n, double* y) {
    parallel_for(n, [=](std::int64_t i) { y[i] = x[i] * x[i]; });
}

void square_grad(const double* x, const double* gy, std::int64_t n, double* gx) {
    parallel_for(n, [=](std::int64_t i) { gx[i] = 2.0 * x[i] * gy[i]; });
}

void scale(const double* x, double c, std::int64_t n, double* y) {
    parallel_for(n, [=](std::int64_t i) { y[i] = c * x[i]; });
}

void scale_grad(const double* gy, double c, std::int64_t n, double* gx) {
    parallel_for(n, [=](std::int64_t i) { gx[i] = c * gy[i]; });
}

// ---------------------------------------------------------------- binary

void binary(BinaryOp op, const double* a, const double* b, std::int64_t outer, int ca, int cb,
            double* y) {
    parallel_for(outer * ca, [=](std::int64_t i) {
        const double bv = b[cb == ca ? i : i / ca];
        switch (op) {
            case BinaryOp::add: y[i] = a[i] + bv; break;
            case BinaryOp::sub: y[i] = a[i] - bv; break;
            case BinaryOp::mul: y[i] = a[i] * bv; break;
        }
    });
}

void binary_grad_a(BinaryOp op, const double* b, const double* gy, std::int64_t outer, int ca,
                   int cb, double* ga) {
    parallel_for(outer * ca, [=](std::int64_t i) {
        switch (op) {
            case BinaryOp::add:
            case BinaryOp::sub: ga[i] = gy[i]; break;
            case BinaryOp::mul: ga[i] = gy[i] * b[cb == ca ? i : i / ca]; break;
        }
    });
}

void binary_grad_b(BinaryOp op, const double* a, const double* gy, std::int64_t outer, int ca,
                   int cb, double* gb) {
    const double sign = op == BinaryOp::sub ? -1.0 : 1.0;
    if (cb == ca) {
        parallel_for(outer * ca, [=](std::int64_t i) {
            gb[i] = op == BinaryOp::mul ? gy[i] * a[i] : sign * gy[i];
        });
    } else {
        // broadcast side: sum the incoming gradient over the trailing axis
        parallel_for(outer, [=](std::int64_t o) {
            double acc = 0.0;
            for (int c = 0; c < ca; ++c) {
                const std::int64_t i = o * ca + c;
                acc += op == BinaryOp::mul ? gy[i] * a[i] : sign * gy[i];
            }
            gb[o] = acc;
        });
    }
}

// ---------------------------------------------------------------- linear

void matvec(const double* a, int R, int C, const double* v, double* y) {
    parallel_for(R, [=](std::int64_t r) {
        const double* row = a + r * C;
        double acc = 0.0;
        for (int c = 0; c < C; ++c) acc += row[c] * v[c];
        y[r] = acc;
    });
}

void matvec_grad_a(const double* v, const double* gy, int R, int C, double* ga) {
    parallel_for(static_cast<std::int64_t>(R) * C, [=](std::int64_t i) {
        ga[i] = gy[i / C] * v[i % C];
    });
}

void matvec_grad_v(const double* a, const double* gy, int R, int C, double* gv) {
    parallel_for(C, [=](std::int64_t c) {
        double acc = 0.0;
        for (int r = 0; r < R; ++r) acc += a[static_cast<std::int64_t>(r) * C + c] * gy[r];
        gv[c] = acc;
    });
}

// ---------------------------------------------------------------- reductions

void reduce_mean_leading(const double* x, std::int64_t s, std::int64_t r, double* y) {
    parallel_for(r, [=](std::int64_t j) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < s; ++i) acc += x[i * r + j];
        y[j] = acc / static_cast<double>(s);
    });
}

void reduce_mean_leading_grad(const double* gy, std::int64_t s, std::int64_t r, double* gx) {
    const double inv = 1.0 / static_cast<double>(s);
    parallel_for(s * r, [=](std::int64_t i) { gx[i] = gy[i % r] * inv; });
}

void reduce_var_leading(const double* x, std::int64_t s, std::int64_t r, double floor, double* y) {
    parallel_for(r, [=](std::int64_t j) {
        double mean = 0.0;
        for (std::int64_t i = 0; i < s; ++i) mean += x[i * r + j];
        mean /= static_cast<double>(s);
        double var = 0.0;
        for (std::int64_t i = 0; i < s; ++i) {
            const double d = x[i * r + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(s);
        y[j] = std::max(var, floor);
    });
}

void reduce_var_leading_grad(const double* x, const double* gy, std::int64_t s, std::int64_t r,
                             double floor, double* gx) {
    // d var_j / d x_ij = 2 (x_ij - mean_j) / s; zero where the floor is active
    parallel_for(r, [=](std::int64_t j) {
        double mean = 0.0;
        for (std::int64_t i = 0; i < s; ++i) mean += x[i * r + j];
        mean /= static_cast<double>(s);
        double var = 0.0;
        for (std::int64_t i = 0; i < s; ++i) {
            const double d = x[i * r + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(s);
        const double coef = var > floor ? 2.0 * gy[j] / static_cast<double>(s) : 0.0;
        for (std::int64_t i = 0; i < s; ++i) gx[i * r + j] = coef * (x[i * r + j] - mean);
    });
}

// ---------------------------------------------------------------- vector ops

static double norm2(const double* x, std::int64_t n) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return std::sqrt(acc);
}

void l2_normalize(const double* x, std::int64_t n, double* y) {
    const double inv = 1.0 / std::max(norm2(x, n), kNormGuard);
    parallel_for(n, [=](std::int64_t i) { y[i] = x[i] * inv; });
}

void l2_normalize_grad(const double* x, const double* gy, std::int64_t n, double* gx) {
    const double nrm = std::max(norm2(x, n), kNormGuard);
    double dot = 0.0;  // <g, y>
    for (std::int64_t i = 0; i < n; ++i) dot += gy[i] * x[i] / nrm;
    parallel_for(n, [=](std::int64_t i) { gx[i] = (gy[i] - dot * x[i] / nrm) / nrm; });
}

double cosine_sim(const double* a, const double* b, std::int64_t n) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    const double na = std::max(std::sqrt(aa), kNormGuard);
    const double nb = std::max(std::sqrt(bb), kNormGuard);
    return ab / (na * nb);
}

void cosine_sim_grad(const double* a, const double* b, std::int64_t n, double gy, double* ga,
                     double* gb) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    const double na = std::max(std::sqrt(aa), kNormGuard);
    const double nb = std::max(std::sqrt(bb), kNormGuard);
    const double c = ab / (na * nb);
    for (std::int64_t i = 0; i < n; ++i) {
        ga[i] = gy * (b[i] / (na * nb) - c * a[i] / (na * na));
        gb[i] = gy * (a[i] / (na * nb) - c * b[i] / (nb * nb));
    }
}

double softmax_xent(const double* logits, int k, int target, double tau) {
    double mx = logits[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
    double lse = 0.0;
    for (int i = 0; i < k; ++i) lse += std::exp((logits[i] - mx) / tau);
    lse = std::log(lse);
    return lse - (logits[target] - mx) / tau;
}

void softmax_xent_grad(const double* logits, int k, int target, double tau, double gy,
                       double* gx) {
    double mx = logits[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
    double z = 0.0;
    for (int i = 0; i < k; ++i) z += std::exp((logits[i] - mx) / tau);
    for (int i = 0; i < k; ++i) {
        const double p = std::exp((logits[i] - mx) / tau) / z;
        gx[i] = gy * (p - (i == target ? 1.0 : 0.0)) / tau;
    }
}

}  // namespace sada::kernels
