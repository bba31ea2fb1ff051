#include <doctest.h>

#include <vector>

#include "sada/kernels.hpp"
#include "sada/parallel.hpp"
#include "sada/rng.hpp"
#include "sada/tape.hpp"
#include "support.hpp"

using namespace sada;
using test_support::max_abs_diff;
using test_support::naive_conv2d_same;
using test_support::random_tensor;

namespace {

// Runs a recorded computation twice, once per backend, and returns the two
// value vectors. The backends must agree bit for bit.
template <class Fn>
std::pair<std::vector<double>, std::vector<double>> both_backends(Fn&& fn) {
    Backend saved = kernel_backend();
    kernel_backend() = Backend::serial;
    std::vector<double> serial = fn();
    kernel_backend() = Backend::openmp;
    std::vector<double> openmp = fn();
    kernel_backend() = saved;
    return {serial, openmp};
}

}  // namespace

TEST_CASE("conv2d_same matches the naive reference") {
    Rng rng(7);
    const int H = 9, W = 11, Ci = 3, Co = 4;
    for (int ksize : {3, 7}) {
        Tensor x = random_tensor({H, W, Ci}, rng);
        Tensor k = random_tensor({ksize, ksize, Ci, Co}, rng);
        std::vector<double> y(static_cast<std::size_t>(H) * W * Co);
        kernels::conv2d_same(x.values.data(), H, W, Ci, k.values.data(), ksize, ksize, Co,
                             y.data());
        auto ref = naive_conv2d_same(x.values, H, W, Ci, k.values, ksize, ksize, Co);
        CHECK(max_abs_diff(y, ref) < 1e-12);
    }
}

TEST_CASE("conv2d_same with a one-hot identity kernel is the identity") {
    Rng rng(11);
    const int H = 8, W = 8, C = 3;
    Tensor x = random_tensor({H, W, C}, rng);
    // k[1][1][ci][co] = (ci == co), zero elsewhere: a centered delta
    Tensor k = Tensor::zeros({3, 3, C, C});
    for (int c = 0; c < C; ++c) k.values[((1 * 3 + 1) * C + c) * C + c] = 1.0;
    std::vector<double> y(x.values.size());
    kernels::conv2d_same(x.values.data(), H, W, C, k.values.data(), 3, 3, C, y.data());
    CHECK(max_abs_diff(y, x.values) == 0.0);
}

TEST_CASE("serial and openmp backends are bit-identical") {
    Rng rng(23);
    const int H = 16, W = 16, Ci = 3, Co = 8;
    Tensor x = random_tensor({H, W, Ci}, rng);
    Tensor k = random_tensor({7, 7, Ci, Co}, rng);
    Tensor gy = random_tensor({H, W, Co}, rng);

    SUBCASE("conv2d forward") {
        auto [s, p] = both_backends([&] {
            std::vector<double> y(static_cast<std::size_t>(H) * W * Co);
            kernels::conv2d_same(x.values.data(), H, W, Ci, k.values.data(), 7, 7, Co, y.data());
            return y;
        });
        CHECK(s == p);
    }
    SUBCASE("conv2d input gradient") {
        auto [s, p] = both_backends([&] {
            std::vector<double> gx(x.values.size());
            kernels::conv2d_same_grad_x(gy.values.data(), H, W, Ci, k.values.data(), 7, 7, Co,
                                        gx.data());
            return gx;
        });
        CHECK(s == p);
    }
    SUBCASE("conv2d kernel gradient") {
        auto [s, p] = both_backends([&] {
            std::vector<double> gk(k.values.size());
            kernels::conv2d_same_grad_k(x.values.data(), gy.values.data(), H, W, Ci, 7, 7, Co,
                                        gk.data());
            return gk;
        });
        CHECK(s == p);
    }
    SUBCASE("elementwise and pooling") {
        auto [s, p] = both_backends([&] {
            std::vector<double> out;
            std::vector<double> buf(x.values.size());
            kernels::sigmoid(x.values.data(), static_cast<std::int64_t>(buf.size()), buf.data());
            out.insert(out.end(), buf.begin(), buf.end());
            std::vector<double> pooled(static_cast<std::size_t>(H) * W);
            kernels::channel_avg_pool(x.values.data(), H, W, Ci, pooled.data());
            out.insert(out.end(), pooled.begin(), pooled.end());
            kernels::channel_max_pool(x.values.data(), H, W, Ci, pooled.data());
            out.insert(out.end(), pooled.begin(), pooled.end());
            std::vector<double> down(static_cast<std::size_t>(H / 2) * (W / 2) * Ci);
            kernels::avg_pool2x2(x.values.data(), H, W, Ci, down.data());
            out.insert(out.end(), down.begin(), down.end());
            return out;
        });
        CHECK(s == p);
    }
}

TEST_CASE("channel pools agree with direct recomputation") {
    Rng rng(31);
    const int H = 5, W = 4, C = 6;
    Tensor x = random_tensor({H, W, C}, rng);
    std::vector<double> avg(static_cast<std::size_t>(H) * W), mx(static_cast<std::size_t>(H) * W);
    kernels::channel_avg_pool(x.values.data(), H, W, C, avg.data());
    kernels::channel_max_pool(x.values.data(), H, W, C, mx.data());
    for (int i = 0; i < H * W; ++i) {
        double a = 0.0, m = x.values[static_cast<std::size_t>(i) * C];
        for (int c = 0; c < C; ++c) {
            const double v = x.values[static_cast<std::size_t>(i) * C + c];
            a += v;
            m = std::max(m, v);
        }
        CHECK(avg[static_cast<std::size_t>(i)] == doctest::Approx(a / C).epsilon(1e-14));
        CHECK(mx[static_cast<std::size_t>(i)] == m);
    }
}

TEST_CASE("softmax cross-entropy at hand-computed points") {
    // logits (1, 0), target 0: loss = -ln(e / (e + 1))
    const double logits[2] = {1.0, 0.0};
    const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    CHECK(kernels::softmax_xent(logits, 2, 0, 1.0) == doctest::Approx(expected).epsilon(1e-12));

    // uniform logits: ln K
    const double flat[3] = {0.4, 0.4, 0.4};
    CHECK(kernels::softmax_xent(flat, 3, 1, 1.0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}
