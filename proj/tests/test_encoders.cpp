#include <doctest.h>

#include <cmath>

#include "sada/encoders.hpp"
#include "support.hpp"

using namespace sada;
using test_support::random_tensor;

namespace {

EncoderDims small_dims() {
    EncoderDims d;
    d.H = 16;
    d.W = 16;
    d.C = 3;
    d.E = 8;
    d.D = 16;
    d.blocks = 2;
    return d;
}

double norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("encoders are deterministic in the seed") {
    const auto dims = small_dims();
    Encoders a = build_encoders(5, dims, 4, 6);
    Encoders b = build_encoders(5, dims, 4, 6);
    CHECK(a.image.parameter_snapshot() == b.image.parameter_snapshot());
    CHECK(a.text.parameter_snapshot() == b.text.parameter_snapshot());
    for (int k = 0; k < 4; ++k) CHECK(a.table.row(k) == b.table.row(k));

    Encoders c = build_encoders(6, dims, 4, 6);
    CHECK(a.image.parameter_snapshot() != c.image.parameter_snapshot());
}

TEST_CASE("feature dimensions and unit norms") {
    EncoderDims dims;
    dims.D = 64;
    Encoders enc = build_encoders(11, dims, 3, 16);
    Rng rng(2);
    Tape tape;
    Tensor img = random_tensor({dims.H, dims.W, dims.C}, rng);
    Tensor z = enc.image.encode(tape, tape.constant(img));
    CHECK(z.shape == std::vector<int>{64});
    CHECK(std::abs(norm(z.values) - 1.0) < 1e-12);

    Tensor tokens = random_tensor({17, dims.E}, rng);
    Tensor w = enc.text.encode(tape, tape.constant(tokens));
    CHECK(w.shape == std::vector<int>{64});
    CHECK(std::abs(norm(w.values) - 1.0) < 1e-12);

    // identical inputs map to identical features
    Tensor z2 = enc.image.encode(tape, tape.constant(img));
    CHECK(z.values == z2.values);
}

TEST_CASE("two blocks halve the spatial size twice") {
    EncoderDims dims;
    dims.H = 32;
    dims.W = 32;
    dims.blocks = 2;
    Encoders enc = build_encoders(3, dims, 2, 4);
    Rng rng(9);
    Tape tape;
    std::vector<int> seen;
    ImageHook probe = [&](Tape&, const Tensor& t) {
        seen = t.shape;
        return t;
    };
    enc.image.encode(tape, tape.constant(random_tensor({32, 32, 3}, rng)), probe, 2);
    REQUIRE(seen.size() == 3);
    CHECK(seen[0] == 8);
    CHECK(seen[1] == 8);
}

TEST_CASE("gradients flow through the frozen encoders to their inputs") {
    const auto dims = small_dims();
    Encoders enc = build_encoders(21, dims, 3, 4);
    Rng rng(5);

    Tensor img = random_tensor({dims.H, dims.W, dims.C}, rng);
    Tensor probe = random_tensor({dims.D}, rng);
    // linear probe c . z so the finite differences see only the encoder
    auto dot_probe = [&](Tape& t, const Tensor& z) {
        Tensor weighted = t.hadamard(z, t.constant(probe));
        return t.scale(t.reduce_mean(weighted), static_cast<double>(dims.D));
    };
    // eps sits above the roundoff floor of the deep composition; the
    // normalization of a near-zero pooled vector amplifies fp noise
    const double err_img = grad_check(
        [&](Tape& t, const Tensor& x) { return dot_probe(t, enc.image.encode(t, x)); }, img, 1e-4);
    CHECK(err_img < 1e-4);

    Tensor tokens = random_tensor({5, dims.E}, rng);
    const double err_txt = grad_check(
        [&](Tape& t, const Tensor& seq) { return dot_probe(t, enc.text.encode(t, seq)); },
        tokens, 1e-4);
    CHECK(err_txt < 1e-4);

    // gradient w.r.t. the input is not identically zero
    Tape tape;
    Tensor leaf = tape.leaf(img.shape, img.values, true);
    GradientMap g = tape.backward(dot_probe(tape, enc.image.encode(tape, leaf)));
    double mag = 0.0;
    for (double v : g.at(leaf)) mag += std::abs(v);
    CHECK(mag > 0.0);
}

TEST_CASE("prompts differing only in the class token produce different features") {
    const auto dims = small_dims();
    Encoders enc = build_encoders(31, dims, 3, 4);
    Rng rng(7);
    Tensor ctx = random_tensor({4, dims.E}, rng);
    Tape tape;
    auto with_cls = [&](int k) {
        std::vector<double> seq(ctx.values);
        const auto& row = enc.table.row(k);
        seq.insert(seq.end(), row.begin(), row.end());
        return enc.text.encode(tape, tape.constant({5, dims.E}, seq)).values;
    };
    CHECK(with_cls(0) != with_cls(1));
}

TEST_CASE("encoder configuration errors") {
    EncoderDims bad = small_dims();
    bad.D = 0;
    Rng rng(1);
    CHECK_THROWS_AS(build_encoders(1, bad, 2, 4), ConfigError);

    const auto dims = small_dims();
    Encoders enc = build_encoders(1, dims, 2, 4);
    Tape tape;
    Rng r2(2);
    CHECK_THROWS_AS(enc.image.encode(tape, tape.constant(random_tensor({8, 8, 3}, r2))),
                    ShapeError);
    CHECK_THROWS_AS(enc.text.encode(tape, tape.constant(random_tensor({3, dims.E}, r2))),
                    ShapeError);
}
