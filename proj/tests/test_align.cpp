#include <doctest.h>

#include <cmath>

#include "sada/align.hpp"
#include "sada/experiment.hpp"
#include "support.hpp"

using namespace sada;
using test_support::random_tensor;

TEST_CASE("vlp bank lifecycle") {
    VlpBank bank(2, 2, 3, 4);  // N=2, J=2, K=3, D=4
    CHECK_FALSE(bank.initialized());
    CHECK_THROWS_AS(bank.class_members(0), StateError);

    Rng rng(3);
    std::vector<std::vector<double>> feats;
    for (int k = 0; k < 3; ++k) feats.push_back(random_tensor({2 * 2 * 4}, rng).values);
    bank.init(feats);
    CHECK(bank.initialized());

    SUBCASE("members are copied bit-exactly") {
        for (int k = 0; k < 3; ++k) CHECK(bank.class_members(k) == feats[static_cast<std::size_t>(k)]);
    }
    SUBCASE("prototype is the plain mean over N*J members") {
        for (int k = 0; k < 3; ++k) {
            const auto proto = bank.prototype(k);
            for (int d = 0; d < 4; ++d) {
                double m = 0.0;
                for (int r = 0; r < 4; ++r) m += feats[static_cast<std::size_t>(k)][static_cast<std::size_t>(r) * 4 + d];
                CHECK(proto[static_cast<std::size_t>(d)] == doctest::Approx(m / 4.0).epsilon(1e-15));
            }
        }
    }
    SUBCASE("second initialization is rejected") { CHECK_THROWS_AS(bank.init(feats), StateError); }
    SUBCASE("missing class coverage is rejected") {
        VlpBank fresh(2, 2, 3, 4);
        feats.pop_back();
        CHECK_THROWS_AS(fresh.init(feats), StateError);
    }
    SUBCASE("prototype gradient on the tape is 1/(N*J) per member coordinate") {
        Tape tape;
        Tensor members = tape.leaf({4, 4}, bank.class_members(0), true);
        Tensor proto = tape.reduce_mean(members);
        Tensor loss = tape.scale(tape.reduce_mean(proto), 4.0);  // sum of prototype entries
        GradientMap g = tape.backward(loss);
        for (double v : g.at(members)) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    }
}

TEST_CASE("gaussian statistics") {
    SUBCASE("two-point example") {
        GaussianStats st = estimate_stats({0.0, 0.0, 2.0, 2.0}, 2, 2);
        CHECK(st.mu == std::vector<double>{1.0, 1.0});
        CHECK(st.var == std::vector<double>{1.0, 1.0});
    }
    SUBCASE("single sample hits the variance floor") {
        GaussianStats st = estimate_stats({0.4, -0.3}, 1, 2);
        CHECK(st.var == std::vector<double>{kVarFloor, kVarFloor});
    }
    SUBCASE("constant samples hit the floor") {
        GaussianStats st = estimate_stats({0.7, 0.7, 0.7}, 3, 1);
        CHECK(st.var == std::vector<double>{kVarFloor});
    }
    SUBCASE("empty input is rejected") { CHECK_THROWS_AS(estimate_stats({}, 0, 2), StateError); }
    SUBCASE("tape and plain estimates agree") {
        Rng rng(4);
        Tensor samples = random_tensor({6, 5}, rng);
        GaussianStats plain = estimate_stats(samples.values, 6, 5);
        Tape tape;
        auto nodes = estimate_stats_on_tape(tape, tape.constant(samples));
        for (int d = 0; d < 5; ++d) {
            CHECK(nodes.mu.values[static_cast<std::size_t>(d)] ==
                  doctest::Approx(plain.mu[static_cast<std::size_t>(d)]).epsilon(1e-14));
            CHECK(nodes.var.values[static_cast<std::size_t>(d)] ==
                  doctest::Approx(plain.var[static_cast<std::size_t>(d)]).epsilon(1e-14));
        }
    }
}

TEST_CASE("transport bound evaluations") {
    SUBCASE("identical statistics give zero") {
        GaussianStats a{{0.3, -0.7}, {0.5, 1.5}};
        CHECK(emd_upper_bound(a, a) == 0.0);
    }
    SUBCASE("one-dimensional plug-in value") {
        GaussianStats a{{0.0}, {1.0}}, b{{3.0}, {4.0}};
        CHECK(emd_upper_bound(a, b) == doctest::Approx(10.0).epsilon(1e-12));
    }
    SUBCASE("tape version matches the plain one and routes no gradient to the language side") {
        Rng rng(5);
        Tensor samples = random_tensor({4, 6}, rng);
        GaussianStats lang{random_tensor({6}, rng).values,
                           random_tensor({6}, rng, 0.2, 1.2).values};
        GaussianStats vision = estimate_stats(samples.values, 4, 6);
        const double plain = emd_upper_bound(vision, lang);
        Tape tape;
        Tensor leaf = tape.leaf({4, 6}, samples.values, true);
        Tensor bound = emd_upper_bound_on_tape(tape, estimate_stats_on_tape(tape, leaf), lang);
        CHECK(bound.scalar() == doctest::Approx(plain).epsilon(1e-12));
        // and the member gradient checks out against finite differences
        const double err = grad_check(
            [&](Tape& t, const Tensor& x) {
                return emd_upper_bound_on_tape(t, estimate_stats_on_tape(t, x), lang);
            },
            samples, 1e-5);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("exact Gaussian W2") {
    SUBCASE("coincident distributions") {
        std::vector<double> mu = {0.1, 0.2};
        std::vector<double> cov = {1.0, 0.2, 0.2, 0.8};
        CHECK(exact_w2_gaussian(mu, cov, mu, cov, 2) == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("point masses reduce to the mean distance") {
        std::vector<double> z4(4, 0.0);
        CHECK(exact_w2_gaussian({0.0, 0.0}, z4, {3.0, 4.0}, z4, 2) ==
              doctest::Approx(5.0).epsilon(1e-12));
    }
    SUBCASE("non-psd covariance is rejected") {
        std::vector<double> bad = {1.0, 0.0, 0.0, -0.5};
        std::vector<double> good = {1.0, 0.0, 0.0, 1.0};
        CHECK_THROWS_AS(exact_w2_gaussian({0, 0}, bad, {0, 0}, good, 2), DomainError);
    }
}

TEST_CASE("discrete EMD") {
    SUBCASE("identical point sets") {
        Rng rng(6);
        Tensor pts = random_tensor({5, 3}, rng);
        CHECK(discrete_emd(pts.values, pts.values, 5, 3) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("single points give the Euclidean distance") {
        CHECK(discrete_emd({0.0, 0.0}, {3.0, 4.0}, 1, 2) == doctest::Approx(5.0).epsilon(1e-12));
    }
    SUBCASE("the 2x2 cross case matches enumeration") {
        const std::vector<double> a = {0.0, 0.0, 1.0, 0.0};
        const std::vector<double> b = {1.0, 0.0, 0.0, 0.0};
        CHECK(discrete_emd(a, b, 2, 2) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("unequal counts rejected") {
        CHECK_THROWS_AS(discrete_emd({0.0, 0.0}, {1.0}, 1, 2), ConfigError);
    }
    SUBCASE("matches brute-force enumeration on small sets") {
        Rng rng(7);
        for (int trial = 0; trial < 5; ++trial) {
            Tensor a = random_tensor({3, 2}, rng);
            Tensor b = random_tensor({3, 2}, rng);
            // enumerate all 6 permutations
            double best = 1e300;
            int perm[3] = {0, 1, 2};
            std::sort(perm, perm + 3);
            do {
                double total = 0.0;
                for (int i = 0; i < 3; ++i) {
                    double d2 = 0.0;
                    for (int c = 0; c < 2; ++c) {
                        const double diff = a.values[static_cast<std::size_t>(i) * 2 + c] -
                                            b.values[static_cast<std::size_t>(perm[i]) * 2 + c];
                        d2 += diff * diff;
                    }
                    total += std::sqrt(d2);
                }
                best = std::min(best, total / 3.0);
            } while (std::next_permutation(perm, perm + 3));
            CHECK(discrete_emd(a.values, b.values, 3, 2) == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("maximum mean discrepancy") {
    Rng rng(8);
    Tensor a = random_tensor({6, 3}, rng);
    SUBCASE("biased estimator vanishes on identical multisets") {
        CHECK(mmd(a.values, 6, a.values, 6, 3, 1.0, false) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("unbiased estimator may go negative near zero, and that is documented behavior") {
        const double v = mmd(a.values, 6, a.values, 6, 3, 1.0, true);
        CHECK(v < 0.0);  // diagonal terms removed, cross terms keep the identical pairs
    }
    SUBCASE("infinite bandwidth limit is zero") {
        Tensor b = random_tensor({6, 3}, rng);
        CHECK(std::abs(mmd(a.values, 6, b.values, 6, 3, 1e9)) < 1e-9);
    }
    SUBCASE("well separated clusters saturate toward 2") {
        // bandwidth wide enough that within-cluster kernels sit near 1 while
        // the 100-unit cross distances still vanish
        Tensor b = random_tensor({6, 3}, rng);
        for (auto& v : b.values) v += 100.0;
        const double v = mmd(a.values, 6, b.values, 6, 3, 5.0);
        CHECK(v > 1.7);
        CHECK(v < 2.0 + 1e-9);
    }
    SUBCASE("too few samples for the unbiased estimator") {
        CHECK_THROWS_AS(mmd(a.values, 1, a.values, 6, 3, 1.0, true), ConfigError);
    }
    SUBCASE("gradient matches finite differences") {
        Tensor b = random_tensor({5, 3}, rng);
        std::vector<double> grad;
        mmd_grad_a(a.values, 6, b.values, 5, 3, 0.8, grad);
        std::vector<double> pert = a.values;
        const double eps = 1e-6;
        for (std::size_t i = 0; i < pert.size(); i += 4) {
            pert[i] += eps;
            const double up = mmd(pert, 6, b.values, 5, 3, 0.8);
            pert[i] -= 2 * eps;
            const double dn = mmd(pert, 6, b.values, 5, 3, 0.8);
            pert[i] += eps;
            CHECK(grad[i] == doctest::Approx((up - dn) / (2 * eps)).epsilon(1e-5));
        }
    }
}

TEST_CASE("jensen-shannon divergence") {
    GaussianStats a{{0.5, -0.2, 1.0}, {0.8, 1.2, 0.5}};
    GaussianStats b{{-0.4, 0.3, 0.6}, {1.1, 0.6, 0.9}};
    SUBCASE("identical distributions give exactly zero under mirrored sampling") {
        CHECK(js_divergence(a, a) == 0.0);
    }
    SUBCASE("symmetric bit-exactly") { CHECK(js_divergence(a, b) == js_divergence(b, a)); }
    SUBCASE("far separated distributions approach ln 2") {
        GaussianStats far{{100.0, 100.0, 100.0}, {1.0, 1.0, 1.0}};
        CHECK(js_divergence(a, far) == doctest::Approx(std::log(2.0)).epsilon(1e-2));
    }
    SUBCASE("bounded by ln 2 up to Monte-Carlo noise and non-negative in practice") {
        const double v = js_divergence(a, b);
        CHECK(v > 0.0);
        CHECK(v < std::log(2.0) + 1e-2);
    }
    SUBCASE("analytic gradient matches finite differences of the seeded estimator") {
        std::vector<double> gmu, gvar;
        js_divergence_grad(a, b, gmu, gvar);
        const double eps = 1e-5;
        for (int c = 0; c < 3; ++c) {
            GaussianStats up = a, dn = a;
            up.mu[static_cast<std::size_t>(c)] += eps;
            dn.mu[static_cast<std::size_t>(c)] -= eps;
            const double fd = (js_divergence(up, b) - js_divergence(dn, b)) / (2 * eps);
            CHECK(gmu[static_cast<std::size_t>(c)] == doctest::Approx(fd).epsilon(1e-4));
            up = a;
            dn = a;
            up.var[static_cast<std::size_t>(c)] += eps;
            dn.var[static_cast<std::size_t>(c)] -= eps;
            const double fdv = (js_divergence(up, b) - js_divergence(dn, b)) / (2 * eps);
            CHECK(gvar[static_cast<std::size_t>(c)] == doctest::Approx(fdv).epsilon(1e-4));
        }
    }
}

TEST_CASE("weighting vector") {
    VlpBank bank(1, 1, 2, 2);
    bank.init({{1.0, 0.0}, {-1.0, 0.0}});
    SUBCASE("equidistant query splits evenly") {
        const auto d = weighting({0.0, 0.5}, bank);
        CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(d[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("weights are a probability vector") {
        Rng rng(9);
        for (int t = 0; t < 10; ++t) {
            Tensor z = random_tensor({2}, rng, -3.0, 3.0);
            const auto d = weighting(z.values, bank);
            double sum = 0.0;
            for (double v : d) {
                CHECK(v > 0.0);
                sum += v;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("a query equal to a prototype is dominated by it") {
        const auto d = weighting({1.0, 0.0}, bank);
        CHECK(d[0] > 1.0 - 1e-9);
    }
}

TEST_CASE("calibration mix") {
    const std::vector<double> z = {1.0, 2.0}, t = {3.0, -2.0};
    CHECK(calibrate(z, t, 0.0) == z);
    CHECK(calibrate(z, t, 1.0) == t);
    const auto mid = calibrate(z, t, 0.1);
    CHECK(mid[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 3.0).epsilon(1e-15));
    CHECK(mid[1] == doctest::Approx(0.9 * 2.0 - 0.1 * 2.0).epsilon(1e-15));
    CHECK_THROWS_AS(calibrate(z, t, 1.5), ConfigError);
}

TEST_CASE("oracle battery passes") { CHECK(oracle_check(false)); }
