#pragma once

#include <cstdint>
#include <vector>

#include "sada/rng.hpp"
#include "sada/tape.hpp"

namespace sada {

// Cross-modal distribution alignment: per-class vision-language prototype
// bank, diagonal Gaussian statistics, the O(D) transport upper bound used in
// training, and the exact oracles it is checked against.

constexpr double kVarFloor = 1e-8;        // keeps 1-shot variances positive
constexpr double kDistanceGuard = 1e-12;  // Eq-style 1/||z - v_k|| guard

// ------------------------------------------------------------ VLP bank

// Trainable members v[n][j][k] in R^D, initialized once from the image
// features produced by the warmup epoch.
class VlpBank {
public:
    VlpBank() = default;
    VlpBank(int shots, int groups, int classes, int dim);

    bool initialized() const { return initialized_; }
    int shots() const { return n_; }
    int groups() const { return j_; }
    int classes() const { return k_; }
    int dim() const { return d_; }
    int members_per_class() const { return n_ * j_; }

    // features[k] is a row-major (N*J) x D block, member (n, j) at row n*J+j.
    void init(const std::vector<std::vector<double>>& per_class_features);

    // (N*J) x D block of one class, gathered from the N x J x K x D storage.
    std::vector<double> class_members(int k) const;
    // plain Eq-mean over the class block
    std::vector<double> prototype(int k) const;

    // scatter an update computed on the gathered block back into storage
    void apply_update(int k, const std::vector<double>& delta);

    const std::vector<double>& raw() const { return values_; }
    void restore(int shots, int groups, int classes, int dim, std::vector<double> values,
                 bool initialized);

private:
    void require_initialized() const;
    std::size_t offset(int n, int j, int k) const;

    int n_ = 0, j_ = 0, k_ = 0, d_ = 0;
    bool initialized_ = false;
    std::vector<double> values_;  // N x J x K x D
};

// ------------------------------------------------------------ statistics

struct GaussianStats {
    std::vector<double> mu;
    std::vector<double> var;  // diagonal, floored at kVarFloor
};

// column mean / floored population variance of an S x D sample block
GaussianStats estimate_stats(const std::vector<double>& samples, int s, int d);

// tape-side version used by the training loss
struct GaussianStatsNodes {
    Tensor mu;
    Tensor var;
};
GaussianStatsNodes estimate_stats_on_tape(Tape& tape, const Tensor& samples);

// ------------------------------------------------------------ divergences

struct OpCount {
    std::uint64_t adds = 0;
    std::uint64_t muls = 0;
    std::uint64_t roots = 0;
    std::uint64_t total() const { return adds + muls + roots; }
};

// ||mu_a - mu_b||^2 + sum_d (sqrt(var_a_d) - sqrt(var_b_d))^2, Theta(D)
double emd_upper_bound(const GaussianStats& a, const GaussianStats& b, OpCount* count = nullptr);

// same bound composed from tape kernels (language side enters as constants)
Tensor emd_upper_bound_on_tape(Tape& tape, const GaussianStatsNodes& vision,
                               const GaussianStats& language);

// full-covariance form of the bound: ||mu_a - mu_b||^2 + ||A^1/2 - B^1/2||_F^2
double emd_upper_bound_full(const std::vector<double>& mu_a, const std::vector<double>& cov_a,
                            const std::vector<double>& mu_b, const std::vector<double>& cov_b,
                            int d);

// exact 2-Wasserstein distance between Gaussians via the Bures metric;
// covariances are d x d symmetric PSD (eigenvalues above -1e-10)
double exact_w2_gaussian(const std::vector<double>& mu_a, const std::vector<double>& cov_a,
                         const std::vector<double>& mu_b, const std::vector<double>& cov_b, int d);

// exact W1 between equal-size empirical measures by minimum-cost perfect
// matching on the Euclidean cost matrix; s <= 128
double discrete_emd(const std::vector<double>& a, const std::vector<double>& b, int s, int d);

// unbiased (default) or biased squared MMD with a Gaussian kernel
double mmd(const std::vector<double>& a, int m, const std::vector<double>& b, int n, int d,
           double bandwidth, bool unbiased = true);
double median_bandwidth(const std::vector<double>& a, int m, const std::vector<double>& b, int n,
                        int d);
// d MMD^2 / d a, same layout as a; the bandwidth is treated as a constant
void mmd_grad_a(const std::vector<double>& a, int m, const std::vector<double>& b, int n, int d,
                double bandwidth, std::vector<double>& grad, bool unbiased = true);

// Monte-Carlo Jensen-Shannon divergence (nats) between diagonal Gaussians;
// mirrored standard-normal draws make js(a, b) == js(b, a) bit-exactly. The
// estimate of a small true value can come out slightly negative.
constexpr int kJsSamples = 2048;
double js_divergence(const GaussianStats& a, const GaussianStats& b,
                     std::uint64_t seed = 0x6a73ULL);
// analytic gradient of the same seeded estimator w.r.t. a's parameters
void js_divergence_grad(const GaussianStats& a, const GaussianStats& b, std::vector<double>& gmu,
                        std::vector<double>& gvar, std::uint64_t seed = 0x6a73ULL);

// ------------------------------------------------------------ inference

// d_k = 1 / (||z - v_k|| + guard), normalized to sum 1
std::vector<double> weighting(const std::vector<double>& z, const VlpBank& bank);

// (1 - alpha) z + alpha target
std::vector<double> calibrate(const std::vector<double>& z, const std::vector<double>& target,
                              double alpha);
Tensor calibrate_on_tape(Tape& tape, const Tensor& z, const Tensor& target, double alpha);

}  // namespace sada
