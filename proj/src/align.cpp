#include "sada/align.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sada/errors.hpp"

namespace sada {

// ------------------------------------------------------------ VLP bank

VlpBank::VlpBank(int shots, int groups, int classes, int dim)
    : n_(shots), j_(groups), k_(classes), d_(dim) {
    if (shots < 1 || groups < 1 || classes < 1 || dim < 1)
        throw ConfigError("vlp bank: non-positive dimension");
    values_.assign(static_cast<std::size_t>(shots) * groups * classes * dim, 0.0);
}

std::size_t VlpBank::offset(int n, int j, int k) const {
    return ((static_cast<std::size_t>(n) * j_ + j) * k_ + k) * d_;
}

void VlpBank::require_initialized() const {
    if (!initialized_) throw StateError("vlp bank used before initialization");
}

void VlpBank::init(const std::vector<std::vector<double>>& per_class_features) {
    if (initialized_) throw StateError("vlp bank already initialized");
    if (static_cast<int>(per_class_features.size()) != k_)
        throw StateError("vlp init: expected features for " + std::to_string(k_) + " classes, got " +
                         std::to_string(per_class_features.size()));
    for (int k = 0; k < k_; ++k) {
        const auto& block = per_class_features[static_cast<std::size_t>(k)];
        if (static_cast<int>(block.size()) != n_ * j_ * d_)
            throw StateError("vlp init: class " + std::to_string(k) + " block has " +
                             std::to_string(block.size()) + " values, expected " +
                             std::to_string(n_ * j_ * d_));
        for (int n = 0; n < n_; ++n)
            for (int j = 0; j < j_; ++j)
                std::copy_n(block.data() + (static_cast<std::size_t>(n) * j_ + j) * d_, d_,
                            values_.data() + offset(n, j, k));
    }
    initialized_ = true;
}

std::vector<double> VlpBank::class_members(int k) const {
    require_initialized();
    if (k < 0 || k >= k_) throw IndexError("vlp class " + std::to_string(k));
    std::vector<double> out(static_cast<std::size_t>(n_) * j_ * d_);
    for (int n = 0; n < n_; ++n)
        for (int j = 0; j < j_; ++j)
            std::copy_n(values_.data() + offset(n, j, k), d_,
                        out.data() + (static_cast<std::size_t>(n) * j_ + j) * d_);
    return out;
}

std::vector<double> VlpBank::prototype(int k) const {
    const auto members = class_members(k);
    std::vector<double> proto(static_cast<std::size_t>(d_), 0.0);
    const int rows = n_ * j_;
    for (int r = 0; r < rows; ++r)
        for (int d = 0; d < d_; ++d) proto[static_cast<std::size_t>(d)] += members[static_cast<std::size_t>(r) * d_ + d];
    for (auto& v : proto) v /= static_cast<double>(rows);
    return proto;
}

void VlpBank::apply_update(int k, const std::vector<double>& delta) {
    require_initialized();
    if (static_cast<int>(delta.size()) != n_ * j_ * d_)
        throw ShapeError("vlp update: wrong block size");
    for (int n = 0; n < n_; ++n)
        for (int j = 0; j < j_; ++j) {
            double* dst = values_.data() + offset(n, j, k);
            const double* src = delta.data() + (static_cast<std::size_t>(n) * j_ + j) * d_;
            for (int d = 0; d < d_; ++d) dst[d] += src[d];
        }
}

void VlpBank::restore(int shots, int groups, int classes, int dim, std::vector<double> values,
                      bool initialized) {
    n_ = shots;
    j_ = groups;
    k_ = classes;
    d_ = dim;
    if (static_cast<int>(values.size()) != shots * groups * classes * dim)
        throw ShapeError("vlp restore: value count does not match dims");
    values_ = std::move(values);
    initialized_ = initialized;
}

// ------------------------------------------------------------ statistics

GaussianStats estimate_stats(const std::vector<double>& samples, int s, int d) {
    if (s < 1) throw StateError("estimate_stats: empty sample set");
    if (static_cast<int>(samples.size()) != s * d)
        throw ShapeError("estimate_stats: sample block size mismatch");
    GaussianStats st;
    st.mu.assign(static_cast<std::size_t>(d), 0.0);
    st.var.assign(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < s; ++i)
        for (int c = 0; c < d; ++c) st.mu[static_cast<std::size_t>(c)] += samples[static_cast<std::size_t>(i) * d + c];
    for (auto& v : st.mu) v /= static_cast<double>(s);
    for (int i = 0; i < s; ++i)
        for (int c = 0; c < d; ++c) {
            const double diff = samples[static_cast<std::size_t>(i) * d + c] - st.mu[static_cast<std::size_t>(c)];
            st.var[static_cast<std::size_t>(c)] += diff * diff;
        }
    for (auto& v : st.var) v = std::max(v / static_cast<double>(s), kVarFloor);
    return st;
}

GaussianStatsNodes estimate_stats_on_tape(Tape& tape, const Tensor& samples) {
    if (samples.rank() != 2) throw ShapeError("estimate_stats: expected S x D samples");
    return {tape.reduce_mean(samples), tape.reduce_var(samples, kVarFloor)};
}

// ------------------------------------------------------------ divergences

double emd_upper_bound(const GaussianStats& a, const GaussianStats& b, OpCount* count) {
    if (a.mu.size() != b.mu.size() || a.var.size() != b.var.size())
        throw ShapeError("emd_upper_bound: dimension mismatch");
    double mu_term = 0.0, var_term = 0.0;
    const std::size_t d = a.mu.size();
    for (std::size_t i = 0; i < d; ++i) {
        const double dm = a.mu[i] - b.mu[i];
        mu_term += dm * dm;
        const double ds = std::sqrt(a.var[i]) - std::sqrt(b.var[i]);
        var_term += ds * ds;
    }
    if (count) {
        count->adds += 4 * d + 1;  // two differences and two accumulations per dim, final sum
        count->muls += 2 * d;
        count->roots += 2 * d;
    }
    return mu_term + var_term;
}

Tensor emd_upper_bound_on_tape(Tape& tape, const GaussianStatsNodes& vision,
                               const GaussianStats& language) {
    const int d = static_cast<int>(language.mu.size());
    Tensor mu_w = tape.constant({d}, language.mu);
    Tensor sd_w = tape.constant({d}, [&] {
        std::vector<double> s(language.var.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sqrt(language.var[i]);
        return s;
    }());
    Tensor mu_gap = tape.square(tape.sub(vision.mu, mu_w));
    Tensor sd_gap = tape.square(tape.sub(tape.sqrt(vision.var), sd_w));
    Tensor total = tape.add(mu_gap, sd_gap);
    return tape.scale(tape.reduce_mean(tape.reshape(total, {d})), static_cast<double>(d));
}

namespace {

Eigen::MatrixXd to_matrix(const std::vector<double>& m, int d) {
    Eigen::MatrixXd out(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) out(r, c) = m[static_cast<std::size_t>(r) * d + c];
    return out;
}

// symmetric PSD square root via eigendecomposition
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* who) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    Eigen::VectorXd vals = eig.eigenvalues();
    for (int i = 0; i < vals.size(); ++i) {
        if (vals(i) < -1e-10)
            throw DomainError(std::string(who) + ": covariance eigenvalue " +
                              std::to_string(vals(i)) + " below tolerance");
        vals(i) = std::sqrt(std::max(vals(i), 0.0));
    }
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double emd_upper_bound_full(const std::vector<double>& mu_a, const std::vector<double>& cov_a,
                            const std::vector<double>& mu_b, const std::vector<double>& cov_b,
                            int d) {
    double mu_term = 0.0;
    for (int i = 0; i < d; ++i) {
        const double dm = mu_a[static_cast<std::size_t>(i)] - mu_b[static_cast<std::size_t>(i)];
        mu_term += dm * dm;
    }
    const Eigen::MatrixXd ra = psd_sqrt(to_matrix(cov_a, d), "emd_upper_bound_full");
    const Eigen::MatrixXd rb = psd_sqrt(to_matrix(cov_b, d), "emd_upper_bound_full");
    return mu_term + (ra - rb).squaredNorm();
}

double exact_w2_gaussian(const std::vector<double>& mu_a, const std::vector<double>& cov_a,
                         const std::vector<double>& mu_b, const std::vector<double>& cov_b,
                         int d) {
    double mu_term = 0.0;
    for (int i = 0; i < d; ++i) {
        const double dm = mu_a[static_cast<std::size_t>(i)] - mu_b[static_cast<std::size_t>(i)];
        mu_term += dm * dm;
    }
    const Eigen::MatrixXd a = to_matrix(cov_a, d);
    const Eigen::MatrixXd b = to_matrix(cov_b, d);
    const Eigen::MatrixXd rb = psd_sqrt(b, "exact_w2_gaussian");
    const Eigen::MatrixXd cross = psd_sqrt(rb * a * rb, "exact_w2_gaussian");
    const double bures = a.trace() + b.trace() - 2.0 * cross.trace();
    return std::sqrt(std::max(mu_term + bures, 0.0));
}

namespace {

// O(n^3) assignment by shortest augmenting paths with potentials.
double min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                   u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        total += cost[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)][static_cast<std::size_t>(j - 1)];
    return total;
}

}  // namespace

double discrete_emd(const std::vector<double>& a, const std::vector<double>& b, int s, int d) {
    if (static_cast<int>(a.size()) != s * d || static_cast<int>(b.size()) != s * d)
        throw ConfigError("discrete_emd: balanced case only, need equal S x D blocks");
    if (s < 1 || s > 128) throw ConfigError("discrete_emd: S must be in [1, 128]");
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(s),
                                          std::vector<double>(static_cast<std::size_t>(s), 0.0));
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
            double acc = 0.0;
            for (int c = 0; c < d; ++c) {
                const double diff = a[static_cast<std::size_t>(i) * d + c] - b[static_cast<std::size_t>(j) * d + c];
                acc += diff * diff;
            }
            cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::sqrt(acc);
        }
    return min_cost_assignment(cost) / static_cast<double>(s);
}

namespace {

double sq_dist(const double* x, const double* y, int d) {
    double acc = 0.0;
    for (int c = 0; c < d; ++c) {
        const double diff = x[c] - y[c];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace

double mmd(const std::vector<double>& a, int m, const std::vector<double>& b, int n, int d,
           double bandwidth, bool unbiased) {
    if (bandwidth <= 0.0) throw ConfigError("mmd: bandwidth must be positive");
    if (unbiased && (m < 2 || n < 2))
        throw ConfigError("mmd: the unbiased estimator needs at least 2 samples per side");
    if (m < 1 || n < 1) throw ConfigError("mmd: empty sample set");
    const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    auto kern = [&](const double* x, const double* y) { return std::exp(-gamma * sq_dist(x, y, d)); };

    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (unbiased && i == j) continue;
            saa += kern(a.data() + static_cast<std::size_t>(i) * d, a.data() + static_cast<std::size_t>(j) * d);
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (unbiased && i == j) continue;
            sbb += kern(b.data() + static_cast<std::size_t>(i) * d, b.data() + static_cast<std::size_t>(j) * d);
        }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            sab += kern(a.data() + static_cast<std::size_t>(i) * d, b.data() + static_cast<std::size_t>(j) * d);

    const double na = unbiased ? static_cast<double>(m) * (m - 1) : static_cast<double>(m) * m;
    const double nb = unbiased ? static_cast<double>(n) * (n - 1) : static_cast<double>(n) * n;
    return saa / na + sbb / nb - 2.0 * sab / (static_cast<double>(m) * n);
}

double median_bandwidth(const std::vector<double>& a, int m, const std::vector<double>& b, int n,
                        int d) {
    std::vector<double> dists;
    auto push_pairs = [&](const std::vector<double>& x, int cnt, const std::vector<double>& y,
                          int cnt2, bool same) {
        for (int i = 0; i < cnt; ++i)
            for (int j = same ? i + 1 : 0; j < cnt2; ++j)
                dists.push_back(std::sqrt(
                    sq_dist(x.data() + static_cast<std::size_t>(i) * d, y.data() + static_cast<std::size_t>(j) * d, d)));
    };
    push_pairs(a, m, a, m, true);
    push_pairs(b, n, b, n, true);
    push_pairs(a, m, b, n, false);
    if (dists.empty()) return 1.0;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2),
                     dists.end());
    const double med = dists[dists.size() / 2];
    return med > 0.0 ? med : 1.0;
}

void mmd_grad_a(const std::vector<double>& a, int m, const std::vector<double>& b, int n, int d,
                double bandwidth, std::vector<double>& grad, bool unbiased) {
    const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    grad.assign(a.size(), 0.0);
    const double na = unbiased ? static_cast<double>(m) * (m - 1) : static_cast<double>(m) * m;
    for (int i = 0; i < m; ++i) {
        double* g = grad.data() + static_cast<std::size_t>(i) * d;
        const double* ai = a.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < m; ++j) {
            if (unbiased && i == j) continue;
            const double* aj = a.data() + static_cast<std::size_t>(j) * d;
            const double k = std::exp(-gamma * sq_dist(ai, aj, d));
            // a_i appears in the (i, j) and (j, i) terms
            const double coef = 2.0 * k * 2.0 * gamma / na;
            for (int c = 0; c < d; ++c) g[c] += coef * (aj[c] - ai[c]);
        }
        for (int j = 0; j < n; ++j) {
            const double* bj = b.data() + static_cast<std::size_t>(j) * d;
            const double k = std::exp(-gamma * sq_dist(ai, bj, d));
            const double coef = -2.0 / (static_cast<double>(m) * n) * k * 2.0 * gamma;
            for (int c = 0; c < d; ++c) g[c] += coef * (bj[c] - ai[c]);
        }
    }
}

namespace {

double log_diag_gaussian(const double* x, const GaussianStats& g) {
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.mu.size(); ++i) {
        const double diff = x[i] - g.mu[i];
        acc += kLog2Pi + std::log(g.var[i]) + diff * diff / g.var[i];
    }
    return -0.5 * acc;
}

double log_add_exp(double a, double b) {
    const double mx = std::max(a, b);
    return mx + std::log(std::exp(a - mx) + std::exp(b - mx));
}

}  // namespace

double js_divergence(const GaussianStats& a, const GaussianStats& b, std::uint64_t seed) {
    if (a.mu.size() != b.mu.size()) throw ShapeError("js_divergence: dimension mismatch");
    const int d = static_cast<int>(a.mu.size());
    constexpr double kLn2 = 0.69314718055994530941723212145818;
    Rng rng(seed);
    double term_a = 0.0, term_b = 0.0;
    std::vector<double> u(static_cast<std::size_t>(d)), xa(static_cast<std::size_t>(d)),
        xb(static_cast<std::size_t>(d));
    for (int s = 0; s < kJsSamples; ++s) {
        for (int c = 0; c < d; ++c) u[static_cast<std::size_t>(c)] = rng.normal();
        for (int c = 0; c < d; ++c) {
            xa[static_cast<std::size_t>(c)] = a.mu[static_cast<std::size_t>(c)] +
                                              std::sqrt(a.var[static_cast<std::size_t>(c)]) * u[static_cast<std::size_t>(c)];
            xb[static_cast<std::size_t>(c)] = b.mu[static_cast<std::size_t>(c)] +
                                              std::sqrt(b.var[static_cast<std::size_t>(c)]) * u[static_cast<std::size_t>(c)];
        }
        const double lpa = log_diag_gaussian(xa.data(), a);
        const double lqa = log_diag_gaussian(xa.data(), b);
        term_a += lpa - (log_add_exp(lpa, lqa) - kLn2);
        const double lpb = log_diag_gaussian(xb.data(), a);
        const double lqb = log_diag_gaussian(xb.data(), b);
        term_b += lqb - (log_add_exp(lpb, lqb) - kLn2);
    }
    return 0.5 * (term_a / kJsSamples + term_b / kJsSamples);
}

void js_divergence_grad(const GaussianStats& a, const GaussianStats& b, std::vector<double>& gmu,
                        std::vector<double>& gvar, std::uint64_t seed) {
    const int d = static_cast<int>(a.mu.size());
    gmu.assign(static_cast<std::size_t>(d), 0.0);
    gvar.assign(static_cast<std::size_t>(d), 0.0);
    Rng rng(seed);
    std::vector<double> u(static_cast<std::size_t>(d)), xa(static_cast<std::size_t>(d)),
        xb(static_cast<std::size_t>(d));
    const double inv_s = 1.0 / static_cast<double>(kJsSamples);
    for (int s = 0; s < kJsSamples; ++s) {
        for (int c = 0; c < d; ++c) u[static_cast<std::size_t>(c)] = rng.normal();
        for (int c = 0; c < d; ++c) {
            xa[static_cast<std::size_t>(c)] = a.mu[static_cast<std::size_t>(c)] +
                                              std::sqrt(a.var[static_cast<std::size_t>(c)]) * u[static_cast<std::size_t>(c)];
            xb[static_cast<std::size_t>(c)] = b.mu[static_cast<std::size_t>(c)] +
                                              std::sqrt(b.var[static_cast<std::size_t>(c)]) * u[static_cast<std::size_t>(c)];
        }
        // x-side term: log p(x_s) - log m(x_s) with x_s = mu + sqrt(v) u
        const double lpa = log_diag_gaussian(xa.data(), a);
        const double lqa = log_diag_gaussian(xa.data(), b);
        const double wp_a = std::exp(lpa - log_add_exp(lpa, lqa));
        for (int c = 0; c < d; ++c) {
            const std::size_t i = static_cast<std::size_t>(c);
            const double va = a.var[i];
            const double diff_a = xa[i] - a.mu[i];  // = sqrt(v) u
            const double dlp_dmu = diff_a / va;     // parameter derivative
            const double dlp_dv = -0.5 / va + 0.5 * diff_a * diff_a / (va * va);
            const double dlp_dx = -diff_a / va;
            const double dlq_dx = -(xa[i] - b.mu[i]) / b.var[i];
            const double dx_dmu = 1.0;
            const double dx_dv = u[i] / (2.0 * std::sqrt(va));
            const double dlm_dx = wp_a * dlp_dx + (1.0 - wp_a) * dlq_dx;
            // total derivative of lp - lm through parameters and sample
            gmu[i] += 0.5 * inv_s *
                      ((dlp_dmu + dlp_dx * dx_dmu) - (wp_a * dlp_dmu + dlm_dx * dx_dmu));
            gvar[i] += 0.5 * inv_s *
                       ((dlp_dv + dlp_dx * dx_dv) - (wp_a * dlp_dv + dlm_dx * dx_dv));
        }
        // y-side term: log q(y_s) - log m(y_s), y_s fixed w.r.t. a
        const double lpb = log_diag_gaussian(xb.data(), a);
        const double lqb = log_diag_gaussian(xb.data(), b);
        const double wp_b = std::exp(lpb - log_add_exp(lpb, lqb));
        for (int c = 0; c < d; ++c) {
            const std::size_t i = static_cast<std::size_t>(c);
            const double va = a.var[i];
            const double diff = xb[i] - a.mu[i];
            const double dlp_dmu = diff / va;
            const double dlp_dv = -0.5 / va + 0.5 * diff * diff / (va * va);
            gmu[i] -= 0.5 * inv_s * wp_b * dlp_dmu;
            gvar[i] -= 0.5 * inv_s * wp_b * dlp_dv;
        }
    }
}

// ------------------------------------------------------------ inference

std::vector<double> weighting(const std::vector<double>& z, const VlpBank& bank) {
    if (static_cast<int>(z.size()) != bank.dim())
        throw ShapeError("weighting: feature dimension mismatch");
    std::vector<double> d(static_cast<std::size_t>(bank.classes()), 0.0);
    double total = 0.0;
    for (int k = 0; k < bank.classes(); ++k) {
        const auto proto = bank.prototype(k);
        double dist = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double diff = z[i] - proto[i];
            dist += diff * diff;
        }
        d[static_cast<std::size_t>(k)] = 1.0 / (std::sqrt(dist) + kDistanceGuard);
        total += d[static_cast<std::size_t>(k)];
    }
    for (auto& v : d) v /= total;
    return d;
}

std::vector<double> calibrate(const std::vector<double>& z, const std::vector<double>& target,
                              double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("calibrate: alpha must lie in [0, 1]");
    if (z.size() != target.size()) throw ShapeError("calibrate: dimension mismatch");
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = (1.0 - alpha) * z[i] + alpha * target[i];
    return out;
}

Tensor calibrate_on_tape(Tape& tape, const Tensor& z, const Tensor& target, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("calibrate: alpha must lie in [0, 1]");
    return tape.add(tape.scale(z, 1.0 - alpha), tape.scale(target, alpha));
}

}  // namespace sada
