#include "sada/augment.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "sada/errors.hpp"

namespace sada {

namespace {

struct Image {
    int h, w, c;
    const std::vector<double>& v;
    double at(int y, int x, int ch) const {
        return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
};

// Bilinear lookup on the source grid using the align-corners mapping, so a
// same-size resample is the identity.
double bilinear(const Image& img, double y, double x, int ch) {
    y = std::clamp(y, 0.0, static_cast<double>(img.h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(img.w - 1));
    const int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
    const int y1 = std::min(y0 + 1, img.h - 1), x1 = std::min(x0 + 1, img.w - 1);
    const double fy = y - y0, fx = x - x0;
    return img.at(y0, x0, ch) * (1 - fy) * (1 - fx) + img.at(y0, x1, ch) * (1 - fy) * fx +
           img.at(y1, x0, ch) * fy * (1 - fx) + img.at(y1, x1, ch) * fy * fx;
}

Tensor resample_region(const Tensor& src, int y0, int x0, int rh, int rw, int out_h, int out_w) {
    const Image img{src.shape[0], src.shape[1], src.shape[2], src.values};
    Tensor out = Tensor::zeros({out_h, out_w, img.c});
    const double sy = out_h > 1 ? static_cast<double>(rh - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(rw - 1) / (out_w - 1) : 0.0;
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x)
            for (int ch = 0; ch < img.c; ++ch)
                out.values[(static_cast<std::size_t>(y) * out_w + x) * img.c + ch] =
                    bilinear(img, y0 + y * sy, x0 + x * sx, ch);
    return out;
}

}  // namespace

AugmentKind augment_kind_from_name(const std::string& name) {
    static const std::unordered_map<std::string, AugmentKind> table = {
        {"rotate", AugmentKind::rotate},
        {"flip", AugmentKind::flip},
        {"random_gray", AugmentKind::random_gray},
        {"random_crop_resize", AugmentKind::random_crop_resize},
        {"resize", AugmentKind::resize},
        {"color_jitter", AugmentKind::color_jitter},
        {"gaussian_blur", AugmentKind::gaussian_blur},
    };
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown augmentation: " + name);
    return it->second;
}

const char* augment_kind_name(AugmentKind kind) {
    switch (kind) {
        case AugmentKind::rotate: return "rotate";
        case AugmentKind::flip: return "flip";
        case AugmentKind::random_gray: return "random_gray";
        case AugmentKind::random_crop_resize: return "random_crop_resize";
        case AugmentKind::resize: return "resize";
        case AugmentKind::color_jitter: return "color_jitter";
        case AugmentKind::gaussian_blur: return "gaussian_blur";
    }
    return "?";
}

Tensor apply(const AugmentOp& op, const Tensor& image, Rng& rng) {
    if (image.rank() != 3)
        throw ShapeError("augment: expected HxWxC image, got " + shape_str(image.shape));
    const int H = image.shape[0], W = image.shape[1], C = image.shape[2];

    switch (op.kind) {
        case AugmentKind::rotate: {
            if (op.rotate_degrees != 90 && op.rotate_degrees != 180 && op.rotate_degrees != 270)
                throw ConfigError("rotate: angle must be 90, 180 or 270");
            if (op.rotate_degrees != 180 && H != W)
                throw ShapeError("rotate: 90/270 degrees needs a square image");
            Tensor out = Tensor::zeros(image.shape);
            const int turns = op.rotate_degrees / 90;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    int sy = y, sx = x;
                    for (int t = 0; t < turns; ++t) {
                        // one counter-clockwise step of the source index
                        const int ny = sx, nx = H - 1 - sy;
                        sy = ny;
                        sx = nx;
                    }
                    for (int ch = 0; ch < C; ++ch)
                        out.values[(static_cast<std::size_t>(y) * W + x) * C + ch] =
                            image.values[(static_cast<std::size_t>(sy) * W + sx) * C + ch];
                }
            return out;
        }
        case AugmentKind::flip: {
            Tensor out = Tensor::zeros(image.shape);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    for (int ch = 0; ch < C; ++ch)
                        out.values[(static_cast<std::size_t>(y) * W + x) * C + ch] =
                            image.values[(static_cast<std::size_t>(y) * W + (W - 1 - x)) * C + ch];
            return out;
        }
        case AugmentKind::random_gray: {
            if (!rng.bernoulli(op.gray_prob)) return image;
            Tensor out = Tensor::zeros(image.shape);
            for (int i = 0; i < H * W; ++i) {
                double mean = 0.0;
                for (int ch = 0; ch < C; ++ch)
                    mean += image.values[static_cast<std::size_t>(i) * C + ch];
                mean /= C;
                for (int ch = 0; ch < C; ++ch)
                    out.values[static_cast<std::size_t>(i) * C + ch] = mean;
            }
            return out;
        }
        case AugmentKind::random_crop_resize: {
            const double ratio = rng.uniform(op.crop_ratio_lo, op.crop_ratio_hi);
            const int ch = std::max(2, static_cast<int>(std::lround(ratio * H)));
            const int cw = std::max(2, static_cast<int>(std::lround(ratio * W)));
            const int y0 = rng.uniform_int(H - ch + 1);
            const int x0 = rng.uniform_int(W - cw + 1);
            return resample_region(image, y0, x0, ch, cw, H, W);
        }
        case AugmentKind::resize: {
            if (op.resize_scale < 1.0) throw ConfigError("resize: scale must be >= 1");
            if (op.resize_scale == 1.0) return image;
            const int sh = static_cast<int>(std::lround(op.resize_scale * H));
            const int sw = static_cast<int>(std::lround(op.resize_scale * W));
            Tensor big = resample_region(image, 0, 0, H, W, sh, sw);
            // center crop back to the native size
            Tensor out = Tensor::zeros(image.shape);
            const int y0 = (sh - H) / 2, x0 = (sw - W) / 2;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    for (int c2 = 0; c2 < C; ++c2)
                        out.values[(static_cast<std::size_t>(y) * W + x) * C + c2] =
                            big.values[(static_cast<std::size_t>(y0 + y) * sw + (x0 + x)) * C + c2];
            return out;
        }
        case AugmentKind::color_jitter: {
            Tensor out = image;
            for (int ch = 0; ch < C; ++ch) {
                const double f = 1.0 + rng.uniform(-op.jitter_strength, op.jitter_strength);
                for (int i = 0; i < H * W; ++i)
                    out.values[static_cast<std::size_t>(i) * C + ch] *= f;
            }
            return out;
        }
        case AugmentKind::gaussian_blur: {
            double w3[3];
            for (int d = -1; d <= 1; ++d)
                w3[d + 1] = std::exp(-d * d / (2.0 * op.blur_sigma * op.blur_sigma));
            Tensor out = Tensor::zeros(image.shape);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    for (int c2 = 0; c2 < C; ++c2) {
                        double acc = 0.0, wsum = 0.0;
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                const int sy = y + dy, sx = x + dx;
                                if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                                const double wgt = w3[dy + 1] * w3[dx + 1];
                                acc += wgt *
                                       image.values[(static_cast<std::size_t>(sy) * W + sx) * C + c2];
                                wsum += wgt;
                            }
                        out.values[(static_cast<std::size_t>(y) * W + x) * C + c2] = acc / wsum;
                    }
            return out;
        }
    }
    throw ConfigError("augment: unreachable kind");
}

AugmentPlan make_plan(const std::vector<AugmentKind>& kinds) {
    if (kinds.empty() || kinds.size() > 7)
        throw ConfigError("plan: need between 1 and 7 operations, got " +
                          std::to_string(kinds.size()));
    AugmentPlan plan;
    for (auto k : kinds) {
        for (const auto& existing : plan.ops)
            if (existing.kind == k)
                throw ConfigError(std::string("plan: duplicate operation ") + augment_kind_name(k));
        plan.ops.push_back(AugmentOp::of(k));
    }
    return plan;
}

AugmentPlan default_plan() {
    return make_plan({AugmentKind::flip, AugmentKind::gaussian_blur, AugmentKind::random_gray,
                      AugmentKind::random_crop_resize});
}

std::vector<AugmentOp> full_pool() {
    return {AugmentOp::of(AugmentKind::rotate),
            AugmentOp::of(AugmentKind::flip),
            AugmentOp::of(AugmentKind::random_gray),
            AugmentOp::of(AugmentKind::random_crop_resize),
            AugmentOp::of(AugmentKind::resize),
            AugmentOp::of(AugmentKind::color_jitter),
            AugmentOp::of(AugmentKind::gaussian_blur)};
}

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

AugmentPlan select_plan(const std::vector<AugmentOp>& pool, int j,
                        const std::function<double(const AugmentPlan&)>& eval_fn) {
    const int n = static_cast<int>(pool.size());
    if (j < 1 || j > n)
        throw ConfigError("select_plan: J = " + std::to_string(j) + " outside [1, " +
                          std::to_string(n) + "]");

    auto plan_of = [&](const std::vector<int>& idx) {
        AugmentPlan p;
        for (int i : idx) p.ops.push_back(pool[static_cast<std::size_t>(i)]);
        return p;
    };

    if (binomial(n, j) <= 64.0) {
        // exhaustive, subsets enumerated in pool order so ties resolve first
        std::vector<int> idx(static_cast<std::size_t>(j));
        for (int i = 0; i < j; ++i) idx[static_cast<std::size_t>(i)] = i;
        AugmentPlan best;
        double best_score = -1.0;
        bool more = true;
        while (more) {
            AugmentPlan candidate = plan_of(idx);
            const double score = eval_fn(candidate);
            if (score > best_score) {
                best_score = score;
                best = candidate;
            }
            // next combination
            int i = j - 1;
            while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - j + i) --i;
            if (i < 0) {
                more = false;
            } else {
                ++idx[static_cast<std::size_t>(i)];
                for (int t = i + 1; t < j; ++t)
                    idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
            }
        }
        return best;
    }

    // greedy forward selection
    std::vector<int> chosen;
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    for (int round = 0; round < j; ++round) {
        int best_i = -1;
        double best_score = -1.0;
        for (int i = 0; i < n; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            std::vector<int> trial = chosen;
            trial.push_back(i);
            const double score = eval_fn(plan_of(trial));
            if (score > best_score) {
                best_score = score;
                best_i = i;
            }
        }
        used[static_cast<std::size_t>(best_i)] = 1;
        chosen.push_back(best_i);
    }
    std::sort(chosen.begin(), chosen.end());
    return plan_of(chosen);
}

}  // namespace sada
