#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sada/rng.hpp"
#include "sada/tensor.hpp"

namespace sada {

// Shape-preserving image augmentations. Stochastic ops (random_gray,
// random_crop_resize, color_jitter) consume the rng stream; the rest ignore
// it. All of them map HxWxC to HxWxC with finite values.

enum class AugmentKind {
    rotate,
    flip,
    random_gray,
    random_crop_resize,
    resize,
    color_jitter,
    gaussian_blur,
};

AugmentKind augment_kind_from_name(const std::string& name);
const char* augment_kind_name(AugmentKind kind);

struct AugmentOp {
    AugmentKind kind;
    int rotate_degrees = 90;      // one of 90, 180, 270
    double crop_ratio_lo = 0.7;   // random_crop_resize side ratio range
    double crop_ratio_hi = 1.0;
    double gray_prob = 0.5;
    double jitter_strength = 0.2;
    double resize_scale = 1.15;   // upscale factor before the center crop
    double blur_sigma = 1.0;      // 3x3 Gaussian kernel

    static AugmentOp of(AugmentKind kind) { return AugmentOp{kind}; }
};

Tensor apply(const AugmentOp& op, const Tensor& image, Rng& rng);

// Ordered list of distinct operations, one prompt group per entry.
struct AugmentPlan {
    std::vector<AugmentOp> ops;
    int size() const { return static_cast<int>(ops.size()); }
};

AugmentPlan make_plan(const std::vector<AugmentKind>& kinds);

// flip, gaussian_blur, random_gray, random_crop_resize
AugmentPlan default_plan();

std::vector<AugmentOp> full_pool();

// Picks the J-subset of the pool maximizing eval_fn: exhaustive when the
// subset count is at most 64, greedy forward selection otherwise. Ties go to
// the subset that appears first in pool order.
AugmentPlan select_plan(const std::vector<AugmentOp>& pool, int j,
                        const std::function<double(const AugmentPlan&)>& eval_fn);

}  // namespace sada
