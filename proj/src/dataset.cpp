#include "sada/dataset.hpp"

#include <cmath>

#include "sada/errors.hpp"

namespace sada {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Saturated, class-distinct glyph color: a class-dependent luminance plus a
// zero-sum chroma rotation, so classes differ both per channel and in the
// channel-averaged intensity.
std::vector<double> class_color(int k, int num_classes, int channels) {
    std::vector<double> color(static_cast<std::size_t>(channels));
    const double lum = 0.9 + 0.6 * static_cast<double>(k) / std::max(num_classes - 1, 1);
    const double theta = kTwoPi * (static_cast<double>(k) / num_classes + 0.11);
    for (int c = 0; c < channels; ++c)
        color[static_cast<std::size_t>(c)] =
            lum + 0.4 * std::cos(theta + kTwoPi * c / std::max(channels, 1));
    return color;
}

// Glyph stencil: a class-dependent pattern inside a g x g box.
bool glyph_hit(int shape, int y, int x, int g) {
    const int border = g / 5;
    switch (shape % 5) {
        case 0:  // frame
            return y < border || y >= g - border || x < border || x >= g - border;
        case 1: {  // disc
            const double cy = (g - 1) / 2.0, cx = (g - 1) / 2.0;
            const double r = (y - cy) * (y - cy) + (x - cx) * (x - cx);
            return r <= (g / 2.0 - 0.5) * (g / 2.0 - 0.5);
        }
        case 2:  // cross
            return std::abs(y - g / 2) <= border || std::abs(x - g / 2) <= border;
        case 3:  // diagonals
            return std::abs(y - x) <= border || std::abs(y + x - (g - 1)) <= border;
        case 4:  // stripes
            return (y / std::max(border, 1)) % 2 == 0;
    }
    return false;
}

LabeledImage make_image(const DatasetSpec& spec, int label, Rng& rng) {
    const int H = spec.H, W = spec.W, C = spec.C;
    LabeledImage out;
    out.label = label;
    out.image = Tensor::zeros({H, W, C});
    out.mask.assign(static_cast<std::size_t>(H) * W, 0);

    // smooth clutter field shared by every class: random low-frequency waves
    double fy[3], fx[3], phase[3], amp[3];
    for (int i = 0; i < 3; ++i) {
        fy[i] = rng.uniform(0.5, 2.5) * kTwoPi / H;
        fx[i] = rng.uniform(0.5, 2.5) * kTwoPi / W;
        phase[i] = rng.uniform(0.0, kTwoPi);
        amp[i] = rng.uniform(0.10, 0.22);
    }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double base = 0.0;
            for (int i = 0; i < 3; ++i) base += amp[i] * std::cos(fy[i] * y + fx[i] * x + phase[i]);
            for (int c = 0; c < C; ++c)
                out.image.values[(static_cast<std::size_t>(y) * W + x) * C + c] =
                    base + rng.uniform(-0.12, 0.12);
        }

    // achromatic distractor rectangles, same law for every class
    const int distractors = 2 + rng.uniform_int(3);
    for (int i = 0; i < distractors; ++i) {
        const int dh = 3 + rng.uniform_int(6), dw = 3 + rng.uniform_int(6);
        const int y0 = rng.uniform_int(H - dh), x0 = rng.uniform_int(W - dw);
        const double level = rng.uniform(-0.8, 0.8);
        for (int y = y0; y < y0 + dh; ++y)
            for (int x = x0; x < x0 + dw; ++x)
                for (int c = 0; c < C; ++c)
                    out.image.values[(static_cast<std::size_t>(y) * W + x) * C + c] = level;
    }

    // class glyph at a random position
    const int g = std::max(8, H * 3 / 8);
    const auto color = class_color(label, spec.num_classes, C);
    const int gy = rng.uniform_int(H - g + 1), gx = rng.uniform_int(W - g + 1);
    for (int y = 0; y < g; ++y)
        for (int x = 0; x < g; ++x) {
            if (!glyph_hit(label, y, x, g)) continue;
            const int py = gy + y, px = gx + x;
            out.mask[static_cast<std::size_t>(py) * W + px] = 1;
            for (int c = 0; c < C; ++c)
                out.image.values[(static_cast<std::size_t>(py) * W + px) * C + c] =
                    color[static_cast<std::size_t>(c)] + rng.uniform(-0.05, 0.05);
        }
    return out;
}

}  // namespace

SyntheticDataset generate_synthetic(const DatasetSpec& spec) {
    if (spec.num_classes < 2) throw ConfigError("dataset: need at least 2 classes");
    if (spec.shots < 1 || spec.pool_per_class < spec.shots)
        throw ConfigError("dataset: pool_per_class must cover the requested shots");
    if (spec.n_test_per_class < 1) throw ConfigError("dataset: empty test split");

    SyntheticDataset data;
    data.spec = spec;
    Rng root(spec.seed);
    const int val_per_class = std::max(1, spec.pool_per_class / 5);
    for (int k = 0; k < spec.num_classes; ++k) {
        Rng rng = root.derive(static_cast<std::uint64_t>(k) + 1);
        for (int i = 0; i < spec.pool_per_class; ++i)
            data.train_pool.push_back(make_image(spec, k, rng));
        for (int i = 0; i < val_per_class; ++i) data.val.push_back(make_image(spec, k, rng));
        for (int i = 0; i < spec.n_test_per_class; ++i)
            data.test.push_back(make_image(spec, k, rng));
    }
    return data;
}

SyntheticDataset generate_synthetic(int num_classes, int shots, int n_test_per_class,
                                    std::uint64_t seed) {
    DatasetSpec spec;
    spec.num_classes = num_classes;
    spec.shots = shots;
    spec.n_test_per_class = n_test_per_class;
    spec.seed = seed;
    return generate_synthetic(spec);
}

FewShotTask sample_task(const SyntheticDataset& data, int shots, std::uint64_t sample_seed) {
    const DatasetSpec& spec = data.spec;
    if (shots < 1 || shots > spec.pool_per_class)
        throw ConfigError("sample_task: shots outside [1, pool_per_class]");
    FewShotTask task;
    task.num_classes = spec.num_classes;
    task.shots = shots;
    Rng rng(sample_seed);
    for (int k = 0; k < spec.num_classes; ++k) {
        std::vector<int> order(static_cast<std::size_t>(spec.pool_per_class));
        for (int i = 0; i < spec.pool_per_class; ++i) order[static_cast<std::size_t>(i)] = i;
        rng.shuffle(order);
        for (int i = 0; i < shots; ++i)
            task.train.push_back(
                data.train_pool[static_cast<std::size_t>(k * spec.pool_per_class +
                                                         order[static_cast<std::size_t>(i)])]);
    }
    task.val = data.val;
    task.test = data.test;
    return task;
}

}  // namespace sada
