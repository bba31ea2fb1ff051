#include "sada/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "sada/kernels.hpp"

namespace sada {

LossKind loss_kind_from_name(const std::string& name) {
    if (name == "emd") return LossKind::emd;
    if (name == "mmd") return LossKind::mmd;
    if (name == "js") return LossKind::js;
    throw ConfigError("unknown loss kind: " + name);
}

const char* loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::emd: return "emd";
        case LossKind::mmd: return "mmd";
        case LossKind::js: return "js";
    }
    return "?";
}

PrototypeSource prototype_source_from_name(const std::string& name) {
    if (name == "vlp") return PrototypeSource::vlp;
    if (name == "lp") return PrototypeSource::lp;
    throw ConfigError("unknown prototype source: " + name);
}

const char* prototype_source_name(PrototypeSource source) {
    return source == PrototypeSource::vlp ? "vlp" : "lp";
}

void TrainConfig::validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0, 1]");
    if (sigma < 0.0) throw ConfigError("sigma must be non-negative");
    if (tau <= 0.0) throw ConfigError("tau must be positive");
    if (epochs < 2) throw ConfigError("epochs must be at least 2; epoch 1 is the warmup");
    if (image_batch < 1 || prompt_batch < 1) throw ConfigError("batch sizes must be positive");
    if (J < 1 || J > 7) throw ConfigError("J must lie in [1, 7]");
    if (L < 1 || M < 1) throw ConfigError("L and M must be positive");
    if (prompt_batch > L) throw ConfigError("prompt_batch cannot exceed L");
    if (sa_position < 0 || sa_position > dims.blocks)
        throw ConfigError("sa_position outside [0, blocks]");
    if (!plan_kinds.empty() && static_cast<int>(plan_kinds.size()) != J)
        throw ConfigError("plan must list exactly J operations");
}

AugmentPlan plan_for_group_count(int j) {
    switch (j) {
        case 1: return make_plan({AugmentKind::flip});
        case 2: return make_plan({AugmentKind::flip, AugmentKind::random_gray});
        case 4: return default_plan();
        case 7:
            return make_plan({AugmentKind::rotate, AugmentKind::flip, AugmentKind::random_gray,
                              AugmentKind::random_crop_resize, AugmentKind::resize,
                              AugmentKind::color_jitter, AugmentKind::gaussian_blur});
        default: {
            auto pool = full_pool();
            std::vector<AugmentKind> kinds;
            for (int i = 0; i < j; ++i) kinds.push_back(pool[static_cast<std::size_t>(i)].kind);
            return make_plan(kinds);
        }
    }
}

double cosine_lr(int step, int total_steps, double lr0) {
    if (step < 0 || step >= total_steps)
        throw ConfigError("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                          std::to_string(total_steps) + ")");
    constexpr double kPi = 3.1415926535897932384626433832795;
    return lr0 * 0.5 * (1.0 + std::cos(kPi * static_cast<double>(step) / total_steps));
}

namespace {

struct LanguageStats {
    // pooled: one entry per class; per-group: K*J entries indexed k*J + j
    std::vector<GaussianStats> stats;
};

LanguageStats language_stats(const TrainedState& state) {
    const auto feats = all_text_features_plain(state.prompts, state.encoders.text,
                                               state.encoders.table);
    const int d = state.config.dims.D;
    const int j_count = state.prompts.J;
    const int l_count = state.prompts.L;
    LanguageStats out;
    for (int k = 0; k < state.num_classes; ++k) {
        const auto& per_class = feats[static_cast<std::size_t>(k)];
        if (state.config.lang_stats_per_group) {
            for (int j = 0; j < j_count; ++j) {
                std::vector<double> block;
                block.reserve(static_cast<std::size_t>(l_count) * d);
                for (int l = 0; l < l_count; ++l) {
                    const auto& f = per_class[static_cast<std::size_t>(j * l_count + l)];
                    block.insert(block.end(), f.begin(), f.end());
                }
                out.stats.push_back(estimate_stats(block, l_count, d));
            }
        } else {
            std::vector<double> block;
            block.reserve(per_class.size() * static_cast<std::size_t>(d));
            for (const auto& f : per_class) block.insert(block.end(), f.begin(), f.end());
            out.stats.push_back(estimate_stats(block, j_count * l_count, d));
        }
    }
    return out;
}

// group members of one class restricted to augmentation group j
std::vector<double> group_members(const VlpBank& bank, int k, int j) {
    const auto all = bank.class_members(k);
    const int d = bank.dim();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(bank.shots()) * d);
    for (int n = 0; n < bank.shots(); ++n) {
        const double* row = all.data() + (static_cast<std::size_t>(n) * bank.groups() + j) * d;
        out.insert(out.end(), row, row + d);
    }
    return out;
}

}  // namespace

double align_bound(const TrainedState& state) {
    if (!state.bank.initialized()) throw StateError("align_bound: bank not initialized");
    const LanguageStats lang = language_stats(state);
    const int d = state.config.dims.D;
    double total = 0.0;
    for (int k = 0; k < state.num_classes; ++k) {
        if (state.config.lang_stats_per_group) {
            for (int j = 0; j < state.prompts.J; ++j) {
                const auto members = group_members(state.bank, k, j);
                const auto vision = estimate_stats(members, state.bank.shots(), d);
                total += emd_upper_bound(vision, lang.stats[static_cast<std::size_t>(k * state.prompts.J + j)]);
            }
        } else {
            const auto members = state.bank.class_members(k);
            const auto vision = estimate_stats(members, state.bank.members_per_class(), d);
            total += emd_upper_bound(vision, lang.stats[static_cast<std::size_t>(k)]);
        }
    }
    return total;
}

namespace {

// Encodes one augmented training view through the attack path.
Tensor encode_view(Tape& tape, const TrainedState& state,
                   const std::vector<AdapterLeaves>& adapters, const Tensor& raw_image, int group,
                   Rng& aug_rng, Rng& noise_rng) {
    const TrainConfig& cfg = state.config;
    Tensor view = cfg.augment_images ? apply(state.plan.ops[static_cast<std::size_t>(group)],
                                             raw_image, aug_rng)
                                     : raw_image;
    Tensor x = tape.constant(view);
    ImageHook hook;
    if (cfg.enable_sa) {
        hook = [&, group](Tape& t, const Tensor& feat) {
            SpatialAttention m =
                spatial_attention(t, adapters[static_cast<std::size_t>(group)], feat);
            return selective_attack(t, feat, m, cfg.sigma, noise_rng);
        };
    }
    return state.encoders.image.encode(tape, x, hook, cfg.sa_position);
}

std::vector<int> sample_prompt_indices(int l_count, int batch, Rng& rng) {
    std::vector<int> all(static_cast<std::size_t>(l_count));
    for (int i = 0; i < l_count; ++i) all[static_cast<std::size_t>(i)] = i;
    if (batch >= l_count) return all;
    rng.shuffle(all);
    all.resize(static_cast<std::size_t>(batch));
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace

TrainStep record_step(Tape& tape, const TrainedState& state, const FewShotTask& task,
                      const std::vector<int>& image_indices, Rng& aug_rng, Rng& noise_rng,
                      Rng& prompt_rng) {
    const TrainConfig& cfg = state.config;
    const int k_count = state.num_classes;
    const bool use_bank = cfg.enable_cmda && cfg.prototype_source == PrototypeSource::vlp &&
                          state.bank.initialized();
    const bool use_lp = cfg.enable_cmda && cfg.prototype_source == PrototypeSource::lp;

    TrainStep step;
    step.prompt_leaf = register_prompts(tape, state.prompts, true);
    if (cfg.enable_sa)
        for (const auto& adapter : state.adapters)
            step.adapter_leaves.push_back(register_adapter(tape, adapter));
    if (use_bank)
        for (int k = 0; k < k_count; ++k)
            step.bank_leaves.push_back(tape.leaf({state.bank.members_per_class(), cfg.dims.D},
                                                 state.bank.class_members(k), true));

    // per-group prompt subset for this step, shared across the batch
    std::vector<std::vector<int>> prompt_subset;
    for (int j = 0; j < cfg.J; ++j)
        prompt_subset.push_back(sample_prompt_indices(cfg.L, cfg.prompt_batch, prompt_rng));

    // group text features for every class, from the sampled prompts
    std::vector<std::vector<Tensor>> text(static_cast<std::size_t>(cfg.J));
    for (int j = 0; j < cfg.J; ++j)
        for (int k = 0; k < k_count; ++k)
            text[static_cast<std::size_t>(j)].push_back(
                group_text_feature(tape, step.prompt_leaf, state.prompts, state.encoders.text,
                                   state.encoders.table, j, k,
                                   prompt_subset[static_cast<std::size_t>(j)]));

    // class prototypes on the tape (trainable bank means or language means)
    std::vector<Tensor> proto(static_cast<std::size_t>(k_count));
    std::vector<char> proto_ready(static_cast<std::size_t>(k_count), 0);
    auto prototype_for = [&](int k) -> const Tensor& {
        if (!proto_ready[static_cast<std::size_t>(k)]) {
            if (use_bank)
                proto[static_cast<std::size_t>(k)] =
                    tape.reduce_mean(step.bank_leaves[static_cast<std::size_t>(k)]);
            else
                proto[static_cast<std::size_t>(k)] =
                    language_prototype(tape, step.prompt_leaf, state.prompts,
                                       state.encoders.text, state.encoders.table, k);
            proto_ready[static_cast<std::size_t>(k)] = 1;
        }
        return proto[static_cast<std::size_t>(k)];
    };

    std::vector<Tensor> losses;
    for (int idx : image_indices) {
        const LabeledImage& item = task.train[static_cast<std::size_t>(idx)];
        for (int j = 0; j < cfg.J; ++j) {
            Tensor z = encode_view(tape, state, step.adapter_leaves, item.image, j, aug_rng,
                                   noise_rng);
            Tensor feature = (use_bank || use_lp)
                                 ? calibrate_on_tape(tape, z, prototype_for(item.label), cfg.alpha)
                                 : z;
            std::vector<Tensor> sims;
            sims.reserve(static_cast<std::size_t>(k_count));
            for (int k = 0; k < k_count; ++k)
                sims.push_back(
                    tape.cosine_sim(feature, text[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]));
            Tensor logits = tape.concat(sims, 0);
            losses.push_back(tape.softmax_xent(logits, item.label, cfg.tau));
        }
    }
    step.loss_main = tape.reduce_mean(tape.concat(losses, 0));

    if (use_bank && cfg.loss_kind == LossKind::emd) {
        // language side enters as constants: no gradient reaches the prompts
        const LanguageStats lang = language_stats(state);
        Tensor total;
        bool first = true;
        for (int k = 0; k < k_count; ++k) {
            std::vector<Tensor> blocks;
            if (cfg.lang_stats_per_group) {
                for (int j = 0; j < cfg.J; ++j) {
                    // rows n*J+j of the class block
                    std::vector<Tensor> rows;
                    for (int n = 0; n < state.bank.shots(); ++n) {
                        const int row = n * cfg.J + j;
                        rows.push_back(tape.reshape(
                            tape.slice(step.bank_leaves[static_cast<std::size_t>(k)], row, row + 1),
                            {cfg.dims.D}));
                    }
                    Tensor members = rows.size() == 1 ? tape.reshape(rows[0], {1, cfg.dims.D})
                                                      : tape.stack(rows);
                    auto vision = estimate_stats_on_tape(tape, members);
                    blocks.push_back(emd_upper_bound_on_tape(
                        tape, vision, lang.stats[static_cast<std::size_t>(k * cfg.J + j)]));
                }
            } else {
                auto vision = estimate_stats_on_tape(
                    tape, step.bank_leaves[static_cast<std::size_t>(k)]);
                blocks.push_back(emd_upper_bound_on_tape(tape, vision,
                                                         lang.stats[static_cast<std::size_t>(k)]));
            }
            for (auto& b : blocks) {
                total = first ? b : tape.add(total, b);
                first = false;
            }
        }
        step.loss_align = total;
    }
    return step;
}

namespace {

// analytic member gradients for the non-tape objectives
std::vector<std::vector<double>> align_member_grads(const TrainedState& state,
                                                    double* loss_value) {
    const TrainConfig& cfg = state.config;
    const int d = cfg.dims.D;
    const LanguageStats lang = language_stats(state);
    std::vector<std::vector<double>> grads(static_cast<std::size_t>(state.num_classes));
    double total = 0.0;
    const auto lang_feats = cfg.loss_kind == LossKind::mmd
                                ? all_text_features_plain(state.prompts, state.encoders.text,
                                                          state.encoders.table)
                                : std::vector<std::vector<std::vector<double>>>{};
    for (int k = 0; k < state.num_classes; ++k) {
        const auto members = state.bank.class_members(k);
        const int s = state.bank.members_per_class();
        auto& grad = grads[static_cast<std::size_t>(k)];
        grad.assign(members.size(), 0.0);
        if (cfg.loss_kind == LossKind::mmd) {
            std::vector<double> lang_block;
            for (const auto& f : lang_feats[static_cast<std::size_t>(k)])
                lang_block.insert(lang_block.end(), f.begin(), f.end());
            const int n = static_cast<int>(lang_feats[static_cast<std::size_t>(k)].size());
            const double bw = median_bandwidth(members, s, lang_block, n, d);
            total += mmd(members, s, lang_block, n, d, bw);
            mmd_grad_a(members, s, lang_block, n, d, bw, grad);
        } else {  // js
            const auto vision = estimate_stats(members, s, d);
            const auto& lstats = lang.stats[static_cast<std::size_t>(k)];
            total += js_divergence(vision, lstats);
            std::vector<double> gmu, gvar;
            js_divergence_grad(vision, lstats, gmu, gvar);
            // chain through mean and floored population variance
            std::vector<double> mu_raw(static_cast<std::size_t>(d), 0.0);
            for (int i = 0; i < s; ++i)
                for (int c = 0; c < d; ++c)
                    mu_raw[static_cast<std::size_t>(c)] += members[static_cast<std::size_t>(i) * d + c];
            for (auto& v : mu_raw) v /= static_cast<double>(s);
            for (int c = 0; c < d; ++c) {
                double raw_var = 0.0;
                for (int i = 0; i < s; ++i) {
                    const double diff = members[static_cast<std::size_t>(i) * d + c] - mu_raw[static_cast<std::size_t>(c)];
                    raw_var += diff * diff;
                }
                raw_var /= static_cast<double>(s);
                const bool floored = raw_var <= kVarFloor;
                for (int i = 0; i < s; ++i) {
                    const std::size_t idx = static_cast<std::size_t>(i) * d + c;
                    double g = gmu[static_cast<std::size_t>(c)] / static_cast<double>(s);
                    if (!floored)
                        g += gvar[static_cast<std::size_t>(c)] * 2.0 *
                             (members[idx] - mu_raw[static_cast<std::size_t>(c)]) / static_cast<double>(s);
                    grad[idx] += g;
                }
            }
        }
    }
    if (loss_value) *loss_value = total;
    return grads;
}

double mean_or_zero(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

}  // namespace

TrainedState train(const TrainConfig& config, const FewShotTask& task) {
    config.validate();
    if (task.num_classes < 2) throw ConfigError("train: need at least 2 classes");
    if (static_cast<int>(task.train.size()) != task.shots * task.num_classes)
        throw ConfigError("train: training split must hold shots * classes images");

    TrainedState state;
    state.config = config;
    state.num_classes = task.num_classes;
    state.encoders = build_encoders(config.encoder_seed, config.dims, task.num_classes, config.M);
    state.plan = config.plan_kinds.empty() ? plan_for_group_count(config.J)
                                           : make_plan(config.plan_kinds);

    Rng root(config.seed);
    Rng prompt_init = root.derive(1);
    Rng adapter_init = root.derive(2);
    Rng aug_rng = root.derive(3);
    Rng noise_rng = root.derive(4);
    Rng prompt_rng = root.derive(5);
    Rng shuffle_rng = root.derive(6);
    Rng init_aug = root.derive(7);
    Rng init_noise = root.derive(8);

    state.prompts = PromptCollection::init(config.J, config.L, config.M, config.dims.E,
                                           config.token_position, prompt_init);
    if (config.enable_sa) {
        const int channels = state.encoders.image.channels_at(config.sa_position);
        for (int j = 0; j < config.J; ++j)
            state.adapters.push_back(make_adapter(channels, j, adapter_init));
    }
    if (config.enable_cmda && config.prototype_source == PrototypeSource::vlp)
        state.bank = VlpBank(task.shots, config.J, task.num_classes, config.dims.D);

    const std::vector<double> encoder_before = state.encoders.image.parameter_snapshot();

    const int train_size = static_cast<int>(task.train.size());
    const int steps_per_epoch = (train_size + config.image_batch - 1) / config.image_batch;
    const int total_steps = config.epochs * steps_per_epoch;
    int global_step = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<int> order(static_cast<std::size_t>(train_size));
        for (int i = 0; i < train_size; ++i) order[static_cast<std::size_t>(i)] = i;
        shuffle_rng.shuffle(order);

        std::vector<double> epoch_main, epoch_align;
        for (int s = 0; s < steps_per_epoch; ++s) {
            const int lo = s * config.image_batch;
            const int hi = std::min(train_size, lo + config.image_batch);
            std::vector<int> batch(order.begin() + lo, order.begin() + hi);

            Tape tape;
            TrainStep step = record_step(tape, state, task, batch, aug_rng, noise_rng, prompt_rng);
            const GradientMap g_main = tape.backward(step.loss_main);
            epoch_main.push_back(step.loss_main.scalar());

            // align gradients at the same parameter point as the main loss
            std::vector<std::vector<double>> align_grads;
            if (!step.bank_leaves.empty()) {
                double align_value = 0.0;
                if (step.loss_align) {
                    const GradientMap g_align = tape.backward(*step.loss_align);
                    align_value = step.loss_align->scalar();
                    for (int k = 0; k < state.num_classes; ++k)
                        align_grads.push_back(
                            g_align.get_or_zeros(step.bank_leaves[static_cast<std::size_t>(k)]));
                } else {
                    align_grads = align_member_grads(state, &align_value);
                }
                epoch_align.push_back(align_value);
            }

            const double lr_m = cosine_lr(global_step, total_steps, config.lr_main);
            const double lr_e = cosine_lr(global_step, total_steps, config.lr_emd);

            {  // prompt update
                const auto g = g_main.get_or_zeros(step.prompt_leaf);
                for (std::size_t i = 0; i < state.prompts.values.size(); ++i)
                    state.prompts.values[i] -= lr_m * g[i];
            }
            for (std::size_t j = 0; j < step.adapter_leaves.size(); ++j) {
                const auto g7 = g_main.get_or_zeros(step.adapter_leaves[j].conv7);
                const auto g3 = g_main.get_or_zeros(step.adapter_leaves[j].conv3);
                for (std::size_t i = 0; i < g7.size(); ++i)
                    state.adapters[j].conv7.values[i] -= lr_m * g7[i];
                for (std::size_t i = 0; i < g3.size(); ++i)
                    state.adapters[j].conv3.values[i] -= lr_m * g3[i];
            }
            if (!step.bank_leaves.empty()) {
                // combined two-rate step on the bank members
                for (int k = 0; k < state.num_classes; ++k) {
                    const auto gm =
                        g_main.get_or_zeros(step.bank_leaves[static_cast<std::size_t>(k)]);
                    std::vector<double> delta(gm.size());
                    for (std::size_t i = 0; i < gm.size(); ++i)
                        delta[i] = -lr_m * gm[i] -
                                   lr_e * align_grads[static_cast<std::size_t>(k)][i];
                    state.bank.apply_update(k, delta);
                }
            }
            ++global_step;
        }

        if (epoch == 1 && config.enable_cmda && config.prototype_source == PrototypeSource::vlp) {
            // VLP initialization from the features the warmup epoch produces
            std::vector<std::vector<double>> per_class(
                static_cast<std::size_t>(task.num_classes));
            std::vector<int> seen(static_cast<std::size_t>(task.num_classes), 0);
            for (auto& block : per_class)
                block.resize(static_cast<std::size_t>(task.shots) * config.J * config.dims.D);
            for (const auto& item : task.train) {
                const int n = seen[static_cast<std::size_t>(item.label)]++;
                for (int j = 0; j < config.J; ++j) {
                    Tape tape;
                    std::vector<AdapterLeaves> adapters;
                    if (config.enable_sa)
                        for (const auto& a : state.adapters)
                            adapters.push_back(register_adapter(tape, a));
                    Tensor z = encode_view(tape, state, adapters, item.image, j, init_aug,
                                           init_noise);
                    std::copy(z.values.begin(), z.values.end(),
                              per_class[static_cast<std::size_t>(item.label)].begin() +
                                  (static_cast<std::size_t>(n) * config.J + j) * config.dims.D);
                }
            }
            state.bank.init(per_class);
            state.align_bound_at_init = align_bound(state);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.loss_main = mean_or_zero(epoch_main);
        m.loss_align = mean_or_zero(epoch_align);
        Predictor predictor(state);
        m.train_acc = predictor.accuracy(task.train);
        m.val_acc = predictor.accuracy(task.val);
        state.log.push_back(m);
    }

    if (state.encoders.image.parameter_snapshot() != encoder_before)
        throw StateError("frozen image encoder drifted during training");
    return state;
}

// ---------------------------------------------------------------- Predictor

Predictor::Predictor(const TrainedState& state) : state_(state) {
    if (state.config.enable_sa) {
        if (state.adapters.empty()) throw StateError("predictor: SA enabled but no adapters");
        adapter_avg_ = average_adapters(state.adapters);
    }
    text_features_ = language_prototypes_plain(state.prompts, state.encoders.text,
                                               state.encoders.table);
    if (state.config.enable_cmda) {
        if (state.config.prototype_source == PrototypeSource::vlp) {
            if (state.bank.initialized())
                for (int k = 0; k < state.num_classes; ++k)
                    prototypes_.push_back(state.bank.prototype(k));
        } else {
            prototypes_ = text_features_;
        }
    }
}

std::vector<double> Predictor::image_feature(const Tensor& image) const {
    Tape tape;
    Tensor x = tape.constant(image);
    ImageHook hook;
    if (adapter_avg_) {
        hook = [&](Tape& t, const Tensor& feat) {
            AdapterLeaves leaves = register_adapter(t, *adapter_avg_);
            return inference_transform(t, leaves, feat, state_.config.inference_mode);
        };
    }
    return state_.encoders.image.encode(tape, x, hook, state_.config.sa_position).values;
}

std::vector<double> Predictor::predict(const Tensor& image) const {
    const std::vector<double> z = image_feature(image);
    std::vector<double> feature = z;
    if (!prototypes_.empty()) {
        // normalized inverse-distance mix of the class prototypes
        std::vector<double> weights(prototypes_.size(), 0.0);
        double total = 0.0;
        for (std::size_t k = 0; k < prototypes_.size(); ++k) {
            double dist = 0.0;
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double diff = z[i] - prototypes_[k][i];
                dist += diff * diff;
            }
            weights[k] = 1.0 / (std::sqrt(dist) + kDistanceGuard);
            total += weights[k];
        }
        std::vector<double> mix(z.size(), 0.0);
        for (std::size_t k = 0; k < prototypes_.size(); ++k)
            for (std::size_t i = 0; i < z.size(); ++i)
                mix[i] += weights[k] / total * prototypes_[k][i];
        feature = calibrate(z, mix, state_.config.alpha);
    }
    std::vector<double> logits(static_cast<std::size_t>(state_.num_classes));
    for (int k = 0; k < state_.num_classes; ++k)
        logits[static_cast<std::size_t>(k)] =
            kernels::cosine_sim(feature.data(), text_features_[static_cast<std::size_t>(k)].data(),
                                static_cast<std::int64_t>(feature.size())) /
            state_.config.tau;
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z_sum = 0.0;
    std::vector<double> probs(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        probs[k] = std::exp(logits[k] - mx);
        z_sum += probs[k];
    }
    for (auto& p : probs) p /= z_sum;
    return probs;
}

int Predictor::predict_class(const Tensor& image) const {
    const auto probs = predict(image);
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double Predictor::accuracy(const std::vector<LabeledImage>& items) const {
    if (items.empty()) return 0.0;
    int correct = 0;
    for (const auto& item : items)
        if (predict_class(item.image) == item.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(items.size());
}

std::vector<double> predict(const TrainedState& state, const Tensor& image) {
    return Predictor(state).predict(image);
}

}  // namespace sada
