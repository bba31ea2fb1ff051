#include <doctest.h>

#include <cmath>

#include "sada/dataset.hpp"
#include "sada/pipeline.hpp"
#include "support.hpp"

using namespace sada;

namespace {

TrainConfig micro_config() {
    TrainConfig cfg;
    cfg.dims.H = 8;
    cfg.dims.W = 8;
    cfg.dims.C = 3;
    cfg.dims.E = 8;
    cfg.dims.D = 8;
    cfg.dims.blocks = 1;
    cfg.J = 2;
    cfg.L = 2;
    cfg.M = 4;
    cfg.prompt_batch = 2;
    cfg.image_batch = 4;
    cfg.epochs = 3;
    cfg.seed = 5;
    cfg.encoder_seed = 11;
    return cfg;
}

FewShotTask micro_task(int shots = 1, int classes = 2) {
    DatasetSpec spec;
    spec.num_classes = classes;
    spec.shots = shots;
    spec.n_test_per_class = 6;
    spec.pool_per_class = 5;
    spec.H = 8;
    spec.W = 8;
    spec.C = 3;
    spec.seed = 77;
    return sample_task(generate_synthetic(spec), shots, 123);
}

struct StepRngs {
    Rng aug{101};
    Rng noise{202};
    Rng prompt{303};
};

double loss_main_at(const TrainedState& state, const FewShotTask& task,
                    const std::vector<int>& batch) {
    Tape tape;
    StepRngs r;
    TrainStep step = record_step(tape, state, task, batch, r.aug, r.noise, r.prompt);
    return step.loss_main.scalar();
}

double loss_align_at(const TrainedState& state, const FewShotTask& task,
                     const std::vector<int>& batch) {
    Tape tape;
    StepRngs r;
    TrainStep step = record_step(tape, state, task, batch, r.aug, r.noise, r.prompt);
    REQUIRE(step.loss_align.has_value());
    return step.loss_align->scalar();
}

}  // namespace

TEST_CASE("cosine learning rate schedule") {
    CHECK(cosine_lr(0, 100, 0.01) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(cosine_lr(50, 100, 0.01) == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(cosine_lr(99, 100, 0.01) < 1e-5);
    CHECK_THROWS_AS(cosine_lr(100, 100, 0.01), ConfigError);
    CHECK_THROWS_AS(cosine_lr(-1, 100, 0.01), ConfigError);
}

TEST_CASE("config validation") {
    TrainConfig cfg = micro_config();
    cfg.epochs = 1;  // warmup epoch is mandatory
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = micro_config();
    cfg.alpha = 1.2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = micro_config();
    cfg.prompt_batch = 9;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("training is deterministic per seed and initializes the bank") {
    TrainConfig cfg = micro_config();
    FewShotTask task = micro_task();
    TrainedState a = train(cfg, task);
    TrainedState b = train(cfg, task);
    CHECK(a.prompts.values == b.prompts.values);
    REQUIRE(a.adapters.size() == 2);
    CHECK(a.adapters[0].conv7.values == b.adapters[0].conv7.values);
    CHECK(a.bank.raw() == b.bank.raw());
    CHECK(a.bank.initialized());
    CHECK(a.align_bound_at_init > 0.0);
    CHECK(a.log.size() == 3);
    for (const auto& m : a.log) {
        CHECK(std::isfinite(m.loss_main));
        CHECK(m.train_acc >= 0.0);
        CHECK(m.val_acc <= 1.0);
    }

    TrainConfig other = cfg;
    other.seed = 6;
    TrainedState c = train(other, task);
    CHECK(a.prompts.values != c.prompts.values);
}

TEST_CASE("gradient routing on a recorded step") {
    TrainConfig cfg = micro_config();
    FewShotTask task = micro_task();
    TrainedState state = train(cfg, task);
    REQUIRE(state.bank.initialized());
    const std::vector<int> batch = {0, 1};

    Tape tape;
    StepRngs r;
    TrainStep step = record_step(tape, state, task, batch, r.aug, r.noise, r.prompt);
    REQUIRE(step.loss_align.has_value());

    SUBCASE("the align loss sends exactly zero gradient to the prompts") {
        GradientMap g = tape.backward(*step.loss_align);
        const auto gp = g.get_or_zeros(step.prompt_leaf);
        for (double v : gp) CHECK(v == 0.0);
        // while the bank members receive real gradient
        double bank_mag = 0.0;
        for (const auto& leaf : step.bank_leaves)
            for (double v : g.get_or_zeros(leaf)) bank_mag += std::abs(v);
        CHECK(bank_mag > 0.0);
        // and the loss value itself does depend on the prompt values
        TrainedState nudged = state;
        nudged.prompts.values[0] += 0.05;
        CHECK(loss_align_at(nudged, task, batch) != loss_align_at(state, task, batch));
    }

    SUBCASE("the main loss reaches prompts, adapters and bank") {
        GradientMap g = tape.backward(step.loss_main);
        double prompts_mag = 0.0;
        for (double v : g.get_or_zeros(step.prompt_leaf)) prompts_mag += std::abs(v);
        CHECK(prompts_mag > 0.0);
        double adapter_mag = 0.0;
        for (const auto& leaves : step.adapter_leaves)
            for (double v : g.get_or_zeros(leaves.conv7)) adapter_mag += std::abs(v);
        CHECK(adapter_mag > 0.0);
        double bank_mag = 0.0;
        for (const auto& leaf : step.bank_leaves)
            for (double v : g.get_or_zeros(leaf)) bank_mag += std::abs(v);
        CHECK(bank_mag > 0.0);
    }
}

TEST_CASE("a view trained with group j leaves every other prompt group untouched") {
    TrainConfig cfg = micro_config();
    FewShotTask task = micro_task();
    TrainedState state = train(cfg, task);

    // single-view loss for group 0 only
    Tape tape;
    Tensor leaf = register_prompts(tape, state.prompts, true);
    Tensor img = tape.constant(task.train[0].image);
    Tensor z = state.encoders.image.encode(tape, img);
    std::vector<Tensor> sims;
    for (int k = 0; k < task.num_classes; ++k)
        sims.push_back(tape.cosine_sim(
            z, group_text_feature(tape, leaf, state.prompts, state.encoders.text,
                                  state.encoders.table, 0, k)));
    Tensor loss = tape.softmax_xent(tape.concat(sims, 0), task.train[0].label, cfg.tau);
    GradientMap g = tape.backward(loss);
    const auto gp = g.at(leaf);

    const std::size_t group_block = static_cast<std::size_t>(cfg.L) * cfg.M * cfg.dims.E;
    double g0 = 0.0;
    for (std::size_t i = 0; i < group_block; ++i) g0 += std::abs(gp[i]);
    CHECK(g0 > 0.0);
    for (std::size_t i = group_block; i < gp.size(); ++i) CHECK(gp[i] == 0.0);
}

TEST_CASE("end-to-end finite differences on the recorded step") {
    TrainConfig cfg = micro_config();
    cfg.sigma = 0.4;
    FewShotTask task = micro_task();
    TrainedState state = train(cfg, task);
    const std::vector<int> batch = {0, 1};

    Tape tape;
    StepRngs r;
    TrainStep step = record_step(tape, state, task, batch, r.aug, r.noise, r.prompt);
    GradientMap g = tape.backward(step.loss_main);

    // eps large enough that rounding noise through the deep composition does
    // not drown the near-zero gradients against the 1e-8 denominator floor
    const double eps = 1e-4;
    auto fd_against = [&](std::vector<double>& params, const std::vector<double>& analytic,
                          std::size_t stride) {
        for (std::size_t i = 0; i < params.size(); i += stride) {
            const double orig = params[i];
            params[i] = orig + eps;
            const double up = loss_main_at(state, task, batch);
            params[i] = orig - eps;
            const double dn = loss_main_at(state, task, batch);
            params[i] = orig;
            const double numeric = (up - dn) / (2.0 * eps);
            const double denom = std::max({1e-8, std::abs(numeric), std::abs(analytic[i])});
            CHECK(std::abs(numeric - analytic[i]) / denom < 1e-3);
        }
    };

    fd_against(state.prompts.values, g.get_or_zeros(step.prompt_leaf), 13);
    fd_against(state.adapters[0].conv7.values, g.get_or_zeros(step.adapter_leaves[0].conv7), 97);
    fd_against(state.adapters[1].conv3.values, g.get_or_zeros(step.adapter_leaves[1].conv3), 3);
}

TEST_CASE("predictor behavior") {
    TrainConfig cfg = micro_config();
    FewShotTask task = micro_task();
    TrainedState state = train(cfg, task);
    Predictor predictor(state);

    SUBCASE("probabilities form a distribution") {
        for (int i = 0; i < 4; ++i) {
            const auto p = predictor.predict(task.test[static_cast<std::size_t>(i)].image);
            double sum = 0.0;
            for (double v : p) {
                CHECK(v > 0.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
    SUBCASE("alpha zero reproduces the no-calibration predictor") {
        TrainedState zero_alpha = state;
        zero_alpha.config.alpha = 0.0;
        TrainedState off = state;
        off.config.enable_cmda = false;
        Predictor pa(zero_alpha), pb(off);
        for (int i = 0; i < 4; ++i) {
            const auto x = task.test[static_cast<std::size_t>(i)].image;
            const auto va = pa.predict(x), vb = pb.predict(x);
            for (std::size_t k = 0; k < va.size(); ++k)
                CHECK(va[k] == doctest::Approx(vb[k]).epsilon(1e-12));
        }
    }
    SUBCASE("temperature rescaling never changes the predicted class") {
        TrainedState hot = state;
        hot.config.tau = state.config.tau * 2.0;
        Predictor ph(hot);
        for (int i = 0; i < 6; ++i) {
            const auto x = task.test[static_cast<std::size_t>(i)].image;
            CHECK(predictor.predict_class(x) == ph.predict_class(x));
        }
    }
    SUBCASE("language prototypes replace the bank under the lp source") {
        TrainConfig lp_cfg = cfg;
        lp_cfg.prototype_source = PrototypeSource::lp;
        TrainedState lp_state = train(lp_cfg, task);
        Predictor lp_pred(lp_state);
        const auto protos = language_prototypes_plain(lp_state.prompts, lp_state.encoders.text,
                                                      lp_state.encoders.table);
        REQUIRE(lp_pred.class_prototypes().size() == protos.size());
        for (std::size_t k = 0; k < protos.size(); ++k)
            CHECK(lp_pred.class_prototypes()[k] == protos[k]);
        CHECK_FALSE(lp_state.bank.initialized());
    }
}

TEST_CASE("baseline variants strip the corresponding machinery") {
    TrainConfig cfg = micro_config();
    FewShotTask task = micro_task();

    TrainConfig base_cfg = cfg;
    base_cfg.enable_sa = false;
    base_cfg.enable_cmda = false;
    TrainedState base = train(base_cfg, task);
    CHECK(base.adapters.empty());
    CHECK_FALSE(base.bank.initialized());
    for (const auto& m : base.log) CHECK(m.loss_align == 0.0);

    TrainConfig sa_cfg = cfg;
    sa_cfg.enable_cmda = false;
    TrainedState sa_only = train(sa_cfg, task);
    CHECK(sa_only.adapters.size() == 2);
    CHECK_FALSE(sa_only.bank.initialized());
}
