// Command-line front end: training, evaluation, ablation sweeps, plan
// selection, oracle checks and artifact export over the synthetic few-shot
// benchmark. Configuration comes from a key=value file (see configs/) with
// per-flag overrides.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "sada/experiment.hpp"

using namespace sada;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;
    int shots = -1;
    int runs = -1;
};

HarnessConfig load_with_overrides(const CommonOpts& opts) {
    HarnessConfig cfg = opts.config_path.empty() ? HarnessConfig{}
                                                 : load_config_file(opts.config_path);
    if (opts.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.shots > 0) {
        cfg.data.shots = opts.shots;
        if (cfg.data.pool_per_class < opts.shots) cfg.data.pool_per_class = opts.shots * 2;
    }
    if (opts.runs > 0) cfg.runs = opts.runs;
    cfg.sync();
    cfg.train.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_runs = true) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override train seed");
    cmd->add_option("--shots", opts.shots, "override labeled images per class");
    if (with_runs) cmd->add_option("--runs", opts.runs, "override run count");
}

int cmd_train(const CommonOpts& opts) {
    HarnessConfig cfg = load_with_overrides(opts);
    std::filesystem::create_directories(opts.out_dir);
    SyntheticDataset data = generate_synthetic(cfg.data);
    FewShotTask task = sample_task(data, cfg.data.shots, cfg.train.seed);
    std::printf("training: K=%d shots=%d epochs=%d seed=%llu\n", cfg.data.num_classes,
                cfg.data.shots, cfg.train.epochs,
                static_cast<unsigned long long>(cfg.train.seed));
    TrainedState state = train(cfg.train, task);
    const double acc = Predictor(state).accuracy(task.test);
    std::printf("test accuracy: %.4f\n", acc);
    save_checkpoint(opts.out_dir + "/checkpoint.json", state, cfg);
    write_metrics_csv(opts.out_dir + "/metrics.csv", state.log);
    std::printf("wrote %s/checkpoint.json and metrics.csv\n", opts.out_dir.c_str());
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& out_dir) {
    Checkpoint cp = load_checkpoint(checkpoint_path);
    SyntheticDataset data = generate_synthetic(cp.harness.data);
    FewShotTask task = sample_task(data, cp.harness.data.shots, cp.harness.train.seed);

    // both inference uses of the averaged-adapter attention, side by side
    std::filesystem::create_directories(out_dir);
    CsvWriter csv(out_dir + "/eval.csv", {"inference_mode", "test_acc"});
    for (InferenceMode mode : {InferenceMode::modulate, InferenceMode::passthrough}) {
        TrainedState state = cp.state;
        state.config.inference_mode = mode;
        const double acc = Predictor(state).accuracy(task.test);
        std::printf("inference_mode=%s test accuracy: %.4f\n", inference_mode_name(mode), acc);
        csv.row({inference_mode_name(mode), CsvWriter::num(acc)});
    }
    return 0;
}

int cmd_ablate(const std::string& suite, const CommonOpts& opts) {
    HarnessConfig cfg = load_with_overrides(opts);
    const int shots_override = opts.shots > 0 ? opts.shots : -1;
    std::printf("suite %s -> %s/%s.csv\n", suite.c_str(), opts.out_dir.c_str(), suite.c_str());
    ablate(suite, cfg, opts.out_dir, shots_override);
    return 0;
}

int cmd_select_plan(const CommonOpts& opts, int j) {
    HarnessConfig cfg = load_with_overrides(opts);
    SyntheticDataset data = generate_synthetic(cfg.data);
    std::filesystem::create_directories(opts.out_dir);
    CsvWriter csv(opts.out_dir + "/select_plan.csv", {"plan", "val_acc"});

    // candidate plans are scored by validation accuracy of a full training run
    auto eval_fn = [&](const AugmentPlan& plan) {
        TrainConfig tc = cfg.train;
        tc.J = plan.size();
        tc.plan_kinds.clear();
        for (const auto& op : plan.ops) tc.plan_kinds.push_back(op.kind);
        FewShotTask task = sample_task(data, cfg.data.shots, tc.seed);
        TrainedState state = train(tc, task);
        const double acc = Predictor(state).accuracy(task.val);
        std::string name;
        for (const auto& op : plan.ops) {
            if (!name.empty()) name += "+";
            name += augment_kind_name(op.kind);
        }
        std::printf("  %-60s val_acc=%.4f\n", name.c_str(), acc);
        csv.row({name, CsvWriter::num(acc)});
        return acc;
    };
    AugmentPlan best = select_plan(full_pool(), j, eval_fn);
    std::string chosen;
    for (const auto& op : best.ops) {
        if (!chosen.empty()) chosen += ",";
        chosen += augment_kind_name(op.kind);
    }
    std::printf("selected plan (J=%d): %s\n", j, chosen.c_str());
    return 0;
}

int cmd_export(const std::string& checkpoint_path, const std::string& out_dir, int max_images) {
    Checkpoint cp = load_checkpoint(checkpoint_path);
    SyntheticDataset data = generate_synthetic(cp.harness.data);
    export_artifacts(cp.state, data, out_dir, max_images);
    FewShotTask task = sample_task(data, cp.harness.data.shots, cp.harness.train.seed);
    if (!cp.state.adapters.empty()) {
        AttackWeightStats stats = attack_weight_stats(cp.state, task.test);
        std::printf("mean attack weight: background %.4f vs foreground %.4f\n",
                    stats.background_mean, stats.foreground_mean);
    }
    std::printf("artifacts written to %s\n", out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"few-shot training with selective attack and cross-modal alignment"};
    app.require_subcommand(1);

    CommonOpts train_opts;
    train_opts.out_dir = "out/train";
    CLI::App* train_cmd = app.add_subcommand("train", "train one model and save a checkpoint");
    add_common(train_cmd, train_opts, false);

    std::string eval_ckpt = "out/train/checkpoint.json";
    std::string eval_out = "out/eval";
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on its test split");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file");
    eval_cmd->add_option("--out", eval_out, "output directory");

    CommonOpts ablate_opts;
    ablate_opts.out_dir = "out/ablate";
    std::string suite;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run one ablation suite");
    ablate_cmd->add_option("suite", suite, "one of: sa_cmda loss_kind aug_count sigma_sweep "
                                           "alpha_sweep sa_position prototype_source "
                                           "prompt_diversity")
        ->required();
    add_common(ablate_cmd, ablate_opts);

    CommonOpts plan_opts;
    plan_opts.out_dir = "out/select_plan";
    int plan_j = 4;
    CLI::App* plan_cmd = app.add_subcommand("select-plan",
                                            "search augmentation subsets by validation accuracy");
    add_common(plan_cmd, plan_opts, false);
    plan_cmd->add_option("--j", plan_j, "operations per plan");

    CLI::App* oracle_cmd = app.add_subcommand("oracle-check",
                                              "verify the transport bound against exact oracles");

    std::string export_ckpt = "out/train/checkpoint.json";
    std::string export_out = "out/export";
    int export_max = 16;
    CLI::App* export_cmd = app.add_subcommand("export", "dump attention maps and feature csv files");
    export_cmd->add_option("--checkpoint", export_ckpt, "checkpoint file");
    export_cmd->add_option("--out", export_out, "output directory");
    export_cmd->add_option("--max-images", export_max, "attention maps to export");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_opts);
        if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_out);
        if (ablate_cmd->parsed()) return cmd_ablate(suite, ablate_opts);
        if (plan_cmd->parsed()) return cmd_select_plan(plan_opts, plan_j);
        if (oracle_cmd->parsed()) return oracle_check(true) ? 0 : 1;
        if (export_cmd->parsed()) return cmd_export(export_ckpt, export_out, export_max);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
