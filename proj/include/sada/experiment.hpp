#pragma once

#include <string>
#include <vector>

#include "sada/io.hpp"

namespace sada {

struct ExperimentResult {
    std::string digest;
    std::vector<double> run_accuracies;
    double mean_acc = 0.0;
    double std_acc = 0.0;
    double wall_seconds = 0.0;
};

// Trains `runs` times; run r re-samples the N-shot set with seed
// train.seed + r and trains with that same seed. Runs are independent and
// execute in parallel when OpenMP has threads to spare.
ExperimentResult run_experiment(const HarnessConfig& config);

// Convenience: one run end to end, returning the trained state.
TrainedState run_single(const HarnessConfig& config, TrainedState* out_state = nullptr);

// --------------------------------------------------------------- ablations

// Fixed CSV schema shared by the sweep suites:
//   suite,variant,shots,runs,mean_acc,std_acc,run_accs,wall_s
// The prompt_diversity suite instead mirrors the group-mean table:
//   variant,run,mean_g1,mean_g2,mean_g3,mean_g4,std
extern const std::vector<std::string> kSweepHeader;
extern const std::vector<std::string> kDiversityHeader;

struct AblateRow {
    std::vector<std::string> cells;
};

std::vector<std::string> ablate_suites();

// Runs one suite and writes <out_dir>/<suite>.csv. shots_override < 0 keeps
// the suite's own shot settings.
std::vector<AblateRow> ablate(const std::string& suite, const HarnessConfig& base,
                              const std::string& out_dir, int shots_override = -1);

// --------------------------------------------------------------- exports

// Kernelized attention maps (pgm + csv) for the first images of the test
// split, plus full feature dumps for external plotting.
void export_artifacts(const TrainedState& state, const SyntheticDataset& data,
                      const std::string& out_dir, int max_attention_images = 16);

// Mean kernelized attack weight over background vs foreground pixels of a
// split, judged with the ground-truth masks.
struct AttackWeightStats {
    double background_mean = 0.0;
    double foreground_mean = 0.0;
};
AttackWeightStats attack_weight_stats(const TrainedState& state,
                                      const std::vector<LabeledImage>& items);

// --------------------------------------------------------------- oracles

// Property battery over the transport bound and its oracles; prints one line
// per check and returns overall success.
bool oracle_check(bool verbose = true);

}  // namespace sada
