#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sada/align.hpp"
#include "sada/attack.hpp"
#include "sada/augment.hpp"
#include "sada/encoders.hpp"
#include "sada/prompt.hpp"

namespace sada {

enum class LossKind { emd, mmd, js };
LossKind loss_kind_from_name(const std::string& name);
const char* loss_kind_name(LossKind kind);

enum class PrototypeSource { vlp, lp };
PrototypeSource prototype_source_from_name(const std::string& name);
const char* prototype_source_name(PrototypeSource source);

struct TrainConfig {
    double alpha = 0.1;    // distribution calibration ratio
    double sigma = 0.7;    // attack noise std
    double tau = 0.01;     // softmax temperature
    double lr_main = 0.001;
    double lr_emd = 0.01;
    int epochs = 50;       // epoch 1 is the warmup
    int image_batch = 20;  // raw images per step, each expanded into J views
    int prompt_batch = 4;  // prompts sampled per group per step
    int J = 4;
    int L = 8;
    int M = 16;
    EncoderDims dims;      // H, W, C, E, D, blocks
    std::uint64_t seed = 1;
    std::uint64_t encoder_seed = 7;  // fixed across runs of one experiment
    int sa_position = 0;             // 0 = input, b = after encoder block b
    TokenPosition token_position = TokenPosition::end;
    InferenceMode inference_mode = InferenceMode::modulate;
    LossKind loss_kind = LossKind::emd;
    PrototypeSource prototype_source = PrototypeSource::vlp;
    bool enable_sa = true;
    bool enable_cmda = true;
    bool augment_images = true;          // off reduces every view to the raw image
    bool lang_stats_per_group = false;   // pooled J*L language stats by default
    std::vector<AugmentKind> plan_kinds; // empty -> plan_for_group_count(J)

    void validate() const;
};

// The reported best subsets per group count: {flip}, {flip, random_gray},
// the default four, or the whole pool; other counts take a pool prefix.
AugmentPlan plan_for_group_count(int j);

struct LabeledImage {
    Tensor image;            // H x W x C
    int label = 0;
    std::vector<char> mask;  // H*W foreground flags; empty when unknown
};

struct FewShotTask {
    int num_classes = 0;
    int shots = 0;
    std::vector<LabeledImage> train;  // shots * num_classes
    std::vector<LabeledImage> val;
    std::vector<LabeledImage> test;
};

struct EpochMetrics {
    int epoch = 0;
    double loss_main = 0.0;
    double loss_align = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct TrainedState {
    TrainConfig config;
    int num_classes = 0;
    Encoders encoders;
    PromptCollection prompts;
    std::vector<AdapterGroup> adapters;  // J groups; empty without SA
    VlpBank bank;                        // initialized iff epoch 2 was reached with CMDA
    AugmentPlan plan;
    std::vector<EpochMetrics> log;
    double align_bound_at_init = 0.0;  // sum_k bound right after VLP init

    bool trained() const { return !log.empty(); }
};

double cosine_lr(int step, int total_steps, double lr0);

TrainedState train(const TrainConfig& config, const FewShotTask& task);

// Sum over classes of the transport upper bound between the bank's vision
// statistics and the current language statistics.
double align_bound(const TrainedState& state);

// One recorded training step, exposed so tests can inspect the gradient
// routing on the shared tape.
struct TrainStep {
    Tensor prompt_leaf;
    std::vector<AdapterLeaves> adapter_leaves;
    std::vector<Tensor> bank_leaves;  // one (N*J) x D leaf per class
    Tensor loss_main;
    std::optional<Tensor> loss_align;  // emd objective only
};
TrainStep record_step(Tape& tape, const TrainedState& state, const FewShotTask& task,
                      const std::vector<int>& image_indices, Rng& aug_rng, Rng& noise_rng,
                      Rng& prompt_rng);

// Inference path with per-evaluation caches: averaged adapters, language
// prototypes over the full collection, class prototype matrix.
class Predictor {
public:
    explicit Predictor(const TrainedState& state);

    std::vector<double> predict(const Tensor& image) const;  // probabilities, sum 1
    int predict_class(const Tensor& image) const;
    double accuracy(const std::vector<LabeledImage>& items) const;

    // image feature after the inference transform, before calibration
    std::vector<double> image_feature(const Tensor& image) const;
    const std::vector<std::vector<double>>& class_prototypes() const { return prototypes_; }

private:
    const TrainedState& state_;
    std::optional<AdapterGroup> adapter_avg_;
    std::vector<std::vector<double>> text_features_;  // K x D, full collection
    std::vector<std::vector<double>> prototypes_;     // K x D, vlp or lp per config
};

std::vector<double> predict(const TrainedState& state, const Tensor& image);

}  // namespace sada
