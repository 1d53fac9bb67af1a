#pragma once
// Supervised pretraining of the proxy model, alternating selector/proxy
// optimization on precomputed components, and denoising inference.

#include "taskdenoise/decomposition.hpp"
#include "taskdenoise/nnet.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace tdn::train {

struct TrainConfig {
    nn::Arch arch = nn::Arch::BandPowerMLP;
    int epochs_pretrain = 50;
    int epochs_collab = 50;
    std::size_t batch_size = 32;
    double lr_selector = 0.001;
    double lr_proxy = 0.001;
    double clip_threshold = 1.0;
    double cosine_alpha = 0.9;
    double weight_decay = 1e-4;
    double max_norm = 2.0;
    // Selector bias right after pretraining; +2 gives p ~ 0.88.
    double selector_init_bias = 2.0;
    DecompConfig decomposition{};
    RngSeed seed{};
    // Collaborative stage only: whole set as one batch, fixed order, constant lr.
    bool full_batch_descent_mode = false;

    void validate() const;
    nn::AdamWConfig adamw() const;
};

enum class Stage { Pretrain, SelectorStep, ProxyStep };
std::string_view to_string(Stage s);

struct StepRecord {
    Stage stage;
    int epoch;
    std::int64_t step;
    double loss;  // batch mean before the update
    double lr_s;
    double lr_p;
    double grad_norm;  // before clipping

    bool operator==(const StepRecord&) const = default;
};

struct TrainHistory {
    std::vector<StepRecord> records;
    int best_epoch = -1;  // collab epoch of the returned checkpoint; 0 = right after pretraining
    double best_val_loss = 0.0;

    void write_csv(const std::filesystem::path& path) const;
    bool operator==(const TrainHistory&) const = default;
};

// Standardized log band powers are fitted on these trials (BandPowerMLP).
void fit_standardization(nn::ModelParams& p, const TrialSet& data);

struct TrainResult {
    nn::ModelParams params;
    TrainHistory history;
};

// Trains q and h_p by minibatch cross-entropy on raw trials. With a validation
// set, returns the parameters of the epoch with the lowest validation loss.
TrainResult pretrain(const TrialSet& data, const TrainConfig& cfg, const TrialSet* val = nullptr);

// Sets selector weights to small seeded uniform values and the bias to cfg.selector_init_bias.
void init_selector(nn::ModelParams& p, const TrainConfig& cfg);

// Components of one trial mapped through the parameter-free extractor stages.
struct PreparedTrial {
    int label = 0;
    std::vector<Mat> front;  // per component
    std::vector<Mat> code;   // per component
};

PreparedTrial prepare(const nn::ModelParams& p, const ComponentSet& cs, int label);
std::vector<PreparedTrial> prepare_all(const nn::ModelParams& p, const std::vector<ComponentSet>& cs,
                                       const std::vector<int>& labels);

// Collaborative objective: mean cross-entropy of h_p(q(sum_i p_i C_i)).
double collab_loss(const nn::ModelParams& p, const std::vector<const PreparedTrial*>& batch);
double collab_loss(const nn::ModelParams& p, const std::vector<PreparedTrial>& trials);

// Gradient of collab_loss for the blocks selected in which; frozen blocks still
// pass the chain rule (selector probabilities depend on q).
nn::Gradients collab_gradients(const nn::ModelParams& p, const std::vector<const PreparedTrial*>& batch,
                               std::array<bool, nn::kBlockCount> which, double* loss = nullptr);

struct CollabStepResult {
    double loss_before = 0.0;  // before step A
    double loss_mid = 0.0;     // after step A, before step B
    double loss_after = 0.0;   // after step B; NaN unless requested
    double grad_norm_selector = 0.0;
    double grad_norm_proxy = 0.0;
};

// Step A updates the selector with q and h_p frozen; step B recomputes the
// forward pass and updates q and h_p with the selector frozen.
CollabStepResult collab_step(nn::ModelParams& p, nn::OptimizerState& opt,
                             const std::vector<const PreparedTrial*>& batch, const TrainConfig& cfg, double lr_s,
                             double lr_p, bool want_loss_after);

// Pretrain, then collaborative epochs on precomputed components.
TrainResult train(const TrialSet& data, const std::vector<ComponentSet>& components, const TrainConfig& cfg,
                  const TrialSet* val = nullptr, const std::vector<ComponentSet>* val_components = nullptr);

// Decomposes every trial (seed derived per trial index) and trains.
TrainResult train(const TrialSet& data, const TrainConfig& cfg, const TrialSet* val = nullptr);

std::vector<ComponentSet> decompose_all(const TrialSet& data, const DecompConfig& cfg, RngSeed seed);

struct SelectionResult {
    std::vector<double> probabilities;
    std::vector<double> energies;
    Trial reconstructed;
};

std::vector<double> component_probabilities(const nn::ModelParams& p, const ComponentSet& cs);
std::vector<double> component_probabilities(const nn::ModelParams& p, const PreparedTrial& t);
SelectionResult select(const nn::ModelParams& p, const ComponentSet& cs);
SelectionResult denoise(const nn::ModelParams& p, const Trial& x, const DecompConfig& dcfg, RngSeed seed);

// Argmax of h_p(q(x)).
int predict(const nn::ModelParams& p, const Mat& x);

}  // namespace tdn::train
