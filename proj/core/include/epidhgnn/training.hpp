#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "epidhgnn/hypergraph.hpp"
#include "epidhgnn/model.hpp"
#include "epidhgnn/rng.hpp"

namespace epidhgnn {

enum class Task { Detect, Forecast };

/// How forecast labels are read off X^(ks+1:ps): positive when infected at
/// any horizon timestep (default) or exactly at ps.
enum class ForecastLabelMode { AnyInWindow, AtPs };

struct TrainConfig {
    double learning_rate = 0.01;
    double weight_decay = 1e-4;
    double clip_norm = 5.0;
    int max_epochs = 100;
    int patience = 10;
    double alpha = 0.7;  // Eq. 7 weight; 1 disables the pattern module
    int hidden_dim = 32;
    int kernel_width = 3;
    int num_layers = 2;
    int mlp_hidden = 0;  // 0 = hidden_dim
    Task task = Task::Detect;
    TimeSplit split;
    std::uint64_t seed = 0;
    double negative_ratio = 1.0;
    ForecastLabelMode forecast_label_mode = ForecastLabelMode::AnyInWindow;

    ModelConfig modelConfig() const;
    void validate() const;
};

/// Overlays values from a JSON config file onto `base`; unknown keys are
/// rejected, every key is optional.
TrainConfig loadTrainConfig(const std::filesystem::path& path, TrainConfig base);

/// One simulated outbreak over the shared hypergraph.
struct Episode {
    StateSequence states;
    std::vector<int> sources;
};

struct EpisodeSplit {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;

    void validate(int num_episodes) const;
    /// Deterministic 70/15/15 split by episode order (validation and test get
    /// at least one episode each; requires >= 3 episodes).
    static EpisodeSplit fractions(int num_episodes);
};

struct LossResult {
    double value = 0.0;
    Eigen::VectorXd grad;  // with respect to the scores
};

/// Weighted binary cross-entropy with w1 = |V|/|pos| and w0 = |V|/|neg|;
/// scores clamped to [1e-12, 1 - 1e-12]. Requires both classes present.
LossResult detectionLoss(const Eigen::VectorXd& scores, std::span<const std::uint8_t> labels);

/// Plain mean binary cross-entropy with the same clamping.
LossResult forecastLoss(const Eigen::VectorXd& probs, std::span<const std::uint8_t> labels);

/// Mean binary cross-entropy over a sampled pattern batch; empty batch is an
/// error.
LossResult patternLoss(const Eigen::VectorXd& scores, std::span<const std::uint8_t> labels);

/// alpha * task + (1 - alpha) * pattern.
double combinedLoss(double task_loss, double pattern_loss, double alpha);

/// Labeled (individual, location) pairs for reconstructing frame
/// t0 + kernel_width - 1: every incidence of that frame as a positive plus
/// ratio x as many uniform non-incident negatives (without replacement).
struct PatternBatch {
    int window_begin = 0;  // t0
    std::vector<std::pair<int, int>> pairs;
    std::vector<std::uint8_t> labels;
    bool negatives_truncated = false;  // fewer non-incident pairs than requested
};

PatternBatch samplePatternBatch(const DynamicHypergraph& hypergraph, int window_begin,
                                int kernel_width, double negative_ratio, Rng& rng);

struct AdamState {
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    long step = 0;

    static AdamState zeros(Eigen::Index size);
};

/// Global-norm clipping, then decoupled weight decay, then the standard
/// bias-corrected moment update (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
/// Throws on non-finite gradients.
void adamStep(Eigen::VectorXd& params, Eigen::VectorXd grads, AdamState& state, double learning_rate,
              double weight_decay, double clip_norm);

std::vector<std::uint8_t> detectionLabels(int num_individuals, std::span<const int> sources);
std::vector<std::uint8_t> forecastLabels(const StateSequence& states, const TimeSplit& split,
                                         ForecastLabelMode mode);

/// Precomputed per-timestep structures for the observation window [0, ks].
std::vector<TimestepStructure> buildWindowStructures(const DynamicHypergraph& hypergraph, int ks);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_metric = 0.0;
};

struct TrainResult {
    ModelParams params;  // checkpoint with the lowest validation loss
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    bool pattern_negatives_warning = false;
};

/// Full training protocol: per epoch, iterate training episodes computing the
/// combined loss (one freshly sampled pattern window per episode when
/// alpha < 1) and update with Adam; validation loss is the task loss over the
/// validation episodes; keep the best checkpoint; stop at max_epochs or when
/// the validation loss fails to improve for max(patience, 1) consecutive
/// epochs. Deterministic given the config seed.
TrainResult train(const DynamicHypergraph& hypergraph, std::span<const Episode> episodes,
                  const EpisodeSplit& split, const TrainConfig& config);

/// Task metric on a set of episodes: mean MRR over episodes for detection,
/// pooled AUROC for forecasting (0.5 when the pooled labels are single-class).
double taskMetric(const ModelParams& params, const DynamicHypergraph& hypergraph,
                  std::span<const Episode> episodes, std::span<const int> episode_ids,
                  const TrainConfig& config);

/// Grid-search axes (Cartesian product; every axis must be non-empty).
struct GridAxes {
    std::vector<int> hidden_dim;
    std::vector<double> learning_rate;
    std::vector<double> weight_decay;
    std::vector<int> kernel_width;
    std::vector<double> alpha;

    static GridAxes fromJsonFile(const std::filesystem::path& path);
    void validate() const;
};

/// Deterministic enumeration order: hidden_dim, learning_rate, weight_decay,
/// kernel_width, alpha (outer to inner).
std::vector<TrainConfig> enumerateGrid(const TrainConfig& base, const GridAxes& axes);

struct TrialResult {
    TrainConfig config;
    double val_metric = 0.0;
    double val_loss = 0.0;
    int best_epoch = 0;
};

/// Index of the winning trial: highest validation metric, ties broken by
/// smaller hidden dimension, then lower learning rate, then enumeration order.
std::size_t bestTrialIndex(std::span<const TrialResult> trials);

/// Convenience single-process grid search.
std::vector<TrialResult> gridSearch(const DynamicHypergraph& hypergraph,
                                    std::span<const Episode> episodes, const EpisodeSplit& split,
                                    const TrainConfig& base, const GridAxes& axes);

}  // namespace epidhgnn
