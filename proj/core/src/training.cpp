#include "epidhgnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "epidhgnn/errors.hpp"
#include "epidhgnn/metrics.hpp"

namespace epidhgnn {

namespace {

using nlohmann::json;

constexpr double kProbEps = 1e-12;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double clampProb(double p) { return std::min(std::max(p, kProbEps), 1.0 - kProbEps); }

// Shared weighted-BCE core. Gradient is zero in the clamped (flat) regions.
LossResult weightedBce(const Eigen::VectorXd& scores, std::span<const std::uint8_t> labels,
                       double w_pos, double w_neg) {
    const auto n = scores.size();
    LossResult out;
    out.grad = Eigen::VectorXd::Zero(n);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool y = labels[static_cast<std::size_t>(i)] != 0;
        const double s = clampProb(scores[i]);
        const bool flat = scores[i] < kProbEps || scores[i] > 1.0 - kProbEps;
        if (y) {
            sum += w_pos * std::log(s);
            if (!flat) out.grad[i] = -w_pos / (s * static_cast<double>(n));
        } else {
            sum += w_neg * std::log(1.0 - s);
            if (!flat) out.grad[i] = w_neg / ((1.0 - s) * static_cast<double>(n));
        }
    }
    out.value = -sum / static_cast<double>(n);
    return out;
}

}  // namespace

ModelConfig TrainConfig::modelConfig() const {
    ModelConfig mc;
    mc.input_dim = 3;
    mc.hidden_dim = hidden_dim;
    mc.num_layers = num_layers;
    mc.kernel_width = kernel_width;
    mc.mlp_hidden = mlp_hidden > 0 ? mlp_hidden : hidden_dim;
    return mc;
}

void TrainConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (patience < 0) throw ConfigError("patience must be nonnegative");
    if (patience > max_epochs) throw ConfigError("patience must not exceed max_epochs");
    if (negative_ratio <= 0.0) throw ConfigError("negative_ratio must be positive");
    if (!(0 <= split.tsh && split.tsh <= split.ks && split.ks <= split.ps)) {
        throw ConfigError("time split must satisfy 0 <= tsh <= ks <= ps");
    }
    modelConfig().validate();
}

TrainConfig loadTrainConfig(const std::filesystem::path& path, TrainConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path.string() + ": expected a JSON object");

    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "learning_rate") base.learning_rate = value.get<double>();
            else if (key == "weight_decay") base.weight_decay = value.get<double>();
            else if (key == "clip_norm") base.clip_norm = value.get<double>();
            else if (key == "max_epochs") base.max_epochs = value.get<int>();
            else if (key == "patience") base.patience = value.get<int>();
            else if (key == "alpha") base.alpha = value.get<double>();
            else if (key == "hidden_dim") base.hidden_dim = value.get<int>();
            else if (key == "kernel_width") base.kernel_width = value.get<int>();
            else if (key == "num_layers") base.num_layers = value.get<int>();
            else if (key == "mlp_hidden") base.mlp_hidden = value.get<int>();
            else if (key == "negative_ratio") base.negative_ratio = value.get<double>();
            else if (key == "tsh") base.split.tsh = value.get<int>();
            else if (key == "ks") base.split.ks = value.get<int>();
            else if (key == "ps") base.split.ps = value.get<int>();
            else if (key == "seed") base.seed = value.get<std::uint64_t>();
            else if (key == "task") {
                const auto t = value.get<std::string>();
                if (t == "detect") base.task = Task::Detect;
                else if (t == "forecast") base.task = Task::Forecast;
                else throw ConfigError(path.string() + ": task must be 'detect' or 'forecast'");
            } else if (key == "forecast_label_mode") {
                const auto m = value.get<std::string>();
                if (m == "any_in_window") base.forecast_label_mode = ForecastLabelMode::AnyInWindow;
                else if (m == "at_ps") base.forecast_label_mode = ForecastLabelMode::AtPs;
                else throw ConfigError(path.string() + ": forecast_label_mode must be 'any_in_window' or 'at_ps'");
            } else {
                throw ConfigError(path.string() + ": unknown key '" + key + "'");
            }
        } catch (const json::exception& e) {
            throw ConfigError(path.string() + ": key '" + key + "': " + e.what());
        }
    }
    return base;
}

void EpisodeSplit::validate(int num_episodes) const {
    if (val.empty() || test.empty()) {
        throw ConfigError("episode split requires non-empty validation and test sets");
    }
    if (train.empty()) throw ConfigError("episode split requires a non-empty training set");
    std::vector<bool> seen(static_cast<std::size_t>(num_episodes), false);
    auto mark = [&](std::span<const int> ids) {
        for (const int id : ids) {
            if (id < 0 || id >= num_episodes) {
                throw ConfigError("episode id " + std::to_string(id) + " outside [0, " +
                                  std::to_string(num_episodes) + ")");
            }
            if (seen[static_cast<std::size_t>(id)]) {
                throw ConfigError("episode id " + std::to_string(id) + " appears in two split parts");
            }
            seen[static_cast<std::size_t>(id)] = true;
        }
    };
    mark(train);
    mark(val);
    mark(test);
    for (int i = 0; i < num_episodes; ++i) {
        if (!seen[static_cast<std::size_t>(i)]) {
            throw ConfigError("episode id " + std::to_string(i) + " missing from the split");
        }
    }
}

EpisodeSplit EpisodeSplit::fractions(int num_episodes) {
    if (num_episodes < 3) {
        throw ConfigError("need at least 3 episodes for a train/val/test split; got " +
                          std::to_string(num_episodes));
    }
    const int n_val = std::max(1, static_cast<int>(std::lround(0.15 * num_episodes)));
    const int n_test = std::max(1, static_cast<int>(std::lround(0.15 * num_episodes)));
    const int n_train = num_episodes - n_val - n_test;
    EpisodeSplit split;
    for (int i = 0; i < n_train; ++i) split.train.push_back(i);
    for (int i = n_train; i < n_train + n_val; ++i) split.val.push_back(i);
    for (int i = n_train + n_val; i < num_episodes; ++i) split.test.push_back(i);
    split.validate(num_episodes);
    return split;
}

LossResult detectionLoss(const Eigen::VectorXd& scores, std::span<const std::uint8_t> labels) {
    if (static_cast<std::size_t>(scores.size()) != labels.size()) {
        throw ConfigError("detection loss: scores and labels length mismatch");
    }
    const auto n = static_cast<double>(labels.size());
    double num_pos = 0;
    for (const auto y : labels) num_pos += y != 0 ? 1 : 0;
    const double num_neg = n - num_pos;
    if (num_pos == 0 || num_neg == 0) {
        throw ConfigError("detection loss requires at least one positive and one negative label");
    }
    return weightedBce(scores, labels, n / num_pos, n / num_neg);
}

LossResult forecastLoss(const Eigen::VectorXd& probs, std::span<const std::uint8_t> labels) {
    if (static_cast<std::size_t>(probs.size()) != labels.size()) {
        throw ConfigError("forecast loss: probs and labels length mismatch");
    }
    if (labels.empty()) throw ConfigError("forecast loss: empty batch");
    return weightedBce(probs, labels, 1.0, 1.0);
}

LossResult patternLoss(const Eigen::VectorXd& scores, std::span<const std::uint8_t> labels) {
    if (static_cast<std::size_t>(scores.size()) != labels.size()) {
        throw ConfigError("pattern loss: scores and labels length mismatch");
    }
    if (labels.empty()) throw ConfigError("pattern loss: empty batch");
    return weightedBce(scores, labels, 1.0, 1.0);
}

double combinedLoss(double task_loss, double pattern_loss, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
    if (alpha == 1.0) return task_loss;  // bit-exact reduction to the task loss
    return alpha * task_loss + (1.0 - alpha) * pattern_loss;
}

PatternBatch samplePatternBatch(const DynamicHypergraph& hypergraph, int window_begin,
                                int kernel_width, double negative_ratio, Rng& rng) {
    if (kernel_width < 2) throw ConfigError("pattern sampling requires kernel_width >= 2");
    const int target = window_begin + kernel_width - 1;
    if (window_begin < 0 || target >= hypergraph.numTimesteps()) {
        throw ConfigError("pattern window start " + std::to_string(window_begin) +
                          " puts the target frame " + std::to_string(target) + " outside [0, " +
                          std::to_string(hypergraph.numTimesteps()) + ")");
    }
    if (negative_ratio <= 0.0) throw ConfigError("negative_ratio must be positive");

    const auto n = static_cast<std::int64_t>(hypergraph.numIndividuals());
    const auto e = static_cast<std::int64_t>(hypergraph.numLocations());

    PatternBatch batch;
    batch.window_begin = window_begin;
    std::unordered_set<std::int64_t> incident;
    for (const Contact& c : hypergraph.frame(target)) {
        batch.pairs.emplace_back(c.individual, c.location);
        batch.labels.push_back(1);
        incident.insert(static_cast<std::int64_t>(c.individual) * e + c.location);
    }
    const auto num_pos = static_cast<std::int64_t>(batch.pairs.size());
    const std::int64_t available = n * e - num_pos;
    std::int64_t requested = static_cast<std::int64_t>(std::llround(negative_ratio * static_cast<double>(num_pos)));

    if (requested > available) {
        batch.negatives_truncated = true;
        requested = available;
    }
    if (requested <= 0) return batch;

    if (requested * 2 >= available) {
        // Dense frame: enumerate all non-incident pairs and take a random prefix.
        std::vector<std::pair<int, int>> pool;
        pool.reserve(static_cast<std::size_t>(available));
        for (std::int64_t v = 0; v < n; ++v) {
            for (std::int64_t loc = 0; loc < e; ++loc) {
                if (!incident.contains(v * e + loc)) {
                    pool.emplace_back(static_cast<int>(v), static_cast<int>(loc));
                }
            }
        }
        rng.shuffle(pool);
        for (std::int64_t i = 0; i < requested; ++i) {
            batch.pairs.push_back(pool[static_cast<std::size_t>(i)]);
            batch.labels.push_back(0);
        }
    } else {
        std::unordered_set<std::int64_t> drawn;
        while (static_cast<std::int64_t>(drawn.size()) < requested) {
            const auto v = rng.uniformInt(0, n - 1);
            const auto loc = rng.uniformInt(0, e - 1);
            const std::int64_t key = v * e + loc;
            if (incident.contains(key) || drawn.contains(key)) continue;
            drawn.insert(key);
            batch.pairs.emplace_back(static_cast<int>(v), static_cast<int>(loc));
            batch.labels.push_back(0);
        }
    }
    return batch;
}

AdamState AdamState::zeros(Eigen::Index size) {
    AdamState s;
    s.first_moment = Eigen::VectorXd::Zero(size);
    s.second_moment = Eigen::VectorXd::Zero(size);
    return s;
}

void adamStep(Eigen::VectorXd& params, Eigen::VectorXd grads, AdamState& state, double learning_rate,
              double weight_decay, double clip_norm) {
    if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
        throw RuntimeError("adam: parameter, gradient, and state sizes must match");
    }
    if (!grads.allFinite()) {
        throw RuntimeError("non-finite gradient encountered; aborting the epoch");
    }
    if (clip_norm > 0.0) {
        const double norm = grads.norm();
        if (norm > clip_norm) grads *= clip_norm / norm;
    }
    if (weight_decay > 0.0) {
        params -= learning_rate * weight_decay * params;
    }
    state.step += 1;
    state.first_moment = kAdamBeta1 * state.first_moment + (1.0 - kAdamBeta1) * grads;
    state.second_moment =
        kAdamBeta2 * state.second_moment + (1.0 - kAdamBeta2) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    const Eigen::VectorXd m_hat = state.first_moment / bc1;
    const Eigen::VectorXd v_hat = state.second_moment / bc2;
    params -= learning_rate * (m_hat.array() / (v_hat.array().sqrt() + kAdamEps)).matrix();
}

std::vector<std::uint8_t> detectionLabels(int num_individuals, std::span<const int> sources) {
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(num_individuals), 0);
    for (const int s : sources) labels[static_cast<std::size_t>(s)] = 1;
    return labels;
}

std::vector<std::uint8_t> forecastLabels(const StateSequence& states, const TimeSplit& split,
                                         ForecastLabelMode mode) {
    split.validate(states.numTimesteps());
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(states.numIndividuals()), 0);
    for (int v = 0; v < states.numIndividuals(); ++v) {
        if (mode == ForecastLabelMode::AtPs) {
            labels[static_cast<std::size_t>(v)] = states.at(split.ps, v) == SirState::Infected ? 1 : 0;
        } else {
            for (int t = split.ks + 1; t <= split.ps; ++t) {
                if (states.at(t, v) == SirState::Infected) {
                    labels[static_cast<std::size_t>(v)] = 1;
                    break;
                }
            }
        }
    }
    return labels;
}

std::vector<TimestepStructure> buildWindowStructures(const DynamicHypergraph& hypergraph, int ks) {
    if (ks < 0 || ks >= hypergraph.numTimesteps()) {
        throw ConfigError("ks=" + std::to_string(ks) + " outside [0, " +
                          std::to_string(hypergraph.numTimesteps()) + ")");
    }
    std::vector<TimestepStructure> frames;
    frames.reserve(static_cast<std::size_t>(ks) + 1);
    for (int t = 0; t <= ks; ++t) {
        frames.push_back(TimestepStructure::from(hypergraph.incidence(t)));
    }
    return frames;
}

namespace {

struct EpisodeData {
    StateSequence masked;
    std::vector<std::uint8_t> task_labels;
};

LossResult taskLossFor(Task task, const Eigen::VectorXd& scores,
                       std::span<const std::uint8_t> labels) {
    return task == Task::Detect ? detectionLoss(scores, labels) : forecastLoss(scores, labels);
}

Eigen::VectorXd taskScores(const ForwardResult& fwd, Task task) {
    return task == Task::Detect ? fwd.detect_scores : fwd.forecast_probs;
}

ForwardOptions taskOptions(Task task, const PatternQuery* pattern) {
    ForwardOptions opts;
    opts.detect = task == Task::Detect;
    opts.forecast = task == Task::Forecast;
    opts.pattern = pattern;
    return opts;
}

}  // namespace

TrainResult train(const DynamicHypergraph& hypergraph, std::span<const Episode> episodes,
                  const EpisodeSplit& split, const TrainConfig& config) {
    config.validate();
    split.validate(static_cast<int>(episodes.size()));
    config.split.validate(hypergraph.numTimesteps());
    const bool use_pattern = config.alpha < 1.0;
    if (use_pattern && config.kernel_width < 2) {
        throw ConfigError("alpha < 1 requires kernel_width >= 2 for the pattern window");
    }
    if (use_pattern && config.split.ks - config.kernel_width + 1 < 0) {
        throw ConfigError("observation window too short for a pattern window of width kernel_width - 1");
    }

    const auto frames = buildWindowStructures(hypergraph, config.split.ks);

    std::vector<EpisodeData> data;
    data.reserve(episodes.size());
    for (const Episode& ep : episodes) {
        EpisodeData d;
        d.masked = maskStates(ep.states, config.split);
        d.task_labels = config.task == Task::Detect
                            ? detectionLabels(hypergraph.numIndividuals(), ep.sources)
                            : forecastLabels(ep.states, config.split, config.forecast_label_mode);
        data.push_back(std::move(d));
    }

    const Rng root(config.seed);
    ModelParams params(config.modelConfig());
    params.initialize(root.stream("init"));
    AdamState adam = AdamState::zeros(params.values().size());

    TrainResult result{params, {}, 0, std::numeric_limits<double>::infinity(), false};
    int non_improving = 0;
    const int stop_after = std::max(config.patience, 1);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        Rng epoch_rng = root.stream("sampling", static_cast<std::uint64_t>(epoch));
        double train_loss_sum = 0.0;

        for (const int ep_id : split.train) {
            const EpisodeData& d = data[static_cast<std::size_t>(ep_id)];

            PatternQuery query;
            PatternBatch batch;
            if (use_pattern) {
                Rng ep_rng = epoch_rng.stream("episode", static_cast<std::uint64_t>(ep_id));
                const int t0 = static_cast<int>(
                    ep_rng.uniformInt(0, config.split.ks - config.kernel_width + 1));
                batch = samplePatternBatch(hypergraph, t0, config.kernel_width,
                                           config.negative_ratio, ep_rng);
                result.pattern_negatives_warning |= batch.negatives_truncated;
                query.window_begin = t0;
                query.pairs = batch.pairs;
            }

            const ForwardOptions opts = taskOptions(config.task, use_pattern ? &query : nullptr);
            const ForwardResult fwd = forward(frames, d.masked, config.split.tsh, params, opts);

            const LossResult task_loss = taskLossFor(config.task, taskScores(fwd, config.task),
                                                     d.task_labels);
            LossResult pat_loss;
            if (use_pattern) pat_loss = patternLoss(fwd.pattern_scores, batch.labels);
            train_loss_sum += combinedLoss(task_loss.value, pat_loss.value, config.alpha);

            BackwardSignal signal;
            if (config.task == Task::Detect) signal.d_detect_scores = config.alpha * task_loss.grad;
            else signal.d_forecast_probs = config.alpha * task_loss.grad;
            if (use_pattern) signal.d_pattern_scores = (1.0 - config.alpha) * pat_loss.grad;

            const Eigen::VectorXd grads = backward(fwd, frames, params, signal);
            adamStep(params.values(), grads, adam, config.learning_rate, config.weight_decay,
                     config.clip_norm);
        }

        double val_loss_sum = 0.0;
        for (const int ep_id : split.val) {
            const EpisodeData& d = data[static_cast<std::size_t>(ep_id)];
            const ForwardOptions opts = taskOptions(config.task, nullptr);
            const ForwardResult fwd = forward(frames, d.masked, config.split.tsh, params, opts);
            val_loss_sum +=
                taskLossFor(config.task, taskScores(fwd, config.task), d.task_labels).value;
        }
        const double val_loss = val_loss_sum / static_cast<double>(split.val.size());
        const double val_metric = taskMetric(params, hypergraph, episodes, split.val, config);

        result.log.push_back(EpochLog{epoch, train_loss_sum / static_cast<double>(split.train.size()),
                                      val_loss, val_metric});

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            result.params = params;
            non_improving = 0;
        } else {
            non_improving += 1;
            if (non_improving >= stop_after) break;
        }
    }
    return result;
}

double taskMetric(const ModelParams& params, const DynamicHypergraph& hypergraph,
                  std::span<const Episode> episodes, std::span<const int> episode_ids,
                  const TrainConfig& config) {
    const auto frames = buildWindowStructures(hypergraph, config.split.ks);
    if (config.task == Task::Detect) {
        double sum = 0.0;
        for (const int id : episode_ids) {
            const Episode& ep = episodes[static_cast<std::size_t>(id)];
            const StateSequence masked = maskStates(ep.states, config.split);
            const ForwardResult fwd =
                forward(frames, masked, config.split.tsh, params, taskOptions(Task::Detect, nullptr));
            sum += mrr(fwd.detect_scores, ep.sources);
        }
        return sum / static_cast<double>(episode_ids.size());
    }

    std::vector<double> pooled_probs;
    std::vector<std::uint8_t> pooled_labels;
    for (const int id : episode_ids) {
        const Episode& ep = episodes[static_cast<std::size_t>(id)];
        const StateSequence masked = maskStates(ep.states, config.split);
        const ForwardResult fwd =
            forward(frames, masked, config.split.tsh, params, taskOptions(Task::Forecast, nullptr));
        const auto labels = forecastLabels(ep.states, config.split, config.forecast_label_mode);
        for (Eigen::Index v = 0; v < fwd.forecast_probs.size(); ++v) {
            pooled_probs.push_back(fwd.forecast_probs[v]);
            pooled_labels.push_back(labels[static_cast<std::size_t>(v)]);
        }
    }
    const bool has_pos = std::find(pooled_labels.begin(), pooled_labels.end(), 1) != pooled_labels.end();
    const bool has_neg = std::find(pooled_labels.begin(), pooled_labels.end(), 0) != pooled_labels.end();
    if (!has_pos || !has_neg) return 0.5;  // uninformative on single-class pools
    const Eigen::VectorXd probs = Eigen::Map<Eigen::VectorXd>(
        pooled_probs.data(), static_cast<Eigen::Index>(pooled_probs.size()));
    return auroc(probs, pooled_labels);
}

GridAxes GridAxes::fromJsonFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    GridAxes axes;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "hidden_dim") axes.hidden_dim = value.get<std::vector<int>>();
            else if (key == "learning_rate") axes.learning_rate = value.get<std::vector<double>>();
            else if (key == "weight_decay") axes.weight_decay = value.get<std::vector<double>>();
            else if (key == "kernel_width") axes.kernel_width = value.get<std::vector<int>>();
            else if (key == "alpha") axes.alpha = value.get<std::vector<double>>();
            else throw ConfigError(path.string() + ": unknown axis '" + key + "'");
        } catch (const json::exception& e) {
            throw ConfigError(path.string() + ": axis '" + key + "': " + e.what());
        }
    }
    axes.validate();
    return axes;
}

void GridAxes::validate() const {
    if (hidden_dim.empty() || learning_rate.empty() || weight_decay.empty() ||
        kernel_width.empty() || alpha.empty()) {
        throw ConfigError("every grid axis must be non-empty");
    }
}

std::vector<TrainConfig> enumerateGrid(const TrainConfig& base, const GridAxes& axes) {
    axes.validate();
    std::vector<TrainConfig> configs;
    for (const int hidden : axes.hidden_dim) {
        for (const double lr : axes.learning_rate) {
            for (const double wd : axes.weight_decay) {
                for (const int k : axes.kernel_width) {
                    for (const double a : axes.alpha) {
                        TrainConfig c = base;
                        c.hidden_dim = hidden;
                        c.learning_rate = lr;
                        c.weight_decay = wd;
                        c.kernel_width = k;
                        c.alpha = a;
                        configs.push_back(c);
                    }
                }
            }
        }
    }
    return configs;
}

std::size_t bestTrialIndex(std::span<const TrialResult> trials) {
    if (trials.empty()) throw ConfigError("no grid trials to rank");
    std::size_t best = 0;
    for (std::size_t i = 1; i < trials.size(); ++i) {
        const TrialResult& a = trials[i];
        const TrialResult& b = trials[best];
        const bool wins = a.val_metric > b.val_metric ||
                          (a.val_metric == b.val_metric &&
                           (a.config.hidden_dim < b.config.hidden_dim ||
                            (a.config.hidden_dim == b.config.hidden_dim &&
                             a.config.learning_rate < b.config.learning_rate)));
        if (wins) best = i;
    }
    return best;
}

std::vector<TrialResult> gridSearch(const DynamicHypergraph& hypergraph,
                                    std::span<const Episode> episodes, const EpisodeSplit& split,
                                    const TrainConfig& base, const GridAxes& axes) {
    std::vector<TrialResult> trials;
    for (const TrainConfig& config : enumerateGrid(base, axes)) {
        const TrainResult r = train(hypergraph, episodes, split, config);
        TrialResult trial;
        trial.config = config;
        trial.val_loss = r.best_val_loss;
        trial.best_epoch = r.best_epoch;
        trial.val_metric = taskMetric(r.params, hypergraph, episodes, split.val, config);
        trials.push_back(std::move(trial));
    }
    return trials;
}

}  // namespace epidhgnn
