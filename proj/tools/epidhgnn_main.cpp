// epidhgnn command-line pipeline: simulate -> infect -> train -> eval, plus
// gridsearch. Every stage is a pure function of (inputs, configs, seed) and
// records a run entry in the output directory's manifest.json.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <epidhgnn/dataset_io.hpp>
#include <epidhgnn/episim.hpp>
#include <epidhgnn/errors.hpp>
#include <epidhgnn/hypergraph.hpp>
#include <epidhgnn/metrics.hpp>
#include <epidhgnn/model.hpp>
#include <epidhgnn/rng.hpp>
#include <epidhgnn/sir.hpp>
#include <epidhgnn/training.hpp>
#include <epidhgnn/version.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace epidhgnn;

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    std::int64_t elapsedMs() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

json readJsonIfPresent(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return json();
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error&) {
        return json();
    }
}

// Appends one run record to <dir>/manifest.json (atomically rewritten).
void appendManifest(const fs::path& dir, const std::string& subcommand, const json& config,
                    std::uint64_t seed, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, std::int64_t wall_ms) {
    fs::create_directories(dir);
    json manifest = readJsonIfPresent(dir / "manifest.json");
    if (!manifest.is_object() || !manifest.contains("runs") || !manifest["runs"].is_array()) {
        manifest = json{{"runs", json::array()}};
    }
    json run;
    run["subcommand"] = subcommand;
    run["config"] = config;
    run["seed"] = seed;
    run["inputs"] = inputs;
    run["outputs"] = outputs;
    run["tool_version"] = kVersion;
    run["wall_ms"] = wall_ms;
    manifest["runs"].push_back(run);
    atomicWriteFile(dir / "manifest.json", manifest.dump(2) + "\n");
}

json trainConfigToJson(const TrainConfig& c) {
    json j;
    j["learning_rate"] = c.learning_rate;
    j["weight_decay"] = c.weight_decay;
    j["clip_norm"] = c.clip_norm;
    j["max_epochs"] = c.max_epochs;
    j["patience"] = c.patience;
    j["alpha"] = c.alpha;
    j["hidden_dim"] = c.hidden_dim;
    j["kernel_width"] = c.kernel_width;
    j["num_layers"] = c.num_layers;
    j["mlp_hidden"] = c.mlp_hidden;
    j["negative_ratio"] = c.negative_ratio;
    j["task"] = c.task == Task::Detect ? "detect" : "forecast";
    j["forecast_label_mode"] =
        c.forecast_label_mode == ForecastLabelMode::AnyInWindow ? "any_in_window" : "at_ps";
    j["tsh"] = c.split.tsh;
    j["ks"] = c.split.ks;
    j["ps"] = c.split.ps;
    j["seed"] = c.seed;
    return j;
}

struct LoadedData {
    DynamicHypergraph hypergraph;
    std::vector<Episode> episodes;
};

LoadedData loadData(const fs::path& data_dir) {
    const fs::path contacts = data_dir / "contacts.csv";
    if (!fs::exists(contacts)) {
        throw ConfigError("missing " + contacts.string() + " (run `epidhgnn simulate` first)");
    }
    const DatasetMeta meta = loadMeta(data_dir / "meta.json");
    LoadedData data{loadContacts(contacts, meta), {}};

    const fs::path episodes_dir = data_dir / "episodes";
    if (fs::exists(episodes_dir)) {
        std::vector<fs::path> dirs;
        for (const auto& entry : fs::directory_iterator(episodes_dir)) {
            if (entry.is_directory()) dirs.push_back(entry.path());
        }
        std::sort(dirs.begin(), dirs.end());
        for (const fs::path& dir : dirs) {
            Episode ep;
            ep.states = loadStates(dir / "states.csv", meta);
            ep.sources = loadSources(dir / "sources.json");
            data.episodes.push_back(std::move(ep));
        }
    } else if (fs::exists(data_dir / "states.csv")) {
        Episode ep;
        ep.states = loadStates(data_dir / "states.csv", meta);
        ep.sources = loadSources(data_dir / "sources.json");
        data.episodes.push_back(std::move(ep));
    }
    if (data.episodes.empty()) {
        throw ConfigError("no infection states under " + data_dir.string() +
                          " (run `epidhgnn infect` first)");
    }
    return data;
}

std::string formatDouble(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- simulate --

int runSimulate(const fs::path& mobility_path, const fs::path& contact_path, int days,
                std::uint64_t seed, int individuals, const fs::path& out) {
    Stopwatch watch;
    const MobilityConfig mobility = MobilityConfig::fromJsonFile(mobility_path);
    const ContactConfig contact = ContactConfig::fromJsonFile(contact_path);
    if (individuals <= 0) throw ConfigError("--individuals must be positive");
    if (days <= 0) throw ConfigError("--days must be positive");

    const Rng root(seed);
    const Population population =
        generatePopulation(mobility, contact, individuals, root.stream("population"));
    const DynamicHypergraph hypergraph =
        simulateMobility(population, mobility, days, root.stream("mobility"));

    fs::create_directories(out);
    saveMeta(out / "meta.json",
             DatasetMeta{hypergraph.numIndividuals(), hypergraph.numLocations(),
                         hypergraph.numTimesteps()});
    saveContacts(out / "contacts.csv", hypergraph);
    population.saveJson(out / "population.json");

    json config;
    config["mobility"] = readJsonIfPresent(mobility_path);
    config["contact"] = readJsonIfPresent(contact_path);
    config["days"] = days;
    config["individuals"] = individuals;
    appendManifest(out, "simulate", config, seed,
                   {mobility_path.string(), contact_path.string()},
                   {"contacts.csv", "meta.json", "population.json"}, watch.elapsedMs());
    std::cout << "simulate: " << hypergraph.numIndividuals() << " individuals, "
              << hypergraph.numLocations() << " locations, " << hypergraph.numTimesteps()
              << " timesteps, " << hypergraph.contacts().size() << " contacts -> " << out.string()
              << "\n";
    return 0;
}

// ------------------------------------------------------------------ infect --

int runInfect(const fs::path& data_dir, const fs::path& pathogen_path,
              std::optional<std::uint64_t> cli_seed, int episodes, const fs::path& out) {
    Stopwatch watch;
    const auto [params, file_seed] = PathogenParams::fromJsonFile(pathogen_path);
    if (!cli_seed && !file_seed) {
        throw ConfigError("no seed given: pass --seed or add a 'seed' key to " +
                          pathogen_path.string());
    }
    const std::uint64_t seed = cli_seed ? *cli_seed : *file_seed;
    if (episodes < 1) throw ConfigError("--episodes must be at least 1");

    const fs::path contacts = data_dir / "contacts.csv";
    if (!fs::exists(contacts)) {
        throw ConfigError("missing " + contacts.string() + " (run `epidhgnn simulate` first)");
    }
    const DatasetMeta meta = loadMeta(data_dir / "meta.json");
    const DynamicHypergraph hypergraph = loadContacts(contacts, meta);

    Population population;
    ContactConfig contact;
    const Population* pop_ptr = nullptr;
    const ContactConfig* contact_ptr = nullptr;
    if (params.mode == SirMode::Pairwise) {
        const fs::path pop_path = data_dir / "population.json";
        if (!fs::exists(pop_path)) {
            throw ConfigError("pairwise mode needs " + pop_path.string() +
                              " (written by `epidhgnn simulate`)");
        }
        population = Population::loadJson(pop_path);
        // Pairwise infection probabilities live in the pathogen run's contact
        // structure; reuse the acquaintance probabilities stored alongside.
        const fs::path cc_path = data_dir / "contact.json";
        if (fs::exists(cc_path)) {
            contact = ContactConfig::fromJsonFile(cc_path);
        }
        pop_ptr = &population;
        contact_ptr = &contact;
    }

    const Rng root(seed);
    std::vector<std::string> outputs;
    fs::create_directories(out);
    for (int i = 0; i < episodes; ++i) {
        const SirEpisode episode =
            runSir(hypergraph, params, hypergraph.numTimesteps(),
                   root.stream("pathogen", static_cast<std::uint64_t>(i)), pop_ptr, contact_ptr);
        fs::path target = out;
        if (episodes > 1) {
            char name[32];
            std::snprintf(name, sizeof(name), "ep_%04d", i);
            target = out / "episodes" / name;
            fs::create_directories(target);
        }
        saveStates(target / "states.csv", episode.states);
        saveSources(target / "sources.json", episode.sources);
        outputs.push_back(fs::relative(target / "states.csv", out).string());
    }

    json config = readJsonIfPresent(pathogen_path);
    config["episodes"] = episodes;
    appendManifest(out, "infect", config, seed, {data_dir.string(), pathogen_path.string()},
                   outputs, watch.elapsedMs());
    std::cout << "infect: " << episodes << " episode(s) -> " << out.string() << "\n";
    return 0;
}

// ------------------------------------------------------------------- train --

TrainConfig resolveTrainConfig(const std::optional<fs::path>& config_path, CLI::App* cmd,
                               const std::string& task, int tsh, int ks, int ps,
                               std::optional<std::uint64_t> seed) {
    TrainConfig config;
    if (config_path) config = loadTrainConfig(*config_path, config);
    if (cmd->count("--task") > 0 || !config_path) {
        if (task == "detect") config.task = Task::Detect;
        else if (task == "forecast") config.task = Task::Forecast;
        else throw ConfigError("--task must be 'detect' or 'forecast'");
    }
    if (cmd->count("--tsh") > 0) config.split.tsh = tsh;
    if (cmd->count("--ks") > 0) config.split.ks = ks;
    if (cmd->count("--ps") > 0) config.split.ps = ps;
    if (seed) config.seed = *seed;
    return config;
}

int runTrain(const fs::path& data_dir, const TrainConfig& config, const fs::path& out) {
    Stopwatch watch;
    const LoadedData data = loadData(data_dir);
    config.split.validate(data.hypergraph.numTimesteps());
    const EpisodeSplit split = EpisodeSplit::fractions(static_cast<int>(data.episodes.size()));

    const TrainResult result = train(data.hypergraph, data.episodes, split, config);
    if (result.pattern_negatives_warning) {
        std::cerr << "warning: some pattern batches exhausted the non-incident pairs\n";
    }

    fs::create_directories(out);
    result.params.saveCheckpoint(out / "checkpoint.json");
    atomicWriteFile(out / "train_config.json", trainConfigToJson(config).dump(2) + "\n");

    std::string log_text;
    for (const EpochLog& entry : result.log) {
        json line;
        line["epoch"] = entry.epoch;
        line["train_loss"] = entry.train_loss;
        line["val_loss"] = entry.val_loss;
        line["val_metric"] = entry.val_metric;
        log_text += line.dump() + "\n";
    }
    atomicWriteFile(out / "training_log.jsonl", log_text);

    appendManifest(out, "train", trainConfigToJson(config), config.seed, {data_dir.string()},
                   {"checkpoint.json", "train_config.json", "training_log.jsonl"},
                   watch.elapsedMs());
    std::cout << "train: best epoch " << result.best_epoch << ", val loss "
              << formatDouble(result.best_val_loss) << " -> " << out.string() << "\n";
    return 0;
}

// -------------------------------------------------------------------- eval --

std::string substituteSeed(const std::string& tmpl, std::uint64_t seed) {
    const std::string token = "{seed}";
    std::string out = tmpl;
    const auto pos = out.find(token);
    if (pos != std::string::npos) out.replace(pos, token.size(), std::to_string(seed));
    return out;
}

int runEval(const fs::path& data_dir, const std::string& checkpoint_template,
            const std::string& task_flag, const std::vector<std::uint64_t>& seeds,
            const fs::path& out, int quantile_windows) {
    Stopwatch watch;
    if (seeds.empty()) throw ConfigError("--seeds must list at least one seed");
    const LoadedData data = loadData(data_dir);

    // Evaluation happens on the held-out test episodes when the dataset is
    // large enough to have a split; otherwise on everything available.
    std::vector<int> test_ids;
    if (data.episodes.size() >= 3) {
        test_ids = EpisodeSplit::fractions(static_cast<int>(data.episodes.size())).test;
    } else {
        for (std::size_t i = 0; i < data.episodes.size(); ++i) test_ids.push_back(static_cast<int>(i));
    }

    // The time split and task default to the training snapshot stored next to
    // the (first) checkpoint.
    const fs::path first_ckpt = substituteSeed(checkpoint_template, seeds.front());
    TrainConfig config;
    const fs::path snapshot = fs::path(first_ckpt).parent_path() / "train_config.json";
    if (fs::exists(snapshot)) config = loadTrainConfig(snapshot, config);
    if (task_flag == "detect") config.task = Task::Detect;
    else if (task_flag == "forecast") config.task = Task::Forecast;
    else if (!task_flag.empty()) throw ConfigError("--task must be 'detect' or 'forecast'");
    config.split.validate(data.hypergraph.numTimesteps());

    const auto frames = buildWindowStructures(data.hypergraph, config.split.ks);
    const auto counts = data.hypergraph.locationContactCounts();

    std::vector<double> mrr_seeds, hit1_seeds, hit3_seeds;
    std::vector<double> f1_seeds, auroc_seeds, mae_seeds, naive_seeds;
    std::vector<double> pattern_f1_seeds;
    QuantileReport last_quantile_report;
    const int horizon = config.split.ps - config.split.ks;
    Eigen::VectorXd curve_pred_sum;
    Eigen::VectorXd curve_true;

    for (const std::uint64_t seed : seeds) {
        const fs::path ckpt_path = substituteSeed(checkpoint_template, seed);
        const ModelParams params = ModelParams::loadCheckpoint(ckpt_path);
        if (params.config().input_dim != 3) {
            throw ConfigError(ckpt_path.string() + ": checkpoint input_dim must be 3");
        }

        if (config.task == Task::Detect) {
            double m = 0, h1 = 0, h3 = 0;
            for (const int id : test_ids) {
                const Episode& ep = data.episodes[static_cast<std::size_t>(id)];
                const auto masked = maskStates(ep.states, config.split);
                ForwardOptions opts;
                opts.detect = true;
                const auto fwd = forward(frames, masked, config.split.tsh, params, opts);
                m += mrr(fwd.detect_scores, ep.sources);
                h1 += hitAtK(fwd.detect_scores, ep.sources, 1);
                h3 += hitAtK(fwd.detect_scores, ep.sources, 3);
            }
            const double n = static_cast<double>(test_ids.size());
            mrr_seeds.push_back(m / n);
            hit1_seeds.push_back(h1 / n);
            hit3_seeds.push_back(h3 / n);
        } else {
            std::vector<double> pooled;
            std::vector<std::uint8_t> pooled_labels;
            Eigen::VectorXd pred = Eigen::VectorXd::Zero(horizon);
            Eigen::VectorXd truth = Eigen::VectorXd::Zero(horizon);
            double naive = 0.0;
            for (const int id : test_ids) {
                const Episode& ep = data.episodes[static_cast<std::size_t>(id)];
                const auto masked = maskStates(ep.states, config.split);
                ForwardOptions opts;
                opts.forecast = true;
                const auto fwd = forward(frames, masked, config.split.tsh, params, opts);
                const auto labels = forecastLabels(ep.states, config.split, config.forecast_label_mode);
                for (Eigen::Index v = 0; v < fwd.forecast_probs.size(); ++v) {
                    pooled.push_back(fwd.forecast_probs[v]);
                    pooled_labels.push_back(labels[static_cast<std::size_t>(v)]);
                }
                const auto curve = populationCurve(fwd.forecast_probs, ep.states, config.split);
                for (int h = 0; h < horizon; ++h) {
                    pred[h] += curve.predicted[static_cast<std::size_t>(h)];
                    truth[h] += curve.actual[static_cast<std::size_t>(h)];
                }
                naive += ep.states.countState(config.split.ks, SirState::Infected);
            }
            const Eigen::VectorXd probs = Eigen::Map<Eigen::VectorXd>(
                pooled.data(), static_cast<Eigen::Index>(pooled.size()));
            f1_seeds.push_back(f1Score(probs, pooled_labels));
            const bool has_pos =
                std::find(pooled_labels.begin(), pooled_labels.end(), 1) != pooled_labels.end();
            const bool has_neg =
                std::find(pooled_labels.begin(), pooled_labels.end(), 0) != pooled_labels.end();
            auroc_seeds.push_back(has_pos && has_neg ? auroc(probs, pooled_labels) : 0.5);

            double mae = 0.0, naive_mae = 0.0;
            for (int h = 0; h < horizon; ++h) {
                mae += std::abs(pred[h] - truth[h]);
                naive_mae += std::abs(naive - truth[h]);
            }
            mae_seeds.push_back(mae / horizon);
            naive_seeds.push_back(naive_mae / horizon);
            if (curve_pred_sum.size() == 0) {
                curve_pred_sum = Eigen::VectorXd::Zero(horizon);
                curve_true = truth;
            }
            curve_pred_sum += pred;
        }

        // Contact-pattern quantile analysis over sampled reconstruction windows.
        if (params.config().kernel_width >= 2) {
            Rng rng = Rng(seed).stream("eval-pattern");
            std::vector<double> scores;
            std::vector<std::uint8_t> labels;
            std::vector<int> pair_locs;
            const int k = params.config().kernel_width;
            const int t0_max = config.split.ks - k + 1;
            if (t0_max >= 0) {
                for (int w = 0; w < quantile_windows; ++w) {
                    const int t0 = static_cast<int>(rng.uniformInt(0, t0_max));
                    PatternBatch batch =
                        samplePatternBatch(data.hypergraph, t0, k, 1.0, rng);
                    const Episode& ep =
                        data.episodes[static_cast<std::size_t>(test_ids[w % test_ids.size()])];
                    const auto masked = maskStates(ep.states, config.split);
                    PatternQuery query;
                    query.window_begin = t0;
                    query.pairs = batch.pairs;
                    ForwardOptions opts;
                    opts.pattern = &query;
                    const auto fwd = forward(frames, masked, config.split.tsh, params, opts);
                    for (Eigen::Index i = 0; i < fwd.pattern_scores.size(); ++i) {
                        scores.push_back(fwd.pattern_scores[i]);
                        labels.push_back(batch.labels[static_cast<std::size_t>(i)]);
                        pair_locs.push_back(batch.pairs[static_cast<std::size_t>(i)].second);
                    }
                }
            }
            if (!scores.empty()) {
                const Eigen::VectorXd s = Eigen::Map<Eigen::VectorXd>(
                    scores.data(), static_cast<Eigen::Index>(scores.size()));
                last_quantile_report = quantileContactReport(counts, s, labels, pair_locs);
                pattern_f1_seeds.push_back(last_quantile_report.overall_f1);
            }
        }
    }

    MetricReport report;
    report.task = config.task == Task::Detect ? "detect" : "forecast";
    report.split = config.split;
    if (config.task == Task::Detect) {
        report.metrics["mrr"] = summarize(mrr_seeds);
        report.metrics["hit@1"] = summarize(hit1_seeds);
        report.metrics["hit@3"] = summarize(hit3_seeds);
    } else {
        report.metrics["f1"] = summarize(f1_seeds);
        report.metrics["auroc"] = summarize(auroc_seeds);
        report.metrics["population_mae"] = summarize(mae_seeds);
        report.metrics["naive_mae"] = summarize(naive_seeds);
    }
    if (!pattern_f1_seeds.empty()) {
        report.metrics["pattern_f1"] = summarize(pattern_f1_seeds);
    }

    fs::create_directories(out);
    json mj;
    mj["task"] = report.task;
    mj["split"] = {{"tsh", report.split.tsh}, {"ks", report.split.ks}, {"ps", report.split.ps}};
    mj["seeds"] = seeds;
    json metrics = json::object();
    for (const auto& [name, summary] : report.metrics) {
        metrics[name] = {{"mean", summary.mean}, {"std", summary.stddev},
                         {"per_seed", summary.per_seed}};
    }
    mj["metrics"] = metrics;
    atomicWriteFile(out / "metrics.json", mj.dump(2) + "\n");

    if (config.task == Task::Forecast) {
        std::string csv = "t,infected_pred,infected_true\n";
        for (int h = 0; h < horizon; ++h) {
            const double mean_pred = curve_pred_sum[h] / static_cast<double>(seeds.size());
            csv += std::to_string(config.split.ks + 1 + h) + "," + formatDouble(mean_pred) + "," +
                   formatDouble(curve_true[h]) + "\n";
        }
        atomicWriteFile(out / "curve.csv", csv);
    }

    if (!pattern_f1_seeds.empty()) {
        json qj;
        qj["degenerate"] = last_quantile_report.degenerate;
        qj["overall_f1"] = last_quantile_report.overall_f1;
        json buckets = json::array();
        for (const auto& b : last_quantile_report.buckets) {
            buckets.push_back({{"range", {b.count_min, b.count_max}},
                               {"num_locations", b.num_locations},
                               {"num_pairs", b.num_pairs},
                               {"f1", b.f1}});
        }
        qj["buckets"] = buckets;
        atomicWriteFile(out / "quantile_report.json", qj.dump(2) + "\n");
    }

    json config_snapshot = trainConfigToJson(config);
    config_snapshot["checkpoint"] = checkpoint_template;
    config_snapshot["quantile_windows"] = quantile_windows;
    appendManifest(out, "eval", config_snapshot, seeds.front(),
                   {data_dir.string(), checkpoint_template}, {"metrics.json"}, watch.elapsedMs());
    std::cout << "eval: wrote metrics.json";
    if (config.task == Task::Forecast) std::cout << ", curve.csv";
    if (!pattern_f1_seeds.empty()) std::cout << ", quantile_report.json";
    std::cout << " -> " << out.string() << "\n";
    return 0;
}

// -------------------------------------------------------------- gridsearch --

int runGridsearch(const fs::path& data_dir, const fs::path& axes_path, const TrainConfig& base,
                  const fs::path& out, int jobs) {
    Stopwatch watch;
    if (jobs < 1) throw ConfigError("--jobs must be at least 1");
    const GridAxes axes = GridAxes::fromJsonFile(axes_path);
    const LoadedData data = loadData(data_dir);
    base.split.validate(data.hypergraph.numTimesteps());
    const EpisodeSplit split = EpisodeSplit::fractions(static_cast<int>(data.episodes.size()));
    const auto configs = enumerateGrid(base, axes);

    fs::create_directories(out);
    std::vector<TrialResult> trials(configs.size());
    std::vector<char> done(configs.size(), 0);

    auto trialPath = [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%04zu.json", i);
        return out / name;
    };

    // Completed trials are skipped on rerun.
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const json cached = readJsonIfPresent(trialPath(i));
        if (cached.is_object() && cached.value("index", -1) == static_cast<int>(i) &&
            cached.contains("val_metric")) {
            trials[i].config = configs[i];
            trials[i].val_metric = cached["val_metric"].get<double>();
            trials[i].val_loss = cached.value("val_loss", 0.0);
            trials[i].best_epoch = cached.value("best_epoch", 0);
            done[i] = 1;
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) break;
            if (done[i]) continue;
            const TrainResult r = train(data.hypergraph, data.episodes, split, configs[i]);
            TrialResult trial;
            trial.config = configs[i];
            trial.val_loss = r.best_val_loss;
            trial.best_epoch = r.best_epoch;
            trial.val_metric = taskMetric(r.params, data.hypergraph, data.episodes, split.val,
                                          configs[i]);
            trials[i] = trial;
            json tj;
            tj["index"] = static_cast<int>(i);
            tj["config"] = trainConfigToJson(configs[i]);
            tj["val_metric"] = trial.val_metric;
            tj["val_loss"] = trial.val_loss;
            tj["best_epoch"] = trial.best_epoch;
            atomicWriteFile(trialPath(i), tj.dump(2) + "\n");
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Ranked trial table plus the winning config.
    std::vector<std::size_t> order(trials.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (trials[a].val_metric != trials[b].val_metric) {
            return trials[a].val_metric > trials[b].val_metric;
        }
        if (trials[a].config.hidden_dim != trials[b].config.hidden_dim) {
            return trials[a].config.hidden_dim < trials[b].config.hidden_dim;
        }
        if (trials[a].config.learning_rate != trials[b].config.learning_rate) {
            return trials[a].config.learning_rate < trials[b].config.learning_rate;
        }
        return a < b;
    });
    json table = json::array();
    for (const std::size_t i : order) {
        table.push_back({{"index", static_cast<int>(i)},
                         {"config", trainConfigToJson(trials[i].config)},
                         {"val_metric", trials[i].val_metric},
                         {"val_loss", trials[i].val_loss}});
    }
    atomicWriteFile(out / "trials.json", table.dump(2) + "\n");

    const std::size_t best = bestTrialIndex(trials);
    atomicWriteFile(out / "best_config.json", trainConfigToJson(trials[best].config).dump(2) + "\n");

    json config_snapshot = trainConfigToJson(base);
    config_snapshot["axes"] = readJsonIfPresent(axes_path);
    config_snapshot["jobs"] = jobs;
    appendManifest(out, "gridsearch", config_snapshot, base.seed,
                   {data_dir.string(), axes_path.string()}, {"trials.json", "best_config.json"},
                   watch.elapsedMs());
    std::cout << "gridsearch: " << configs.size() << " trial(s), best index " << best << " -> "
              << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic-hypergraph epidemic modeling pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate synthetic contact data");
    std::string sim_mobility, sim_contact, sim_out;
    int sim_days = 14;
    int sim_individuals = 10000;
    std::uint64_t sim_seed = 0;
    sim->add_option("--mobility", sim_mobility, "mobility.json config")->required();
    sim->add_option("--contact", sim_contact, "contact.json config")->required();
    sim->add_option("--days", sim_days, "number of simulated days")->required();
    sim->add_option("--seed", sim_seed, "master seed")->required();
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--individuals", sim_individuals, "population size (default 10000)");

    // infect
    auto* inf = app.add_subcommand("infect", "Run stochastic SIR propagation");
    std::string inf_data, inf_pathogen, inf_out;
    int inf_episodes = 1;
    std::uint64_t inf_seed = 0;
    inf->add_option("--data", inf_data, "dataset directory (from simulate)")->required();
    inf->add_option("--pathogen", inf_pathogen, "pathogen.json config")->required();
    auto* inf_seed_opt = inf->add_option("--seed", inf_seed, "master seed");
    inf->add_option("--episodes", inf_episodes, "number of episodes (default 1)");
    inf->add_option("--out", inf_out, "output directory (default --data)");

    // train
    auto* trn = app.add_subcommand("train", "Train the model");
    std::string trn_data, trn_task = "detect", trn_out;
    std::string trn_config;
    int trn_tsh = 0, trn_ks = 0, trn_ps = 0;
    std::uint64_t trn_seed = 0;
    trn->add_option("--data", trn_data, "dataset directory")->required();
    trn->add_option("--task", trn_task, "detect | forecast")->required();
    trn->add_option("--tsh", trn_tsh, "time stamp hidden")->required();
    trn->add_option("--ks", trn_ks, "known time stamp")->required();
    trn->add_option("--ps", trn_ps, "prediction time stamp")->required();
    trn->add_option("--config", trn_config, "train_config.json (optional)");
    auto* trn_seed_opt = trn->add_option("--seed", trn_seed, "training seed");
    trn->add_option("--out", trn_out, "output directory")->required();

    // eval
    auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string evl_data, evl_ckpt, evl_task, evl_out = ".";
    std::vector<std::uint64_t> evl_seeds;
    int evl_windows = 20;
    evl->add_option("--data", evl_data, "dataset directory")->required();
    evl->add_option("--checkpoint", evl_ckpt,
                    "checkpoint path; '{seed}' expands per evaluation seed")->required();
    evl->add_option("--task", evl_task, "detect | forecast (default: training snapshot)");
    evl->add_option("--seeds", evl_seeds, "evaluation seeds")->required()->delimiter(',');
    evl->add_option("--out", evl_out, "output directory (default .)");
    evl->add_option("--quantile-windows", evl_windows,
                    "sampled reconstruction windows for the quantile report");

    // gridsearch
    auto* grd = app.add_subcommand("gridsearch", "Exhaustive hyperparameter search");
    std::string grd_data, grd_axes, grd_out, grd_config;
    std::string grd_task = "detect";
    int grd_tsh = 0, grd_ks = 0, grd_ps = 0, grd_jobs = 1;
    std::uint64_t grd_seed = 0;
    grd->add_option("--data", grd_data, "dataset directory")->required();
    grd->add_option("--axes", grd_axes, "axes.json with per-axis value lists")->required();
    grd->add_option("--out", grd_out, "output directory")->required();
    grd->add_option("--config", grd_config, "base train_config.json (optional)");
    grd->add_option("--task", grd_task, "detect | forecast");
    grd->add_option("--tsh", grd_tsh, "time stamp hidden")->required();
    grd->add_option("--ks", grd_ks, "known time stamp")->required();
    grd->add_option("--ps", grd_ps, "prediction time stamp")->required();
    auto* grd_seed_opt = grd->add_option("--seed", grd_seed, "training seed");
    grd->add_option("--jobs", grd_jobs, "parallel trials (default 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
    }

    try {
        if (sim->parsed()) {
            return runSimulate(sim_mobility, sim_contact, sim_days, sim_seed, sim_individuals,
                               sim_out);
        }
        if (inf->parsed()) {
            std::optional<std::uint64_t> seed;
            if (inf_seed_opt->count() > 0) seed = inf_seed;
            const fs::path out = inf_out.empty() ? fs::path(inf_data) : fs::path(inf_out);
            return runInfect(inf_data, inf_pathogen, seed, inf_episodes, out);
        }
        if (trn->parsed()) {
            std::optional<std::uint64_t> seed;
            if (trn_seed_opt->count() > 0) seed = trn_seed;
            std::optional<fs::path> config_path;
            if (!trn_config.empty()) config_path = trn_config;
            const TrainConfig config =
                resolveTrainConfig(config_path, trn, trn_task, trn_tsh, trn_ks, trn_ps, seed);
            return runTrain(trn_data, config, trn_out);
        }
        if (evl->parsed()) {
            return runEval(evl_data, evl_ckpt, evl_task, evl_seeds, evl_out, evl_windows);
        }
        if (grd->parsed()) {
            std::optional<std::uint64_t> seed;
            if (grd_seed_opt->count() > 0) seed = grd_seed;
            std::optional<fs::path> config_path;
            if (!grd_config.empty()) config_path = grd_config;
            const TrainConfig base =
                resolveTrainConfig(config_path, grd, grd_task, grd_tsh, grd_ks, grd_ps, seed);
            return runGridsearch(grd_data, grd_axes, base, grd_out, grd_jobs);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
