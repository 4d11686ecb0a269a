#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <epidhgnn/errors.hpp>
#include <epidhgnn/training.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

using namespace epidhgnn;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (const double x : xs) v[i++] = x;
    return v;
}

// Finite-difference check of a loss gradient.
template <class LossFn>
void checkLossGradient(LossFn loss, Eigen::VectorXd scores) {
    const LossResult base = loss(scores);
    const double h = 1e-7;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        const double orig = scores[i];
        scores[i] = orig + h;
        const double up = loss(scores).value;
        scores[i] = orig - h;
        const double down = loss(scores).value;
        scores[i] = orig;
        const double fd = (up - down) / (2.0 * h);
        const double rel = std::abs(base.grad[i] - fd) / std::max({std::abs(fd), std::abs(base.grad[i]), 1e-3});
        CHECK(rel < 1e-6);
    }
}

}  // namespace

TEST_CASE("detection loss formula fixtures") {
    SUBCASE("uniform 0.5 scores with one positive of four give 2 ln 2") {
        const std::vector<std::uint8_t> labels{1, 0, 0, 0};
        const auto r = detectionLoss(vec({0.5, 0.5, 0.5, 0.5}), labels);
        CHECK(r.value == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("class weights satisfy w1*|pos| = w0*|neg| = |V| (loss is 2 ln 2 at 0.5 for any balance)") {
        std::vector<std::uint8_t> labels(100, 0);
        labels[17] = 1;
        const auto r = detectionLoss(Eigen::VectorXd::Constant(100, 0.5), labels);
        CHECK(r.value == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("perfect scores drive the loss to zero") {
        const std::vector<std::uint8_t> labels{1, 0, 0};
        const auto r = detectionLoss(vec({1.0 - 1e-9, 1e-9, 1e-9}), labels);
        CHECK(r.value < 1e-7);
    }
    SUBCASE("single-class labels rejected") {
        const std::vector<std::uint8_t> pos{1, 1};
        const std::vector<std::uint8_t> neg{0, 0};
        CHECK_THROWS_AS(detectionLoss(vec({0.5, 0.5}), pos), ConfigError);
        CHECK_THROWS_AS(detectionLoss(vec({0.5, 0.5}), neg), ConfigError);
    }
}

TEST_CASE("forecast and pattern loss fixtures") {
    const std::vector<std::uint8_t> labels{1, 0, 1, 0};
    SUBCASE("uniform 0.5 gives ln 2") {
        CHECK(forecastLoss(Eigen::VectorXd::Constant(4, 0.5), labels).value ==
              doctest::Approx(std::log(2.0)));
        CHECK(patternLoss(Eigen::VectorXd::Constant(4, 0.5), labels).value ==
              doctest::Approx(std::log(2.0)));
    }
    SUBCASE("perfect predictions give ~0") {
        CHECK(forecastLoss(vec({1 - 1e-9, 1e-9, 1 - 1e-9, 1e-9}), labels).value < 1e-7);
    }
    SUBCASE("random fixture matches a hand-rolled sum") {
        const Eigen::VectorXd probs = vec({0.9, 0.3, 0.6, 0.2});
        double expected = 0.0;
        expected -= std::log(0.9) + std::log(1 - 0.3) + std::log(0.6) + std::log(1 - 0.2);
        expected /= 4.0;
        CHECK(forecastLoss(probs, labels).value == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("empty batch rejected") {
        CHECK_THROWS_AS(patternLoss(Eigen::VectorXd(), std::vector<std::uint8_t>{}), ConfigError);
    }
}

TEST_CASE("loss gradients match finite differences") {
    const std::vector<std::uint8_t> labels{1, 0, 0, 1, 0};
    const Eigen::VectorXd scores = vec({0.7, 0.2, 0.55, 0.9, 0.35});
    checkLossGradient([&](const Eigen::VectorXd& s) { return detectionLoss(s, labels); }, scores);
    checkLossGradient([&](const Eigen::VectorXd& s) { return forecastLoss(s, labels); }, scores);
    checkLossGradient([&](const Eigen::VectorXd& s) { return patternLoss(s, labels); }, scores);
}

TEST_CASE("combined loss") {
    CHECK(combinedLoss(2.0, 4.0, 1.0) == 2.0);  // bit-exact task loss at alpha = 1
    CHECK(combinedLoss(2.0, 4.0, 0.0) == 4.0);
    CHECK(combinedLoss(2.0, 4.0, 0.5) == 3.0);
}

TEST_CASE("pattern batch sampling") {
    // 4 individuals, 3 locations, 3 frames; target frame is window_begin + k - 1.
    std::vector<Contact> contacts;
    for (int t = 0; t < 3; ++t) {
        contacts.push_back({t, t % 3, 0});
        contacts.push_back({t, (t + 1) % 3, 1});
        contacts.push_back({t, t % 3, 2});
        contacts.push_back({t, (t + 2) % 3, 3});
    }
    const DynamicHypergraph hg(4, 3, 3, contacts);

    SUBCASE("ratio 1 gives equal positives and negatives with no overlap") {
        Rng rng(5);
        const auto batch = samplePatternBatch(hg, 0, 3, 1.0, rng);
        const std::size_t pos = static_cast<std::size_t>(
            std::count(batch.labels.begin(), batch.labels.end(), std::uint8_t{1}));
        CHECK(pos == 4);
        CHECK(batch.pairs.size() == 8);
        CHECK_FALSE(batch.negatives_truncated);
        for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
            for (std::size_t j = i + 1; j < batch.pairs.size(); ++j) {
                CHECK(batch.pairs[i] != batch.pairs[j]);
            }
        }
    }
    SUBCASE("negatives never collide with positives over many seeds") {
        for (int seed = 0; seed < 1000; ++seed) {
            Rng rng(static_cast<std::uint64_t>(seed));
            const auto batch = samplePatternBatch(hg, 0, 3, 1.0, rng);
            for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
                if (batch.labels[i] != 0) continue;
                const auto frame = hg.frame(2);
                for (const Contact& c : frame) {
                    CHECK(std::pair<int, int>(c.individual, c.location) != batch.pairs[i]);
                }
            }
        }
    }
    SUBCASE("fully dense frame yields zero negatives and a warning") {
        std::vector<Contact> dense;
        for (int t = 0; t < 2; ++t) {
            for (int v = 0; v < 2; ++v) {
                for (int loc = 0; loc < 2; ++loc) dense.push_back({t, loc, v});
            }
        }
        const DynamicHypergraph full(2, 2, 2, dense);
        Rng rng(1);
        const auto batch = samplePatternBatch(full, 0, 2, 1.0, rng);
        CHECK(batch.negatives_truncated);
        CHECK(std::count(batch.labels.begin(), batch.labels.end(), std::uint8_t{0}) == 0);
    }
    SUBCASE("window outside the data rejected") {
        Rng rng(2);
        CHECK_THROWS_AS(samplePatternBatch(hg, 1, 3, 1.0, rng), ConfigError);
    }
}

TEST_CASE("adam step") {
    SUBCASE("zero gradient and no decay leave parameters unchanged") {
        Eigen::VectorXd params = vec({1.0, -2.0, 3.0});
        AdamState state = AdamState::zeros(3);
        adamStep(params, Eigen::VectorXd::Zero(3), state, 0.1, 0.0, 5.0);
        CHECK(params == vec({1.0, -2.0, 3.0}));
    }
    SUBCASE("first step moves by about lr") {
        Eigen::VectorXd params = vec({0.0});
        AdamState state = AdamState::zeros(1);
        adamStep(params, vec({0.37}), state, 0.01, 0.0, 0.0);
        CHECK(std::abs(params[0] + 0.01) < 1e-6);  // moved against the gradient
    }
    SUBCASE("global-norm clipping halves a norm-10 gradient before the moments") {
        Eigen::VectorXd params = Eigen::VectorXd::Zero(2);
        AdamState state = AdamState::zeros(2);
        const Eigen::VectorXd g = vec({6.0, 8.0});  // norm 10
        adamStep(params, g, state, 0.01, 0.0, 5.0);
        CHECK(state.first_moment[0] == doctest::Approx(0.1 * 3.0).epsilon(1e-12));
        CHECK(state.first_moment[1] == doctest::Approx(0.1 * 4.0).epsilon(1e-12));
    }
    SUBCASE("decoupled weight decay shrinks parameters multiplicatively") {
        Eigen::VectorXd params = vec({10.0});
        AdamState state = AdamState::zeros(1);
        adamStep(params, vec({0.0}), state, 0.1, 0.5, 0.0);
        CHECK(params[0] == doctest::Approx(10.0 - 0.1 * 0.5 * 10.0));
    }
    SUBCASE("non-finite gradients abort with a diagnostic") {
        Eigen::VectorXd params = vec({1.0});
        AdamState state = AdamState::zeros(1);
        CHECK_THROWS_AS(
            adamStep(params, vec({std::numeric_limits<double>::quiet_NaN()}), state, 0.1, 0.0, 0.0),
            RuntimeError);
    }
}

TEST_CASE("episode split fractions") {
    const auto split = EpisodeSplit::fractions(28);
    CHECK(split.train.size() == 20);
    CHECK(split.val.size() == 4);
    CHECK(split.test.size() == 4);
    split.validate(28);
    CHECK_THROWS_AS(EpisodeSplit::fractions(2), ConfigError);

    EpisodeSplit overlapping{{0, 1}, {1}, {2}};
    CHECK_THROWS_AS(overlapping.validate(3), ConfigError);
    EpisodeSplit incomplete{{0}, {1}, {2}};
    CHECK_THROWS_AS(incomplete.validate(4), ConfigError);
}

namespace {

// Tiny memorizable fixture: node 0 is the source, visible from t=0.
struct TinyProblem {
    DynamicHypergraph hg;
    std::vector<Episode> episodes;
    EpisodeSplit split;
    TrainConfig config;
};

TinyProblem tinyProblem() {
    std::vector<Contact> contacts;
    for (int t = 0; t < 4; ++t) {
        // Node 0 sits alone at location 0 on odd frames; groups vary.
        if (t % 2 == 1) {
            contacts.push_back({t, 0, 0});
            for (int v = 1; v < 5; ++v) contacts.push_back({t, 1, v});
        } else {
            for (int v = 0; v < 3; ++v) contacts.push_back({t, 0, v});
            for (int v = 3; v < 5; ++v) contacts.push_back({t, 1, v});
        }
    }
    DynamicHypergraph hg(5, 2, 4, contacts);

    StateSequence states(5, 4);
    for (int t = 0; t < 4; ++t) states.set(t, 0, SirState::Infected);
    Episode ep{states, {0}};
    std::vector<Episode> episodes = {ep, ep, ep};

    TrainConfig config;
    config.task = Task::Detect;
    config.split = TimeSplit{0, 3, 3};
    config.alpha = 1.0;
    config.learning_rate = 0.2;
    config.weight_decay = 0.0;
    config.clip_norm = 5.0;
    config.hidden_dim = 4;
    config.mlp_hidden = 4;
    config.kernel_width = 2;
    config.max_epochs = 100;
    config.patience = 100;
    config.seed = 7;
    return TinyProblem{std::move(hg), std::move(episodes), EpisodeSplit{{0}, {1}, {2}}, config};
}

}  // namespace

TEST_CASE("training memorizes a 5-node fixture within 100 epochs") {
    TinyProblem p = tinyProblem();
    const TrainResult r = train(p.hg, p.episodes, p.split, p.config);
    REQUIRE_FALSE(r.log.empty());
    double min_train = std::numeric_limits<double>::infinity();
    for (const auto& entry : r.log) min_train = std::min(min_train, entry.train_loss);
    CHECK(min_train < 0.05);
}

TEST_CASE("training is deterministic given config and seed") {
    TinyProblem p = tinyProblem();
    p.config.alpha = 0.7;  // exercise the pattern sampling path too
    p.config.max_epochs = 12;
    p.config.patience = 12;
    const TrainResult a = train(p.hg, p.episodes, p.split, p.config);
    const TrainResult b = train(p.hg, p.episodes, p.split, p.config);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].train_loss == b.log[i].train_loss);
        CHECK(a.log[i].val_loss == b.log[i].val_loss);
        CHECK(a.log[i].val_metric == b.log[i].val_metric);
    }
    CHECK(a.params.values() == b.params.values());
}

TEST_CASE("early stopping keeps the minimum validation loss and stops on stale epochs") {
    TinyProblem p = tinyProblem();
    p.config.learning_rate = 0.5;  // deliberately bouncy
    p.config.max_epochs = 60;
    p.config.patience = 0;
    const TrainResult r = train(p.hg, p.episodes, p.split, p.config);
    CHECK(r.log.size() < 60);  // stopped at the first non-improving epoch
    double min_val = std::numeric_limits<double>::infinity();
    for (const auto& entry : r.log) min_val = std::min(min_val, entry.val_loss);
    CHECK(r.best_val_loss == min_val);
    CHECK(r.log.back().val_loss >= r.best_val_loss);

    // The returned checkpoint reproduces the recorded best validation loss.
    const auto frames = buildWindowStructures(p.hg, p.config.split.ks);
    const auto masked = maskStates(p.episodes[1].states, p.config.split);
    ForwardOptions opts;
    opts.detect = true;
    const auto fwd = forward(frames, masked, p.config.split.tsh, r.params, opts);
    const auto labels = detectionLabels(5, p.episodes[1].sources);
    CHECK(detectionLoss(fwd.detect_scores, labels).value == doctest::Approx(r.best_val_loss));
}

TEST_CASE("grid enumeration and ranking") {
    TrainConfig base;
    GridAxes axes;
    axes.hidden_dim = {8, 16};
    axes.learning_rate = {0.1, 0.01};
    axes.weight_decay = {0.0};
    axes.kernel_width = {2};
    axes.alpha = {0.3, 0.5, 0.7, 0.9, 1.0};
    const auto configs = enumerateGrid(base, axes);
    CHECK(configs.size() == 2 * 2 * 1 * 1 * 5);

    SUBCASE("empty axis rejected") {
        GridAxes bad = axes;
        bad.alpha.clear();
        CHECK_THROWS_AS(enumerateGrid(base, bad), ConfigError);
    }
    SUBCASE("dominant trial wins; ties prefer smaller hidden then lower lr") {
        std::vector<TrialResult> trials(3);
        trials[0].config.hidden_dim = 16;
        trials[0].config.learning_rate = 0.1;
        trials[0].val_metric = 0.8;
        trials[1].config.hidden_dim = 8;
        trials[1].config.learning_rate = 0.1;
        trials[1].val_metric = 0.8;
        trials[2].config.hidden_dim = 8;
        trials[2].config.learning_rate = 0.01;
        trials[2].val_metric = 0.8;
        CHECK(bestTrialIndex(trials) == 2);
        trials[0].val_metric = 0.9;
        CHECK(bestTrialIndex(trials) == 0);
    }
    SUBCASE("single-point grid returns that config") {
        GridAxes point;
        point.hidden_dim = {4};
        point.learning_rate = {0.2};
        point.weight_decay = {0.0};
        point.kernel_width = {2};
        point.alpha = {1.0};
        TinyProblem p = tinyProblem();
        p.config.max_epochs = 3;
        p.config.patience = 3;
        const auto trials = gridSearch(p.hg, p.episodes, p.split, p.config, point);
        REQUIRE(trials.size() == 1);
        CHECK(trials[0].config.hidden_dim == 4);
        CHECK(bestTrialIndex(trials) == 0);
    }
}

TEST_CASE("train config file loading rejects unknown keys") {
    const auto dir = std::filesystem::temp_directory_path() / "epidhgnn_traincfg";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "ok.json");
        out << R"({"learning_rate": 0.05, "alpha": 0.9, "task": "forecast", "tsh": 2, "ks": 5, "ps": 9})";
    }
    TrainConfig base;
    const TrainConfig loaded = loadTrainConfig(dir / "ok.json", base);
    CHECK(loaded.learning_rate == 0.05);
    CHECK(loaded.alpha == 0.9);
    CHECK(loaded.task == Task::Forecast);
    CHECK(loaded.split.tsh == 2);
    CHECK(loaded.split.ps == 9);
    {
        std::ofstream out(dir / "bad.json");
        out << R"({"learninq_rate": 0.05})";
    }
    CHECK_THROWS_AS(loadTrainConfig(dir / "bad.json", base), ConfigError);
}
