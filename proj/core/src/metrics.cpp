#include "epidhgnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epidhgnn/errors.hpp"

namespace epidhgnn {

namespace {

// Node ids ordered by descending score, ties broken by ascending id.
std::vector<int> rankOrder(const Eigen::VectorXd& scores) {
    std::vector<int> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

double f1FromCounts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double mrr(const Eigen::VectorXd& scores, std::span<const int> sources) {
    if (sources.empty()) throw ConfigError("mrr requires a non-empty source set");
    const auto order = rankOrder(scores);
    std::vector<int> rank_of(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        rank_of[static_cast<std::size_t>(order[r])] = static_cast<int>(r) + 1;
    }
    double sum = 0.0;
    for (const int s : sources) sum += 1.0 / rank_of[static_cast<std::size_t>(s)];
    return sum / static_cast<double>(sources.size());
}

double hitAtK(const Eigen::VectorXd& scores, std::span<const int> sources, int k) {
    if (sources.empty()) throw ConfigError("hit@k requires a non-empty source set");
    if (k < 1) throw ConfigError("hit@k requires k >= 1");
    const auto order = rankOrder(scores);
    const int top = std::min<int>(k, static_cast<int>(order.size()));
    std::vector<bool> in_top(order.size(), false);
    for (int r = 0; r < top; ++r) in_top[static_cast<std::size_t>(order[r])] = true;
    int hits = 0;
    for (const int s : sources) hits += in_top[static_cast<std::size_t>(s)] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(sources.size());
}

double f1Score(const Eigen::VectorXd& probs, std::span<const std::uint8_t> labels,
               double threshold) {
    if (static_cast<std::size_t>(probs.size()) != labels.size()) {
        throw ConfigError("f1: probs and labels length mismatch");
    }
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const bool pred = probs[i] > threshold;
        const bool truth = labels[static_cast<std::size_t>(i)] != 0;
        if (pred && truth) ++tp;
        else if (pred && !truth) ++fp;
        else if (!pred && truth) ++fn;
    }
    return f1FromCounts(tp, fp, fn);
}

double auroc(const Eigen::VectorXd& probs, std::span<const std::uint8_t> labels) {
    if (static_cast<std::size_t>(probs.size()) != labels.size()) {
        throw ConfigError("auroc: probs and labels length mismatch");
    }
    std::int64_t num_pos = 0;
    for (const auto y : labels) num_pos += y != 0 ? 1 : 0;
    const std::int64_t num_neg = static_cast<std::int64_t>(labels.size()) - num_pos;
    if (num_pos == 0 || num_neg == 0) {
        throw ConfigError("auroc requires both classes present");
    }

    std::vector<int> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] < probs[b]; });

    // Average ranks within tie groups (Mann-Whitney with tie correction).
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && probs[order[j]] == probs[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t r = i; r < j; ++r) {
            if (labels[static_cast<std::size_t>(order[r])] != 0) pos_rank_sum += avg_rank;
        }
        i = j;
    }
    const double u = pos_rank_sum - static_cast<double>(num_pos) * (static_cast<double>(num_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(num_pos) * static_cast<double>(num_neg));
}

QuantileReport quantileContactReport(std::span<const std::int64_t> location_contact_counts,
                                     const Eigen::VectorXd& pattern_scores,
                                     std::span<const std::uint8_t> labels,
                                     std::span<const int> pair_locations) {
    if (static_cast<std::size_t>(pattern_scores.size()) != labels.size() ||
        labels.size() != pair_locations.size()) {
        throw ConfigError("quantile report: scores, labels, and pair locations must align");
    }
    const int num_locations = static_cast<int>(location_contact_counts.size());

    QuantileReport report;
    report.overall_f1 = f1Score(pattern_scores, labels);

    std::vector<int> quantile_of(static_cast<std::size_t>(num_locations), 0);
    int num_buckets = 4;
    if (num_locations < 4) {
        // Single-bucket fallback.
        report.degenerate = true;
        num_buckets = 1;
    } else {
        std::vector<int> order(static_cast<std::size_t>(num_locations));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (location_contact_counts[static_cast<std::size_t>(a)] !=
                location_contact_counts[static_cast<std::size_t>(b)]) {
                return location_contact_counts[static_cast<std::size_t>(a)] <
                       location_contact_counts[static_cast<std::size_t>(b)];
            }
            return a < b;
        });
        for (int i = 0; i < num_locations; ++i) {
            int q = static_cast<int>((static_cast<std::int64_t>(i) * 4) / num_locations);
            // Boundary ties fall into the lower quantile.
            if (i > 0 && location_contact_counts[static_cast<std::size_t>(order[i])] ==
                             location_contact_counts[static_cast<std::size_t>(order[i - 1])]) {
                q = quantile_of[static_cast<std::size_t>(order[i - 1])];
            }
            quantile_of[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = q;
        }
        bool any_beyond_first = false;
        for (const int q : quantile_of) any_beyond_first |= q != 0;
        report.degenerate = !any_beyond_first;
    }

    report.buckets.assign(static_cast<std::size_t>(num_buckets), QuantileBucket{});
    for (int q = 0; q < num_buckets; ++q) {
        auto& bucket = report.buckets[static_cast<std::size_t>(q)];
        bool first = true;
        for (int loc = 0; loc < num_locations; ++loc) {
            if (quantile_of[static_cast<std::size_t>(loc)] != q) continue;
            const std::int64_t c = location_contact_counts[static_cast<std::size_t>(loc)];
            bucket.count_min = first ? c : std::min(bucket.count_min, c);
            bucket.count_max = first ? c : std::max(bucket.count_max, c);
            bucket.num_locations += 1;
            first = false;
        }
        std::vector<double> scores;
        std::vector<std::uint8_t> bucket_labels;
        for (std::size_t p = 0; p < pair_locations.size(); ++p) {
            const int loc = pair_locations[p];
            if (loc < 0 || loc >= num_locations) {
                throw ConfigError("quantile report: pair location id out of range");
            }
            if (quantile_of[static_cast<std::size_t>(loc)] != q) continue;
            scores.push_back(pattern_scores[static_cast<Eigen::Index>(p)]);
            bucket_labels.push_back(labels[p]);
        }
        bucket.num_pairs = static_cast<int>(scores.size());
        if (!scores.empty()) {
            Eigen::VectorXd s = Eigen::Map<Eigen::VectorXd>(scores.data(),
                                                            static_cast<Eigen::Index>(scores.size()));
            bucket.f1 = f1Score(s, bucket_labels);
        }
    }
    return report;
}

namespace {

PopulationCurve curveFromPredictions(const std::vector<double>& predicted,
                                     const StateSequence& truth, const TimeSplit& split) {
    split.validate(truth.numTimesteps());
    if (split.ps == split.ks) throw ConfigError("population curve requires a nonempty horizon");

    PopulationCurve curve;
    const int horizon = split.ps - split.ks;
    const double naive = static_cast<double>(truth.countState(split.ks, SirState::Infected));
    double err = 0.0, naive_err = 0.0;
    for (int h = 0; h < horizon; ++h) {
        const int t = split.ks + 1 + h;
        const double actual = static_cast<double>(truth.countState(t, SirState::Infected));
        curve.timesteps.push_back(t);
        curve.predicted.push_back(predicted[static_cast<std::size_t>(h)]);
        curve.actual.push_back(actual);
        err += std::abs(predicted[static_cast<std::size_t>(h)] - actual);
        naive_err += std::abs(naive - actual);
    }
    curve.mae = err / horizon;
    curve.naive_mae = naive_err / horizon;
    return curve;
}

}  // namespace

PopulationCurve populationCurve(const Eigen::VectorXd& window_probs, const StateSequence& truth,
                                const TimeSplit& split) {
    const double total = window_probs.sum();
    std::vector<double> predicted(static_cast<std::size_t>(split.ps - split.ks), total);
    return curveFromPredictions(predicted, truth, split);
}

PopulationCurve populationCurve(const Eigen::MatrixXd& probs_per_step, const StateSequence& truth,
                                const TimeSplit& split) {
    if (probs_per_step.rows() != split.ps - split.ks) {
        throw ConfigError("population curve: per-step probability rows must match the horizon");
    }
    std::vector<double> predicted;
    for (Eigen::Index h = 0; h < probs_per_step.rows(); ++h) {
        predicted.push_back(probs_per_step.row(h).sum());
    }
    return curveFromPredictions(predicted, truth, split);
}

MetricSummary summarize(std::span<const double> per_seed) {
    if (per_seed.empty()) throw ConfigError("metric summary requires at least one seed");
    MetricSummary s;
    s.per_seed.assign(per_seed.begin(), per_seed.end());
    s.mean = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) /
             static_cast<double>(per_seed.size());
    double var = 0.0;
    for (const double v : per_seed) var += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(per_seed.size()));
    return s;
}

}  // namespace epidhgnn
