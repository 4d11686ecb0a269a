#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "epidhgnn/hypergraph.hpp"

namespace epidhgnn {

/// Mean reciprocal rank of the ground-truth sources under a descending-score
/// ranking; ties are broken by ascending node id.
double mrr(const Eigen::VectorXd& scores, std::span<const int> sources);

/// Fraction of sources in the top k of the same ranking.
double hitAtK(const Eigen::VectorXd& scores, std::span<const int> sources, int k);

/// F1 at a decision threshold (predicted positive iff prob > threshold).
/// Returns 0 when precision + recall is 0.
double f1Score(const Eigen::VectorXd& probs, std::span<const std::uint8_t> labels,
               double threshold = 0.5);

/// Mann-Whitney AUROC: the probability that a random positive outscores a
/// random negative, ties counting 1/2. Requires both classes present.
double auroc(const Eigen::VectorXd& probs, std::span<const std::uint8_t> labels);

/// Per-quantile contact-prediction quality. Locations are sorted ascending by
/// total contact count and split into four quantiles; locations whose count
/// ties the preceding quantile's boundary fall into the lower quantile.
struct QuantileBucket {
    std::int64_t count_min = 0;
    std::int64_t count_max = 0;
    int num_locations = 0;
    int num_pairs = 0;
    double f1 = 0.0;
};

struct QuantileReport {
    std::vector<QuantileBucket> buckets;  // 4 in the regular case
    double overall_f1 = 0.0;
    bool degenerate = false;  // fewer than 4 locations or all counts equal
};

QuantileReport quantileContactReport(std::span<const std::int64_t> location_contact_counts,
                                     const Eigen::VectorXd& pattern_scores,
                                     std::span<const std::uint8_t> labels,
                                     std::span<const int> pair_locations);

/// Population-level infection curve over the horizon (ks, ps] plus MAE against
/// the truth and against the naive model that repeats the infected count
/// observed at ks.
struct PopulationCurve {
    std::vector<int> timesteps;
    std::vector<double> predicted;
    std::vector<double> actual;
    double mae = 0.0;
    double naive_mae = 0.0;
};

/// Window-probability variant: one probability per node, held constant over
/// the horizon.
PopulationCurve populationCurve(const Eigen::VectorXd& window_probs, const StateSequence& truth,
                                const TimeSplit& split);

/// Per-timestep variant: probs(row h) are the per-node probabilities for
/// horizon step ks+1+h.
PopulationCurve populationCurve(const Eigen::MatrixXd& probs_per_step, const StateSequence& truth,
                                const TimeSplit& split);

/// Mean and standard deviation (population convention) with per-seed values.
struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> per_seed;
};

MetricSummary summarize(std::span<const double> per_seed);

struct MetricReport {
    std::string task;
    TimeSplit split;
    std::map<std::string, MetricSummary> metrics;
};

}  // namespace epidhgnn
