#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "epidhgnn/episim.hpp"
#include "epidhgnn/hypergraph.hpp"
#include "epidhgnn/rng.hpp"

namespace epidhgnn {

enum class SirMode { Hyperedge, Pairwise };

/// Stochastic propagation parameters. In hyperedge mode a susceptible member
/// of edge e with I_e infected members sees edge pressure
/// f(I_e) = 1 - (1-beta)^(I_e^nu) and is infected with probability
/// 1 - prod_e (1 - f(I_e)); nu = 1 recovers independent per-contact
/// transmission. In pairwise mode infection attempts run only along the
/// stranger-contact mask with per-pair probability beta.
struct PathogenParams {
    double beta = 0.05;
    double gamma = 0.1;
    double nu = 1.0;
    int num_sources = 1;
    SirMode mode = SirMode::Hyperedge;

    void validate() const;
    /// Reads pathogen.json (keys beta, gamma, nu, num_sources, mode; optional
    /// seed returned separately). Unknown keys are rejected.
    static std::pair<PathogenParams, std::optional<std::uint64_t>> fromJsonFile(
        const std::filesystem::path& path);
};

/// Uniformly chosen distinct source individuals; the detection ground truth.
std::vector<int> seedInfection(int num_individuals, int num_sources, Rng& rng);

/// Initial frame: sources Infected, everyone else Susceptible.
std::vector<SirState> initialFrame(int num_individuals, std::span<const int> sources);

/// Synchronous one-step update in hyperedge mode. Node order is the sampling
/// order, so identical rng streams reproduce identical transitions.
std::vector<SirState> stepSir(const IncidenceMatrix& incidence, const std::vector<SirState>& frame,
                              const PathogenParams& params, Rng& rng);

/// Synchronous one-step update in pairwise mode along a precomputed mask.
std::vector<SirState> stepSirPairwise(std::span<const std::pair<int, int>> mask,
                                      const std::vector<SirState>& frame,
                                      const PathogenParams& params, Rng& rng);

/// Exact per-node one-step infection probabilities used inside stepSir
/// (hyperedge mode), with no sampling. Zero for non-susceptible nodes.
Eigen::VectorXd expectedInfectionProb(const IncidenceMatrix& incidence,
                                      const std::vector<SirState>& frame,
                                      const PathogenParams& params);

/// Pairwise-mode analogue, marginalizing over the mask sampling: a
/// susceptible v co-located with infected u is reached with probability
/// P_pair(u,v) * beta per neighbor, independently.
Eigen::VectorXd expectedInfectionProbPairwise(const DynamicHypergraph& hypergraph,
                                              const Population& population,
                                              const ContactConfig& contact, int t,
                                              const std::vector<SirState>& frame,
                                              const PathogenParams& params);

struct SirEpisode {
    StateSequence states;
    std::vector<int> sources;
};

/// Seeds an infection and runs T-1 synchronous steps over the hypergraph
/// frames. Pairwise mode requires the population and contact config used to
/// generate the hypergraph.
SirEpisode runSir(const DynamicHypergraph& hypergraph, const PathogenParams& params, int T, Rng rng,
                  const Population* population = nullptr, const ContactConfig* contact = nullptr);

}  // namespace epidhgnn
