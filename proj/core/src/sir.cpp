#include "epidhgnn/sir.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "epidhgnn/errors.hpp"

namespace epidhgnn {

namespace {

using nlohmann::json;

double edgePressure(int num_infected, double beta, double nu) {
    if (num_infected <= 0) return 0.0;
    return 1.0 - std::pow(1.0 - beta, std::pow(static_cast<double>(num_infected), nu));
}

}  // namespace

void PathogenParams::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0,1]");
    if (!(nu > 0.0)) throw ConfigError("nu must be positive");
    if (num_sources < 1) throw ConfigError("num_sources must be at least 1");
}

std::pair<PathogenParams, std::optional<std::uint64_t>> PathogenParams::fromJsonFile(
    const std::filesystem::path& path) {
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

    PathogenParams p;
    std::optional<std::uint64_t> seed;
    for (const auto& [key, value] : j.items()) {
        if (key == "beta") p.beta = value.get<double>();
        else if (key == "gamma") p.gamma = value.get<double>();
        else if (key == "nu") p.nu = value.get<double>();
        else if (key == "num_sources") p.num_sources = value.get<int>();
        else if (key == "seed") seed = value.get<std::uint64_t>();
        else if (key == "mode") {
            const auto m = value.get<std::string>();
            if (m == "hyperedge") p.mode = SirMode::Hyperedge;
            else if (m == "pairwise") p.mode = SirMode::Pairwise;
            else throw ConfigError(path.string() + ": mode must be 'hyperedge' or 'pairwise'");
        } else {
            throw ConfigError(path.string() + ": unknown key '" + key + "'");
        }
    }
    for (const char* required : {"beta", "gamma", "nu", "num_sources", "mode"}) {
        if (!j.contains(required)) {
            throw ConfigError(path.string() + ": missing mandatory key '" + std::string(required) + "'");
        }
    }
    p.validate();
    return {p, seed};
}

std::vector<int> seedInfection(int num_individuals, int num_sources, Rng& rng) {
    if (num_sources < 1 || num_sources > num_individuals) {
        throw ConfigError("num_sources must lie in [1, N]; got " + std::to_string(num_sources) +
                          " with N=" + std::to_string(num_individuals));
    }
    const auto picks = rng.sampleWithoutReplacement(num_individuals, num_sources);
    std::vector<int> sources(picks.begin(), picks.end());
    std::sort(sources.begin(), sources.end());
    return sources;
}

std::vector<SirState> initialFrame(int num_individuals, std::span<const int> sources) {
    std::vector<SirState> frame(static_cast<std::size_t>(num_individuals), SirState::Susceptible);
    for (const int s : sources) frame[static_cast<std::size_t>(s)] = SirState::Infected;
    return frame;
}

std::vector<SirState> stepSir(const IncidenceMatrix& incidence, const std::vector<SirState>& frame,
                              const PathogenParams& params, Rng& rng) {
    const Eigen::VectorXd p = expectedInfectionProb(incidence, frame, params);
    const int n = static_cast<int>(frame.size());
    std::vector<SirState> next = frame;
    for (int v = 0; v < n; ++v) {
        switch (frame[static_cast<std::size_t>(v)]) {
            case SirState::Susceptible:
                if (p[v] > 0.0 && rng.bernoulli(p[v])) next[static_cast<std::size_t>(v)] = SirState::Infected;
                break;
            case SirState::Infected:
                if (rng.bernoulli(params.gamma)) next[static_cast<std::size_t>(v)] = SirState::Recovered;
                break;
            default:
                break;  // Recovered is absorbing; Masked never reaches the simulator.
        }
    }
    return next;
}

std::vector<SirState> stepSirPairwise(std::span<const std::pair<int, int>> mask,
                                      const std::vector<SirState>& frame,
                                      const PathogenParams& params, Rng& rng) {
    const int n = static_cast<int>(frame.size());
    // Attempts are ordered by (pair, direction) so transitions depend only on
    // the mask and rng stream.
    std::vector<bool> hit(static_cast<std::size_t>(n), false);
    for (const auto& [u, v] : mask) {
        const bool u_inf = frame[static_cast<std::size_t>(u)] == SirState::Infected;
        const bool v_inf = frame[static_cast<std::size_t>(v)] == SirState::Infected;
        if (u_inf && frame[static_cast<std::size_t>(v)] == SirState::Susceptible) {
            if (rng.bernoulli(params.beta)) hit[static_cast<std::size_t>(v)] = true;
        }
        if (v_inf && frame[static_cast<std::size_t>(u)] == SirState::Susceptible) {
            if (rng.bernoulli(params.beta)) hit[static_cast<std::size_t>(u)] = true;
        }
    }
    std::vector<SirState> next = frame;
    for (int v = 0; v < n; ++v) {
        switch (frame[static_cast<std::size_t>(v)]) {
            case SirState::Susceptible:
                if (hit[static_cast<std::size_t>(v)]) next[static_cast<std::size_t>(v)] = SirState::Infected;
                break;
            case SirState::Infected:
                if (rng.bernoulli(params.gamma)) next[static_cast<std::size_t>(v)] = SirState::Recovered;
                break;
            default:
                break;
        }
    }
    return next;
}

Eigen::VectorXd expectedInfectionProb(const IncidenceMatrix& incidence,
                                      const std::vector<SirState>& frame,
                                      const PathogenParams& params) {
    if (static_cast<int>(frame.size()) != incidence.numIndividuals()) {
        throw ConfigError("state frame has " + std::to_string(frame.size()) +
                          " entries but the incidence matrix has " +
                          std::to_string(incidence.numIndividuals()) + " individuals");
    }
    const auto& H = incidence.matrix();
    const int num_edges = incidence.numLocations();

    Eigen::VectorXi infected_per_edge = Eigen::VectorXi::Zero(num_edges);
    for (int e = 0; e < H.outerSize(); ++e) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(H, e); it; ++it) {
            if (frame[static_cast<std::size_t>(it.row())] == SirState::Infected) {
                infected_per_edge[it.col()] += 1;
            }
        }
    }
    Eigen::VectorXd pressure(num_edges);
    for (int e = 0; e < num_edges; ++e) {
        pressure[e] = edgePressure(infected_per_edge[e], params.beta, params.nu);
    }

    Eigen::VectorXd escape = Eigen::VectorXd::Ones(incidence.numIndividuals());
    for (int e = 0; e < H.outerSize(); ++e) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(H, e); it; ++it) {
            escape[it.row()] *= 1.0 - pressure[it.col()];
        }
    }
    Eigen::VectorXd p = Eigen::VectorXd::Zero(incidence.numIndividuals());
    for (int v = 0; v < incidence.numIndividuals(); ++v) {
        if (frame[static_cast<std::size_t>(v)] == SirState::Susceptible) p[v] = 1.0 - escape[v];
    }
    return p;
}

Eigen::VectorXd expectedInfectionProbPairwise(const DynamicHypergraph& hypergraph,
                                              const Population& population,
                                              const ContactConfig& contact, int t,
                                              const std::vector<SirState>& frame,
                                              const PathogenParams& params) {
    const int n = hypergraph.numIndividuals();
    Eigen::VectorXd escape = Eigen::VectorXd::Ones(n);
    const auto fr = hypergraph.frame(t);
    std::size_t i = 0;
    while (i < fr.size()) {
        const int loc = fr[i].location;
        std::size_t j = i;
        while (j < fr.size() && fr[j].location == loc) ++j;
        for (std::size_t a = i; a < j; ++a) {
            for (std::size_t b = a + 1; b < j; ++b) {
                const int u = fr[a].individual;
                const int v = fr[b].individual;
                const bool u_inf = frame[static_cast<std::size_t>(u)] == SirState::Infected;
                const bool v_inf = frame[static_cast<std::size_t>(v)] == SirState::Infected;
                if (u_inf == v_inf) continue;
                const double p_pair = population.acquainted(u, v) ? contact.acquaintance_infect_prob
                                                                  : contact.stranger_infect_prob;
                const int target = u_inf ? v : u;
                escape[target] *= 1.0 - p_pair * params.beta;
            }
        }
        i = j;
    }
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < n; ++v) {
        if (frame[static_cast<std::size_t>(v)] == SirState::Susceptible) p[v] = 1.0 - escape[v];
    }
    return p;
}

SirEpisode runSir(const DynamicHypergraph& hypergraph, const PathogenParams& params, int T, Rng rng,
                  const Population* population, const ContactConfig* contact) {
    params.validate();
    if (T < 1) throw ConfigError("episode length T must be at least 1");
    if (T > hypergraph.numTimesteps()) {
        throw ConfigError("episode length " + std::to_string(T) + " exceeds hypergraph timesteps " +
                          std::to_string(hypergraph.numTimesteps()));
    }
    if (params.mode == SirMode::Pairwise && (population == nullptr || contact == nullptr)) {
        throw ConfigError("pairwise mode requires population and contact config");
    }

    const int n = hypergraph.numIndividuals();
    Rng seed_rng = rng.stream("init");
    Rng step_rng = rng.stream("steps");

    SirEpisode episode;
    episode.sources = seedInfection(n, params.num_sources, seed_rng);
    episode.states = StateSequence(n, T);
    std::vector<SirState> frame = initialFrame(n, episode.sources);
    episode.states.setFrame(0, frame);

    for (int t = 0; t + 1 < T; ++t) {
        if (params.mode == SirMode::Hyperedge) {
            const IncidenceMatrix incidence = hypergraph.incidence(t);
            frame = stepSir(incidence, frame, params, step_rng);
        } else {
            Rng mask_rng = rng.stream("mask", static_cast<std::uint64_t>(t));
            const auto mask = strangerContactMask(hypergraph, *population, *contact, t, mask_rng);
            frame = stepSirPairwise(mask, frame, params, step_rng);
        }
        episode.states.setFrame(t + 1, frame);
    }
    return episode;
}

}  // namespace epidhgnn
