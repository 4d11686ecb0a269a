#include "epidhgnn/hypergraph.hpp"

#include <algorithm>
#include <sstream>

#include "epidhgnn/errors.hpp"

namespace epidhgnn {

namespace {

std::string tripleStr(const Contact& c) {
    std::ostringstream os;
    os << "(t=" << c.t << ", location=" << c.location << ", individual=" << c.individual << ")";
    return os.str();
}

}  // namespace

Eigen::VectorXd IncidenceMatrix::rowSums() const {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(num_individuals_);
    for (int k = 0; k < matrix_.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it) {
            sums[it.row()] += it.value();
        }
    }
    return sums;
}

Eigen::VectorXd IncidenceMatrix::colSums() const {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(num_locations_);
    for (int k = 0; k < matrix_.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it) {
            sums[it.col()] += it.value();
        }
    }
    return sums;
}

IncidenceMatrix buildIncidence(std::span<const Contact> contacts, int num_individuals,
                               int num_locations) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(contacts.size());
    for (const Contact& c : contacts) {
        if (c.individual < 0 || c.individual >= num_individuals) {
            throw ConfigError("contact triple " + tripleStr(c) + " has individual_id outside [0, " +
                              std::to_string(num_individuals) + ")");
        }
        if (c.location < 0 || c.location >= num_locations) {
            throw ConfigError("contact triple " + tripleStr(c) + " has location_id outside [0, " +
                              std::to_string(num_locations) + ")");
        }
        triplets.emplace_back(c.individual, c.location, 1.0);
    }
    Eigen::SparseMatrix<double> m(num_individuals, num_locations);
    m.setFromTriplets(triplets.begin(), triplets.end());
    // setFromTriplets sums duplicates; a 2 in the matrix means a repeated triple.
    for (int k = 0; k < m.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
            if (it.value() != 1.0) {
                throw ConfigError("duplicate contact triple (location=" + std::to_string(it.col()) +
                                  ", individual=" + std::to_string(it.row()) + ")");
            }
        }
    }
    m.makeCompressed();
    return IncidenceMatrix(num_individuals, num_locations, std::move(m));
}

Eigen::VectorXd DegreeOperators::nodeInvSqrt() const {
    return node_degree.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
}

Eigen::VectorXd DegreeOperators::edgeInv() const {
    return edge_degree.unaryExpr([](double d) { return d > 0.0 ? 1.0 / d : 0.0; });
}

DegreeOperators degreeOperators(const IncidenceMatrix& incidence) {
    return degreeOperators(incidence, Eigen::VectorXd::Ones(incidence.numLocations()));
}

DegreeOperators degreeOperators(const IncidenceMatrix& incidence,
                                const Eigen::VectorXd& edge_weights) {
    if (edge_weights.size() != incidence.numLocations()) {
        throw ConfigError("edge weight vector has length " + std::to_string(edge_weights.size()) +
                          " but the incidence matrix has " +
                          std::to_string(incidence.numLocations()) + " hyperedges");
    }
    DegreeOperators ops;
    ops.edge_weights = edge_weights;
    ops.edge_degree = incidence.colSums();
    ops.node_degree = Eigen::VectorXd::Zero(incidence.numIndividuals());
    const auto& m = incidence.matrix();
    for (int k = 0; k < m.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
            ops.node_degree[it.row()] += it.value() * edge_weights[it.col()];
        }
    }
    return ops;
}

DynamicHypergraph::DynamicHypergraph(int num_individuals, int num_locations, int num_timesteps,
                                     std::vector<Contact> contacts)
    : num_individuals_(num_individuals),
      num_locations_(num_locations),
      num_timesteps_(num_timesteps),
      contacts_(std::move(contacts)) {
    if (num_individuals_ < 0 || num_locations_ < 0 || num_timesteps_ < 0) {
        throw ConfigError("hypergraph dimensions must be nonnegative");
    }
    std::sort(contacts_.begin(), contacts_.end());
    for (std::size_t i = 0; i < contacts_.size(); ++i) {
        const Contact& c = contacts_[i];
        if (c.t < 0 || c.t >= num_timesteps_) {
            throw ConfigError("contact triple " + tripleStr(c) + " has timestep outside [0, " +
                              std::to_string(num_timesteps_) + ")");
        }
        if (c.location < 0 || c.location >= num_locations_) {
            throw ConfigError("contact triple " + tripleStr(c) + " has location_id outside [0, " +
                              std::to_string(num_locations_) + ")");
        }
        if (c.individual < 0 || c.individual >= num_individuals_) {
            throw ConfigError("contact triple " + tripleStr(c) + " has individual_id outside [0, " +
                              std::to_string(num_individuals_) + ")");
        }
        if (i > 0 && contacts_[i - 1] == c) {
            throw ConfigError("duplicate contact triple " + tripleStr(c));
        }
    }

    frame_offsets_.assign(static_cast<std::size_t>(num_timesteps_) + 1, 0);
    std::size_t pos = 0;
    for (int t = 0; t < num_timesteps_; ++t) {
        frame_offsets_[static_cast<std::size_t>(t)] = pos;
        const std::size_t begin = pos;
        while (pos < contacts_.size() && contacts_[pos].t == t) ++pos;
        if (pos == begin) {
            throw ConfigError("non-contiguous timesteps: no contacts at timestep " +
                              std::to_string(t) + " (declared num_timesteps = " +
                              std::to_string(num_timesteps_) + ")");
        }
    }
    frame_offsets_[static_cast<std::size_t>(num_timesteps_)] = contacts_.size();
}

std::span<const Contact> DynamicHypergraph::frame(int t) const {
    if (t < 0 || t >= num_timesteps_) {
        throw ConfigError("timestep " + std::to_string(t) + " outside [0, " +
                          std::to_string(num_timesteps_) + ")");
    }
    const auto begin = frame_offsets_[static_cast<std::size_t>(t)];
    const auto end = frame_offsets_[static_cast<std::size_t>(t) + 1];
    return {contacts_.data() + begin, end - begin};
}

IncidenceMatrix DynamicHypergraph::incidence(int t) const {
    return buildIncidence(frame(t), num_individuals_, num_locations_);
}

std::vector<std::int64_t> DynamicHypergraph::locationContactCounts() const {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(num_locations_), 0);
    for (const Contact& c : contacts_) counts[static_cast<std::size_t>(c.location)]++;
    return counts;
}

char sirStateChar(SirState s) {
    switch (s) {
        case SirState::Susceptible: return 'S';
        case SirState::Infected: return 'I';
        case SirState::Recovered: return 'R';
        case SirState::Masked: return '?';
    }
    return '?';
}

SirState sirStateFromChar(char c) {
    switch (c) {
        case 'S': return SirState::Susceptible;
        case 'I': return SirState::Infected;
        case 'R': return SirState::Recovered;
        default:
            throw ConfigError(std::string("state string outside {S,I,R}: '") + c + "'");
    }
}

StateSequence::StateSequence(int num_individuals, int num_timesteps, SirState fill)
    : num_individuals_(num_individuals),
      frames_(static_cast<std::size_t>(num_timesteps),
              std::vector<SirState>(static_cast<std::size_t>(num_individuals), fill)) {}

void StateSequence::setFrame(int t, std::vector<SirState> frame) {
    if (static_cast<int>(frame.size()) != num_individuals_) {
        throw RuntimeError("state frame has " + std::to_string(frame.size()) + " entries, expected " +
                           std::to_string(num_individuals_));
    }
    frames_[static_cast<std::size_t>(t)] = std::move(frame);
}

Eigen::MatrixXd StateSequence::onehot(int t) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_individuals_, 3);
    const auto& f = frames_[static_cast<std::size_t>(t)];
    for (int v = 0; v < num_individuals_; ++v) {
        const SirState s = f[static_cast<std::size_t>(v)];
        if (s != SirState::Masked) m(v, static_cast<int>(s)) = 1.0;
    }
    return m;
}

int StateSequence::countState(int t, SirState s) const {
    const auto& f = frames_[static_cast<std::size_t>(t)];
    return static_cast<int>(std::count(f.begin(), f.end(), s));
}

void StateSequence::validateMonotone() const {
    for (int v = 0; v < num_individuals_; ++v) {
        int phase = 0;  // 0 = S, 1 = I, 2 = R
        for (int t = 0; t < numTimesteps(); ++t) {
            const SirState s = at(t, v);
            if (s == SirState::Masked) continue;
            const int p = static_cast<int>(s);
            if (p < phase) {
                throw RuntimeError("individual " + std::to_string(v) + " moves from state " +
                                   std::string(1, "SIR"[phase]) + " back to " +
                                   std::string(1, sirStateChar(s)) + " at timestep " +
                                   std::to_string(t));
            }
            phase = p;
        }
    }
}

void TimeSplit::validate(int num_timesteps) const {
    const int last = num_timesteps - 1;
    if (!(0 <= tsh && tsh <= ks && ks <= ps && ps <= last)) {
        throw ConfigError("time split must satisfy 0 <= tsh <= ks <= ps <= T (last timestep index T=" +
                          std::to_string(last) + "); got tsh=" + std::to_string(tsh) +
                          " ks=" + std::to_string(ks) + " ps=" + std::to_string(ps));
    }
}

StateSequence maskStates(const StateSequence& states, const TimeSplit& split) {
    if (!(0 <= split.tsh && split.tsh <= split.ks && split.ks < states.numTimesteps())) {
        throw ConfigError("mask split must satisfy 0 <= tsh <= ks < T; got tsh=" +
                          std::to_string(split.tsh) + " ks=" + std::to_string(split.ks) +
                          " T=" + std::to_string(states.numTimesteps()));
    }
    StateSequence out(states.numIndividuals(), split.ks + 1, SirState::Masked);
    for (int t = split.tsh; t <= split.ks; ++t) {
        out.setFrame(t, states.frame(t));
    }
    return out;
}

}  // namespace epidhgnn
