#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <span>
#include <vector>

namespace epidhgnn {

/// One incidence record: individual `individual` was at location `location`
/// during timestep `t`. Canonical order is (t, location, individual).
struct Contact {
    int t = 0;
    int location = 0;
    int individual = 0;

    friend bool operator==(const Contact&, const Contact&) = default;
    friend auto operator<=>(const Contact& a, const Contact& b) {
        if (auto c = a.t <=> b.t; c != 0) return c;
        if (auto c = a.location <=> b.location; c != 0) return c;
        return a.individual <=> b.individual;
    }
};

/// Binary node x hyperedge membership matrix for a single timestep.
class IncidenceMatrix {
public:
    IncidenceMatrix(int num_individuals, int num_locations,
                    Eigen::SparseMatrix<double> matrix)
        : num_individuals_(num_individuals),
          num_locations_(num_locations),
          matrix_(std::move(matrix)) {}

    int numIndividuals() const { return num_individuals_; }
    int numLocations() const { return num_locations_; }
    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

    /// Node degrees (row sums).
    Eigen::VectorXd rowSums() const;
    /// Edge degrees (column sums).
    Eigen::VectorXd colSums() const;

private:
    int num_individuals_;
    int num_locations_;
    Eigen::SparseMatrix<double> matrix_;  // N x E
};

/// Builds the incidence matrix for one timestep from its contact triples.
/// The `t` field of the triples is ignored; indices are validated against
/// [0, N) x [0, E) and duplicates are rejected.
IncidenceMatrix buildIncidence(std::span<const Contact> contacts, int num_individuals,
                               int num_locations);

/// Diagonal degree operators for one incidence matrix. Inverse operators use
/// the pseudo-inverse convention 1/0 = 0 so empty rows and columns stay zero.
struct DegreeOperators {
    Eigen::VectorXd node_degree;  // N; weighted row sums sum_e H[v][e] * W[e]
    Eigen::VectorXd edge_degree;  // E; column sums sum_v H[v][e]
    Eigen::VectorXd edge_weights; // E; diagonal of W

    Eigen::VectorXd nodeInvSqrt() const;
    Eigen::VectorXd edgeInv() const;
};

DegreeOperators degreeOperators(const IncidenceMatrix& incidence);
DegreeOperators degreeOperators(const IncidenceMatrix& incidence,
                                const Eigen::VectorXd& edge_weights);

/// Fixed node/location universes plus per-timestep incidence records.
/// Immutable after construction; all members are safe to share across threads.
class DynamicHypergraph {
public:
    /// Validates bounds, rejects duplicate triples, and requires the set of
    /// timestep values present to be exactly {0, ..., T-1} (an empty contact
    /// set is legal only with T = 0). Contacts are stored in canonical order.
    DynamicHypergraph(int num_individuals, int num_locations, int num_timesteps,
                      std::vector<Contact> contacts);

    int numIndividuals() const { return num_individuals_; }
    int numLocations() const { return num_locations_; }
    int numTimesteps() const { return num_timesteps_; }

    const std::vector<Contact>& contacts() const { return contacts_; }
    std::span<const Contact> frame(int t) const;

    IncidenceMatrix incidence(int t) const;

    /// Total contact count per location over all timesteps.
    std::vector<std::int64_t> locationContactCounts() const;

    friend bool operator==(const DynamicHypergraph&, const DynamicHypergraph&) = default;

private:
    int num_individuals_;
    int num_locations_;
    int num_timesteps_;
    std::vector<Contact> contacts_;          // sorted by (t, location, individual)
    std::vector<std::size_t> frame_offsets_; // size T+1
};

enum class SirState : std::uint8_t {
    Susceptible = 0,
    Infected = 1,
    Recovered = 2,
    Masked = 3,
};

char sirStateChar(SirState s);
SirState sirStateFromChar(char c);

/// Per-timestep SIR state of every individual. The dense one-hot encoding
/// (N x 3 per frame, all-zero rows for masked entries) is materialized on
/// demand via `onehot`.
class StateSequence {
public:
    StateSequence() : num_individuals_(0) {}
    StateSequence(int num_individuals, int num_timesteps, SirState fill = SirState::Susceptible);

    int numIndividuals() const { return num_individuals_; }
    int numTimesteps() const { return static_cast<int>(frames_.size()); }

    SirState at(int t, int individual) const {
        return frames_[static_cast<std::size_t>(t)][static_cast<std::size_t>(individual)];
    }
    void set(int t, int individual, SirState s) {
        frames_[static_cast<std::size_t>(t)][static_cast<std::size_t>(individual)] = s;
    }

    const std::vector<SirState>& frame(int t) const {
        return frames_[static_cast<std::size_t>(t)];
    }
    void setFrame(int t, std::vector<SirState> frame);

    /// N x 3 one-hot frame; masked individuals get an all-zero row.
    Eigen::MatrixXd onehot(int t) const;

    int countState(int t, SirState s) const;

    /// Checks that no individual ever leaves Recovered and that every entry
    /// follows the S* I* R* pattern over time. Throws on violation.
    void validateMonotone() const;

    friend bool operator==(const StateSequence&, const StateSequence&) = default;

private:
    int num_individuals_;
    std::vector<std::vector<SirState>> frames_;
};

/// Observation boundaries: states are hidden before tsh, observed on
/// [tsh, ks], and predicted over (ks, ps].
struct TimeSplit {
    int tsh = 0;
    int ks = 0;
    int ps = 0;

    /// Requires 0 <= tsh <= ks <= ps <= last timestep index (num_timesteps - 1).
    void validate(int num_timesteps) const;
};

/// Observable view of `states` under `split`: frames before tsh are masked to
/// all-zero rows, frames in [tsh, ks] pass through, frames after ks are
/// dropped. The result has ks + 1 frames. Idempotent.
StateSequence maskStates(const StateSequence& states, const TimeSplit& split);

}  // namespace epidhgnn
