#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <epidhgnn/errors.hpp>
#include <epidhgnn/sir.hpp>

#include <cmath>
#include <set>
#include <vector>

using namespace epidhgnn;

namespace {

IncidenceMatrix singleEdge(int n) {
    std::vector<Contact> contacts;
    for (int v = 0; v < n; ++v) contacts.push_back({0, 0, v});
    return buildIncidence(contacts, n, 1);
}

// Random partition-style fixture: every node in exactly one of `e` edges.
DynamicHypergraph randomHypergraph(int n, int e, int t_count, Rng& rng) {
    std::vector<Contact> contacts;
    for (int t = 0; t < t_count; ++t) {
        for (int v = 0; v < n; ++v) {
            contacts.push_back({t, static_cast<int>(rng.uniformInt(0, e - 1)), v});
        }
    }
    return DynamicHypergraph(n, e, t_count, contacts);
}

}  // namespace

TEST_CASE("seedInfection basics") {
    Rng rng(3);
    SUBCASE("one source among five") {
        const auto sources = seedInfection(5, 1, rng);
        CHECK(sources.size() == 1);
        const auto frame = initialFrame(5, sources);
        int infected = 0;
        for (const auto s : frame) infected += s == SirState::Infected ? 1 : 0;
        CHECK(infected == 1);
    }
    SUBCASE("num_sources = N infects everyone") {
        const auto sources = seedInfection(4, 4, rng);
        const auto frame = initialFrame(4, sources);
        for (const auto s : frame) CHECK(s == SirState::Infected);
    }
    SUBCASE("same seed, same sources") {
        Rng a(11), b(11);
        CHECK(seedInfection(100, 3, a) == seedInfection(100, 3, b));
    }
    SUBCASE("out of range rejected") {
        CHECK_THROWS_AS(seedInfection(5, 0, rng), ConfigError);
        CHECK_THROWS_AS(seedInfection(5, 6, rng), ConfigError);
    }
}

TEST_CASE("beta = 0 yields no new infections; gamma = 1 recovers everyone infected") {
    const auto inc = singleEdge(6);
    std::vector<SirState> frame(6, SirState::Susceptible);
    frame[0] = SirState::Infected;
    frame[1] = SirState::Infected;

    SUBCASE("beta = 0") {
        PathogenParams p{0.0, 0.5, 1.0, 1, SirMode::Hyperedge};
        Rng rng(4);
        for (int trial = 0; trial < 20; ++trial) {
            const auto next = stepSir(inc, frame, p, rng);
            for (int v = 2; v < 6; ++v) CHECK(next[static_cast<std::size_t>(v)] == SirState::Susceptible);
        }
    }
    SUBCASE("gamma = 1") {
        PathogenParams p{0.3, 1.0, 1.0, 1, SirMode::Hyperedge};
        Rng rng(4);
        const auto next = stepSir(inc, frame, p, rng);
        CHECK(next[0] == SirState::Recovered);
        CHECK(next[1] == SirState::Recovered);
    }
}

TEST_CASE("single-edge infection probability equals beta (Monte Carlo, 100k replicates)") {
    const auto inc = singleEdge(2);
    std::vector<SirState> frame = {SirState::Infected, SirState::Susceptible};
    PathogenParams p{0.3, 0.0, 1.0, 1, SirMode::Hyperedge};
    Rng rng(2024);
    const int replicates = 100000;
    int infections = 0;
    for (int i = 0; i < replicates; ++i) {
        const auto next = stepSir(inc, frame, p, rng);
        infections += next[1] == SirState::Infected ? 1 : 0;
    }
    const double freq = static_cast<double>(infections) / replicates;
    CHECK(std::abs(freq - 0.3) <= 0.005);
}

TEST_CASE("expectedInfectionProb closed forms") {
    SUBCASE("beta = 0 gives the zero vector") {
        const auto inc = singleEdge(4);
        std::vector<SirState> frame(4, SirState::Susceptible);
        frame[0] = SirState::Infected;
        PathogenParams p{0.0, 0.1, 1.0, 1, SirMode::Hyperedge};
        CHECK(expectedInfectionProb(inc, frame, p).isZero());
    }
    SUBCASE("two edges with one infected each: 1 - 0.5 * 0.5 = 0.75") {
        // v0 shares e0 with infected v1 and e1 with infected v2.
        const std::vector<Contact> contacts = {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 2}};
        const auto inc = buildIncidence(contacts, 3, 2);
        std::vector<SirState> frame = {SirState::Susceptible, SirState::Infected, SirState::Infected};
        PathogenParams p{0.5, 0.0, 1.0, 1, SirMode::Hyperedge};
        const auto probs = expectedInfectionProb(inc, frame, p);
        CHECK(probs[0] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(probs[1] == 0.0);  // non-susceptible
    }
    SUBCASE("shape mismatch rejected") {
        const auto inc = singleEdge(3);
        std::vector<SirState> frame(2, SirState::Susceptible);
        PathogenParams p;
        CHECK_THROWS_AS(expectedInfectionProb(inc, frame, p), ConfigError);
    }
}

TEST_CASE("empirical one-step frequencies match the closed form within 3-sigma") {
    Rng setup(17);
    const auto hg = randomHypergraph(10, 3, 1, setup);
    const auto inc = hg.incidence(0);
    std::vector<SirState> frame(10, SirState::Susceptible);
    frame[0] = SirState::Infected;
    frame[3] = SirState::Infected;
    frame[7] = SirState::Recovered;
    PathogenParams p{0.25, 0.0, 1.3, 1, SirMode::Hyperedge};

    const auto expected = expectedInfectionProb(inc, frame, p);
    const int replicates = 100000;
    Eigen::VectorXd hits = Eigen::VectorXd::Zero(10);
    Rng rng(99);
    for (int i = 0; i < replicates; ++i) {
        const auto next = stepSir(inc, frame, p, rng);
        for (int v = 0; v < 10; ++v) {
            if (frame[static_cast<std::size_t>(v)] == SirState::Susceptible &&
                next[static_cast<std::size_t>(v)] == SirState::Infected) {
                hits[v] += 1.0;
            }
        }
    }
    for (int v = 0; v < 10; ++v) {
        const double freq = hits[v] / replicates;
        const double sigma = std::sqrt(std::max(expected[v] * (1.0 - expected[v]), 1e-12) / replicates);
        CHECK(std::abs(freq - expected[v]) <= 3.0 * sigma + 1e-9);
    }
}

TEST_CASE("runSir conservation and monotonicity") {
    Rng setup(5);
    const auto hg = randomHypergraph(30, 4, 25, setup);
    PathogenParams p{0.1, 0.08, 1.0, 2, SirMode::Hyperedge};
    const auto episode = runSir(hg, p, 25, Rng(7));

    CHECK(episode.sources.size() == 2);
    for (const int s : episode.sources) {
        CHECK(episode.states.at(0, s) == SirState::Infected);
    }
    int prev_cumulative = 0;
    for (int t = 0; t < 25; ++t) {
        const int s = episode.states.countState(t, SirState::Susceptible);
        const int i = episode.states.countState(t, SirState::Infected);
        const int r = episode.states.countState(t, SirState::Recovered);
        CHECK(s + i + r == 30);  // conservation
        const int cumulative = i + r;
        CHECK(cumulative >= prev_cumulative);  // nondecreasing ever-infected
        prev_cumulative = cumulative;
    }
    episode.states.validateMonotone();  // S* I* R* per node
}

TEST_CASE("beta = gamma = 0 freezes the trajectory") {
    Rng setup(8);
    const auto hg = randomHypergraph(12, 2, 10, setup);
    PathogenParams p{0.0, 0.0, 1.0, 1, SirMode::Hyperedge};
    const auto episode = runSir(hg, p, 10, Rng(3));
    for (int t = 1; t < 10; ++t) {
        CHECK(episode.states.frame(t) == episode.states.frame(0));
    }
}

TEST_CASE("same seed reproduces the identical episode") {
    Rng setup(14);
    const auto hg = randomHypergraph(20, 3, 12, setup);
    PathogenParams p{0.15, 0.05, 1.0, 1, SirMode::Hyperedge};
    const auto a = runSir(hg, p, 12, Rng(55));
    const auto b = runSir(hg, p, 12, Rng(55));
    CHECK(a.sources == b.sources);
    CHECK(a.states == b.states);
}

namespace {

// Reference pairwise SIR on the clique expansion, by direct enumeration of
// per-contact transmissions. Used to pin down the nu = 1, small-edge case.
Eigen::VectorXd cliqueExpansionProb(const IncidenceMatrix& inc, const std::vector<SirState>& frame,
                                    double beta) {
    const int n = inc.numIndividuals();
    Eigen::VectorXd escape = Eigen::VectorXd::Ones(n);
    const auto& h = inc.matrix();
    for (int e = 0; e < h.outerSize(); ++e) {
        std::vector<int> members;
        for (Eigen::SparseMatrix<double>::InnerIterator it(h, e); it; ++it) {
            members.push_back(static_cast<int>(it.row()));
        }
        for (const int u : members) {
            if (frame[static_cast<std::size_t>(u)] != SirState::Infected) continue;
            for (const int v : members) {
                if (v == u) continue;
                escape[v] *= 1.0 - beta;
            }
        }
    }
    Eigen::VectorXd probs = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < n; ++v) {
        if (frame[static_cast<std::size_t>(v)] == SirState::Susceptible) probs[v] = 1.0 - escape[v];
    }
    return probs;
}

}  // namespace

TEST_CASE("edges of size <= 2 with nu = 1 match pairwise SIR on the clique expansion") {
    // Brute force over all states of <= 6-node instances with dyadic edges.
    const std::vector<Contact> contacts = {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 2},
                                           {0, 2, 3}, {0, 2, 4}, {0, 3, 5}};
    const auto inc = buildIncidence(contacts, 6, 4);
    PathogenParams p{0.37, 0.0, 1.0, 1, SirMode::Hyperedge};
    for (int mask = 0; mask < (1 << 6); ++mask) {
        std::vector<SirState> frame(6, SirState::Susceptible);
        for (int v = 0; v < 6; ++v) {
            if (mask & (1 << v)) frame[static_cast<std::size_t>(v)] = SirState::Infected;
        }
        const auto ours = expectedInfectionProb(inc, frame, p);
        const auto reference = cliqueExpansionProb(inc, frame, p.beta);
        CHECK((ours - reference).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("pairwise mode marginal matches Monte Carlo over masks") {
    MobilityConfig m;
    m.num_residential = 2;
    m.num_work = 1;
    m.num_commercial = 1;
    ContactConfig cc;
    cc.acquaintance_infect_prob = 0.6;
    cc.stranger_infect_prob = 0.2;
    const auto pop = generatePopulation(m, cc, 8, Rng(21));
    const auto hg = simulateMobility(pop, m, 1, Rng(21));

    std::vector<SirState> frame(8, SirState::Susceptible);
    frame[0] = SirState::Infected;
    frame[1] = SirState::Infected;
    PathogenParams p{0.5, 0.0, 1.0, 1, SirMode::Pairwise};

    const auto expected = expectedInfectionProbPairwise(hg, pop, cc, 0, frame, p);
    const int replicates = 60000;
    Eigen::VectorXd hits = Eigen::VectorXd::Zero(8);
    Rng rng(31);
    for (int i = 0; i < replicates; ++i) {
        Rng mask_rng = rng.stream("mask", static_cast<std::uint64_t>(i));
        const auto mask = strangerContactMask(hg, pop, cc, 0, mask_rng);
        const auto next = stepSirPairwise(mask, frame, p, rng);
        for (int v = 0; v < 8; ++v) {
            if (next[static_cast<std::size_t>(v)] == SirState::Infected &&
                frame[static_cast<std::size_t>(v)] == SirState::Susceptible) {
                hits[v] += 1.0;
            }
        }
    }
    for (int v = 0; v < 8; ++v) {
        const double freq = hits[v] / replicates;
        const double sigma = std::sqrt(std::max(expected[v] * (1.0 - expected[v]), 1e-12) / replicates);
        CHECK(std::abs(freq - expected[v]) <= 4.0 * sigma + 1e-9);
    }
}
