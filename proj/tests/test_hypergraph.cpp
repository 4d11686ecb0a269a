#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <epidhgnn/errors.hpp>
#include <epidhgnn/hypergraph.hpp>
#include <epidhgnn/rng.hpp>

#include <string>
#include <vector>

using namespace epidhgnn;

namespace {

// e0 = {v0, v1}, e1 = {v0, v1, v2}; the running 3-node / 2-edge fixture.
std::vector<Contact> fixtureContacts() {
    return {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1}, {0, 1, 2}};
}

}  // namespace

TEST_CASE("buildIncidence on an empty contact set gives a zero matrix") {
    const auto inc = buildIncidence({}, 3, 2);
    CHECK(inc.matrix().nonZeros() == 0);
    CHECK(inc.rowSums().isZero());
    CHECK(inc.colSums().isZero());
}

TEST_CASE("buildIncidence counts rows and columns") {
    const auto contacts = fixtureContacts();
    const auto inc = buildIncidence(contacts, 3, 2);
    const Eigen::VectorXd rows = inc.rowSums();
    const Eigen::VectorXd cols = inc.colSums();
    CHECK(rows[0] == 2);
    CHECK(rows[1] == 2);
    CHECK(rows[2] == 1);
    CHECK(cols[0] == 2);
    CHECK(cols[1] == 3);
}

TEST_CASE("buildIncidence rejects out-of-bounds triples naming the offender") {
    const std::vector<Contact> bad = {{0, 5, 0}};
    try {
        buildIncidence(bad, 3, 2);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("location=5") != std::string::npos);
    }
}

TEST_CASE("buildIncidence rejects duplicates") {
    const std::vector<Contact> dup = {{0, 0, 1}, {0, 0, 1}};
    CHECK_THROWS_AS(buildIncidence(dup, 3, 2), ConfigError);
}

TEST_CASE("buildIncidence is a bijection between triples and one-entries") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = static_cast<int>(rng.uniformInt(1, 12));
        const int e = static_cast<int>(rng.uniformInt(1, 6));
        std::vector<Contact> contacts;
        for (int v = 0; v < n; ++v) {
            for (int loc = 0; loc < e; ++loc) {
                if (rng.bernoulli(0.3)) contacts.push_back({0, loc, v});
            }
        }
        const auto inc = buildIncidence(contacts, n, e);
        CHECK(inc.matrix().nonZeros() == static_cast<Eigen::Index>(contacts.size()));
        for (const Contact& c : contacts) {
            CHECK(inc.matrix().coeff(c.individual, c.location) == 1.0);
        }
    }
}

TEST_CASE("degreeOperators counts degrees and honors weights") {
    const auto inc = buildIncidence(fixtureContacts(), 3, 2);

    SUBCASE("unit weights") {
        const auto ops = degreeOperators(inc);
        CHECK(ops.node_degree[0] == 2);
        CHECK(ops.node_degree[1] == 2);
        CHECK(ops.node_degree[2] == 1);
        CHECK(ops.edge_degree[0] == 2);
        CHECK(ops.edge_degree[1] == 3);
    }
    SUBCASE("weighted") {
        Eigen::VectorXd w(2);
        w << 2, 1;
        const auto ops = degreeOperators(inc, w);
        CHECK(ops.node_degree[0] == 3);
        CHECK(ops.node_degree[1] == 3);
        CHECK(ops.node_degree[2] == 1);
    }
    SUBCASE("all-zero incidence") {
        const auto zero = buildIncidence({}, 3, 2);
        const auto ops = degreeOperators(zero);
        CHECK(ops.node_degree.isZero());
        CHECK(ops.edge_degree.isZero());
        CHECK(ops.nodeInvSqrt().isZero());  // pseudo-inverse convention
        CHECK(ops.edgeInv().isZero());
    }
}

TEST_CASE("trace(D_v) equals trace(D_e) under unit weights") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = static_cast<int>(rng.uniformInt(1, 10));
        const int e = static_cast<int>(rng.uniformInt(1, 5));
        std::vector<Contact> contacts;
        for (int v = 0; v < n; ++v) {
            for (int loc = 0; loc < e; ++loc) {
                if (rng.bernoulli(0.4)) contacts.push_back({0, loc, v});
            }
        }
        const auto ops = degreeOperators(buildIncidence(contacts, n, e));
        CHECK(ops.node_degree.sum() == doctest::Approx(ops.edge_degree.sum()));
    }
}

TEST_CASE("DynamicHypergraph validates and indexes frames") {
    std::vector<Contact> contacts = {{1, 0, 0}, {0, 1, 1}, {0, 0, 0}, {1, 1, 1}};
    const DynamicHypergraph hg(2, 2, 2, contacts);
    CHECK(hg.frame(0).size() == 2);
    CHECK(hg.frame(1).size() == 2);
    CHECK(hg.contacts()[0] == Contact{0, 0, 0});  // canonical sort

    const auto counts = hg.locationContactCounts();
    CHECK(counts[0] == 2);
    CHECK(counts[1] == 2);

    SUBCASE("gap in timesteps is rejected") {
        CHECK_THROWS_WITH_AS(DynamicHypergraph(2, 2, 3, {{0, 0, 0}, {2, 0, 0}}),
                             doctest::Contains("non-contiguous"), ConfigError);
    }
    SUBCASE("duplicate triple is rejected") {
        CHECK_THROWS_AS(DynamicHypergraph(2, 2, 1, {{0, 0, 0}, {0, 0, 0}}), ConfigError);
    }
    SUBCASE("empty hypergraph requires T = 0") {
        const DynamicHypergraph empty(3, 2, 0, {});
        CHECK(empty.numTimesteps() == 0);
        CHECK_THROWS_AS(DynamicHypergraph(3, 2, 1, {}), ConfigError);
    }
}

TEST_CASE("StateSequence one-hot rows sum to one unless masked") {
    StateSequence states(3, 2);
    states.set(0, 1, SirState::Infected);
    states.set(1, 1, SirState::Recovered);
    states.set(1, 2, SirState::Masked);
    const Eigen::MatrixXd frame0 = states.onehot(0);
    CHECK(frame0.row(0).sum() == 1.0);
    CHECK(frame0(1, 1) == 1.0);
    const Eigen::MatrixXd frame1 = states.onehot(1);
    CHECK(frame1(1, 2) == 1.0);
    CHECK(frame1.row(2).sum() == 0.0);  // masked row is all zeros
}

TEST_CASE("validateMonotone rejects recovered-to-infected transitions") {
    StateSequence states(1, 3);
    states.set(0, 0, SirState::Infected);
    states.set(1, 0, SirState::Recovered);
    states.set(2, 0, SirState::Infected);
    CHECK_THROWS_AS(states.validateMonotone(), RuntimeError);
}

TEST_CASE("maskStates masks, truncates, and is idempotent") {
    StateSequence states(2, 20);
    for (int t = 0; t < 20; ++t) states.set(t, 0, SirState::Infected);

    SUBCASE("tsh=0 is a no-op over [0, ks]") {
        const auto masked = maskStates(states, TimeSplit{0, 10, 15});
        CHECK(masked.numTimesteps() == 11);
        for (int t = 0; t <= 10; ++t) CHECK(masked.at(t, 0) == SirState::Infected);
    }
    SUBCASE("tsh=ks keeps only the final frame") {
        const auto masked = maskStates(states, TimeSplit{10, 10, 12});
        for (int t = 0; t < 10; ++t) CHECK(masked.at(t, 0) == SirState::Masked);
        CHECK(masked.at(10, 0) == SirState::Infected);
    }
    SUBCASE("tsh=5 ks=10 on T=20") {
        const auto masked = maskStates(states, TimeSplit{5, 10, 15});
        CHECK(masked.numTimesteps() == 11);  // frames beyond ks are absent
        for (int t = 0; t < 5; ++t) CHECK(masked.onehot(t).isZero());
        for (int t = 5; t <= 10; ++t) CHECK(masked.at(t, 0) == SirState::Infected);
    }
    SUBCASE("idempotent") {
        const TimeSplit split{5, 10, 15};
        const auto once = maskStates(states, split);
        const auto twice = maskStates(once, split);
        CHECK(once == twice);
    }
    SUBCASE("invalid split rejected") {
        CHECK_THROWS_AS(maskStates(states, TimeSplit{11, 10, 15}), ConfigError);
        CHECK_THROWS_AS(maskStates(states, TimeSplit{0, 20, 20}), ConfigError);
    }
}

TEST_CASE("TimeSplit validation quotes the ordering constraint") {
    TimeSplit bad{5, 3, 10};
    try {
        bad.validate(20);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("0 <= tsh <= ks <= ps <= T") != std::string::npos);
    }
    TimeSplit ok{0, 3, 19};
    CHECK_NOTHROW(ok.validate(20));
    CHECK_THROWS_AS((TimeSplit{0, 3, 20}.validate(20)), ConfigError);
}
