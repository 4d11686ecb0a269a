#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <epidhgnn/dataset_io.hpp>
#include <epidhgnn/errors.hpp>
#include <epidhgnn/rng.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace epidhgnn;
namespace fs = std::filesystem;

namespace {

fs::path tempDir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("epidhgnn_io_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

}  // namespace

TEST_CASE("round trip reproduces identical structures") {
    const fs::path dir = tempDir("roundtrip");
    std::vector<Contact> contacts = {{0, 1, 2}, {0, 0, 0}, {1, 1, 0}, {1, 0, 2}, {0, 0, 1}, {1, 0, 1}};
    const DynamicHypergraph hg(3, 2, 2, contacts);
    StateSequence states(3, 2);
    states.set(0, 0, SirState::Infected);
    states.set(1, 0, SirState::Recovered);
    states.set(1, 1, SirState::Infected);
    saveDataset(dir, hg, states);

    const auto [hg2, states2] = loadDataset(dir / "contacts.csv", dir / "states.csv");
    CHECK(hg2 == hg);
    CHECK(states2 == states);

    // save(load(f)) is byte-identical to the canonical re-sort of f.
    const std::string first = slurp(dir / "contacts.csv");
    saveContacts(dir / "contacts2.csv", hg2);
    CHECK(slurp(dir / "contacts2.csv") == first);
    const std::string states_bytes = slurp(dir / "states.csv");
    saveStates(dir / "states2.csv", states2);
    CHECK(slurp(dir / "states2.csv") == states_bytes);
}

TEST_CASE("header-only file with T=0 metadata loads as an empty hypergraph") {
    const fs::path dir = tempDir("empty");
    saveMeta(dir / "meta.json", DatasetMeta{3, 2, 0});
    write(dir / "contacts.csv", "t,location_id,individual_id\n");
    const auto hg = loadContacts(dir / "contacts.csv", loadMeta(dir / "meta.json"));
    CHECK(hg.numIndividuals() == 3);
    CHECK(hg.numLocations() == 2);
    CHECK(hg.numTimesteps() == 0);
    CHECK(hg.contacts().empty());
}

TEST_CASE("malformed contact row reports its line number") {
    const fs::path dir = tempDir("badrow");
    saveMeta(dir / "meta.json", DatasetMeta{3, 2, 1});
    write(dir / "contacts.csv", "t,location_id,individual_id\n0,0,0\n0,zero,1\n");
    try {
        loadContacts(dir / "contacts.csv", loadMeta(dir / "meta.json"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
}

TEST_CASE("state outside {S,I,R} is rejected") {
    const fs::path dir = tempDir("badstate");
    saveMeta(dir / "meta.json", DatasetMeta{1, 1, 1});
    write(dir / "states.csv", "t,individual_id,state\n0,0,X\n");
    try {
        loadStates(dir / "states.csv", loadMeta(dir / "meta.json"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("{S,I,R}") != std::string::npos);
    }
}

TEST_CASE("non-contiguous timesteps are rejected on load") {
    const fs::path dir = tempDir("gap");
    saveMeta(dir / "meta.json", DatasetMeta{1, 1, 3});
    write(dir / "contacts.csv", "t,location_id,individual_id\n0,0,0\n2,0,0\n");
    CHECK_THROWS_WITH_AS(loadContacts(dir / "contacts.csv", loadMeta(dir / "meta.json")),
                         doctest::Contains("non-contiguous"), ConfigError);
}

TEST_CASE("missing state coverage is rejected") {
    const fs::path dir = tempDir("missing");
    saveMeta(dir / "meta.json", DatasetMeta{2, 1, 1});
    write(dir / "states.csv", "t,individual_id,state\n0,0,S\n");
    CHECK_THROWS_WITH_AS(loadStates(dir / "states.csv", loadMeta(dir / "meta.json")),
                         doctest::Contains("missing state row"), ConfigError);
}

TEST_CASE("sources round trip") {
    const fs::path dir = tempDir("sources");
    saveSources(dir / "sources.json", {4, 1, 9});
    CHECK(loadSources(dir / "sources.json") == std::vector<int>{4, 1, 9});
}

TEST_CASE("desk-scale dataset parses in memory") {
    // 2,500 individuals / 500 locations / 169 timesteps / ~94k contact rows.
    const fs::path dir = tempDir("desk");
    Rng rng(5);
    std::vector<Contact> contacts;
    contacts.reserve(94134);
    const int per_frame = 94134 / 169;
    for (int t = 0; t < 169; ++t) {
        // Distinct individuals within a frame keep triples unique.
        const auto people = rng.sampleWithoutReplacement(2500, per_frame);
        for (const auto v : people) {
            contacts.push_back({t, static_cast<int>(rng.uniformInt(0, 499)), static_cast<int>(v)});
        }
    }
    const DynamicHypergraph hg(2500, 500, 169, contacts);
    saveContacts(dir / "contacts.csv", hg);
    saveMeta(dir / "meta.json", DatasetMeta{2500, 500, 169});
    const auto loaded = loadContacts(dir / "contacts.csv", loadMeta(dir / "meta.json"));
    CHECK(loaded.contacts().size() == contacts.size());
    CHECK(loaded == hg);
}
