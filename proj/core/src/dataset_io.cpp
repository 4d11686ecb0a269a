#include "epidhgnn/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "epidhgnn/errors.hpp"

namespace epidhgnn {

namespace {

using nlohmann::json;

std::string readFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json readJson(const std::filesystem::path& path) {
    try {
        return json::parse(readFile(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

int requireInt(const json& j, const std::string& key, const std::filesystem::path& path) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw ConfigError(path.string() + ": missing or non-integer key '" + key + "'");
    }
    return j[key].get<int>();
}

// Splits one CSV line into exactly `n` fields; returns false on mismatch.
bool splitFields(const std::string& line, int n, std::string_view* out) {
    std::size_t start = 0;
    for (int i = 0; i < n; ++i) {
        const std::size_t comma = line.find(',', start);
        if (i == n - 1) {
            if (comma != std::string::npos) return false;
            out[i] = std::string_view(line).substr(start);
        } else {
            if (comma == std::string::npos) return false;
            out[i] = std::string_view(line).substr(start, comma - start);
            start = comma + 1;
        }
    }
    return true;
}

int parseIntField(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": malformed integer '" +
                          std::string(field) + "'");
    }
    return value;
}

// Strips one trailing '\r' so CRLF files parse the same as LF files.
void chomp(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

DatasetMeta loadMeta(const std::filesystem::path& path) {
    const json j = readJson(path);
    DatasetMeta meta;
    meta.num_individuals = requireInt(j, "num_individuals", path);
    meta.num_locations = requireInt(j, "num_locations", path);
    meta.num_timesteps = requireInt(j, "num_timesteps", path);
    if (meta.num_individuals < 0 || meta.num_locations < 0 || meta.num_timesteps < 0) {
        throw ConfigError(path.string() + ": dimensions must be nonnegative");
    }
    return meta;
}

void saveMeta(const std::filesystem::path& path, const DatasetMeta& meta) {
    json j;
    j["num_individuals"] = meta.num_individuals;
    j["num_locations"] = meta.num_locations;
    j["num_timesteps"] = meta.num_timesteps;
    atomicWriteFile(path, j.dump(2) + "\n");
}

DynamicHypergraph loadContacts(const std::filesystem::path& contacts_path, const DatasetMeta& meta) {
    std::ifstream in(contacts_path);
    if (!in) throw ConfigError("cannot open " + contacts_path.string());

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ConfigError(contacts_path.string() + ": empty file (expected header)");
    }
    ++line_no;
    chomp(line);
    if (line != "t,location_id,individual_id") {
        throw ConfigError(contacts_path.string() + ":1: expected header 't,location_id,individual_id'");
    }

    std::vector<Contact> contacts;
    while (std::getline(in, line)) {
        ++line_no;
        chomp(line);
        if (line.empty()) continue;
        std::string_view fields[3];
        if (!splitFields(line, 3, fields)) {
            throw ConfigError(contacts_path.string() + ":" + std::to_string(line_no) +
                              ": malformed row (expected 3 comma-separated fields)");
        }
        Contact c;
        c.t = parseIntField(fields[0], contacts_path, line_no);
        c.location = parseIntField(fields[1], contacts_path, line_no);
        c.individual = parseIntField(fields[2], contacts_path, line_no);
        contacts.push_back(c);
    }
    return DynamicHypergraph(meta.num_individuals, meta.num_locations, meta.num_timesteps,
                             std::move(contacts));
}

void saveContacts(const std::filesystem::path& contacts_path, const DynamicHypergraph& hypergraph) {
    std::string out = "t,location_id,individual_id\n";
    out.reserve(out.size() + hypergraph.contacts().size() * 16);
    char buf[48];
    for (const Contact& c : hypergraph.contacts()) {
        const int n = std::snprintf(buf, sizeof(buf), "%d,%d,%d\n", c.t, c.location, c.individual);
        out.append(buf, static_cast<std::size_t>(n));
    }
    atomicWriteFile(contacts_path, out);
}

StateSequence loadStates(const std::filesystem::path& states_path, const DatasetMeta& meta) {
    std::ifstream in(states_path);
    if (!in) throw ConfigError("cannot open " + states_path.string());

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ConfigError(states_path.string() + ": empty file (expected header)");
    }
    ++line_no;
    chomp(line);
    if (line != "t,individual_id,state") {
        throw ConfigError(states_path.string() + ":1: expected header 't,individual_id,state'");
    }

    StateSequence states(meta.num_individuals, meta.num_timesteps);
    std::vector<std::vector<bool>> seen(
        static_cast<std::size_t>(meta.num_timesteps),
        std::vector<bool>(static_cast<std::size_t>(meta.num_individuals), false));

    while (std::getline(in, line)) {
        ++line_no;
        chomp(line);
        if (line.empty()) continue;
        std::string_view fields[3];
        if (!splitFields(line, 3, fields)) {
            throw ConfigError(states_path.string() + ":" + std::to_string(line_no) +
                              ": malformed row (expected 3 comma-separated fields)");
        }
        const int t = parseIntField(fields[0], states_path, line_no);
        const int v = parseIntField(fields[1], states_path, line_no);
        if (t < 0 || t >= meta.num_timesteps || v < 0 || v >= meta.num_individuals) {
            throw ConfigError(states_path.string() + ":" + std::to_string(line_no) +
                              ": index out of bounds (t=" + std::to_string(t) +
                              ", individual=" + std::to_string(v) + ")");
        }
        if (fields[2].size() != 1) {
            throw ConfigError(states_path.string() + ":" + std::to_string(line_no) +
                              ": state string outside {S,I,R}: '" + std::string(fields[2]) + "'");
        }
        SirState s;
        try {
            s = sirStateFromChar(fields[2][0]);
        } catch (const ConfigError& e) {
            throw ConfigError(states_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (seen[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)]) {
            throw ConfigError(states_path.string() + ":" + std::to_string(line_no) +
                              ": duplicate (t, individual) row");
        }
        seen[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)] = true;
        states.set(t, v, s);
    }

    for (int t = 0; t < meta.num_timesteps; ++t) {
        for (int v = 0; v < meta.num_individuals; ++v) {
            if (!seen[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)]) {
                throw ConfigError(states_path.string() + ": missing state row for t=" +
                                  std::to_string(t) + ", individual=" + std::to_string(v));
            }
        }
    }
    try {
        states.validateMonotone();
    } catch (const RuntimeError& e) {
        throw ConfigError(states_path.string() + ": " + e.what());
    }
    return states;
}

void saveStates(const std::filesystem::path& states_path, const StateSequence& states) {
    std::string out = "t,individual_id,state\n";
    out.reserve(out.size() + static_cast<std::size_t>(states.numTimesteps()) *
                                 static_cast<std::size_t>(states.numIndividuals()) * 10);
    char buf[48];
    for (int t = 0; t < states.numTimesteps(); ++t) {
        for (int v = 0; v < states.numIndividuals(); ++v) {
            const int n = std::snprintf(buf, sizeof(buf), "%d,%d,%c\n", t, v,
                                        sirStateChar(states.at(t, v)));
            out.append(buf, static_cast<std::size_t>(n));
        }
    }
    atomicWriteFile(states_path, out);
}

std::vector<int> loadSources(const std::filesystem::path& path) {
    const json j = readJson(path);
    if (!j.contains("sources") || !j["sources"].is_array()) {
        throw ConfigError(path.string() + ": missing 'sources' array");
    }
    std::vector<int> sources;
    for (const auto& e : j["sources"]) {
        if (!e.is_number_integer()) throw ConfigError(path.string() + ": non-integer source id");
        sources.push_back(e.get<int>());
    }
    return sources;
}

void saveSources(const std::filesystem::path& path, const std::vector<int>& sources) {
    json j;
    j["sources"] = sources;
    atomicWriteFile(path, j.dump(2) + "\n");
}

std::pair<DynamicHypergraph, StateSequence> loadDataset(const std::filesystem::path& contacts_path,
                                                        const std::filesystem::path& states_path) {
    const DatasetMeta meta = loadMeta(contacts_path.parent_path() / "meta.json");
    DynamicHypergraph hg = loadContacts(contacts_path, meta);
    StateSequence states = loadStates(states_path, meta);
    return {std::move(hg), std::move(states)};
}

void saveDataset(const std::filesystem::path& dir, const DynamicHypergraph& hypergraph,
                 const StateSequence& states) {
    std::filesystem::create_directories(dir);
    DatasetMeta meta{hypergraph.numIndividuals(), hypergraph.numLocations(),
                     hypergraph.numTimesteps()};
    saveMeta(dir / "meta.json", meta);
    saveContacts(dir / "contacts.csv", hypergraph);
    saveStates(dir / "states.csv", states);
}

void atomicWriteFile(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RuntimeError("cannot write " + tmp.string());
        out << content;
        if (!out.good()) throw RuntimeError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace epidhgnn
