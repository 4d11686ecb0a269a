#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "epidhgnn/hypergraph.hpp"

namespace epidhgnn {

/// Dimensions stored in meta.json next to contacts.csv.
struct DatasetMeta {
    int num_individuals = 0;
    int num_locations = 0;
    int num_timesteps = 0;
};

DatasetMeta loadMeta(const std::filesystem::path& path);
void saveMeta(const std::filesystem::path& path, const DatasetMeta& meta);

/// contacts.csv: header `t,location_id,individual_id`, one integer triple per
/// row, written in canonical (t, location_id, individual_id) order.
DynamicHypergraph loadContacts(const std::filesystem::path& contacts_path, const DatasetMeta& meta);
void saveContacts(const std::filesystem::path& contacts_path, const DynamicHypergraph& hypergraph);

/// states.csv: header `t,individual_id,state`, state in {S,I,R}, one row per
/// (t, individual). Loading validates full coverage and SIR monotonicity.
StateSequence loadStates(const std::filesystem::path& states_path, const DatasetMeta& meta);
void saveStates(const std::filesystem::path& states_path, const StateSequence& states);

/// sources.json: ground-truth source ids of an episode.
std::vector<int> loadSources(const std::filesystem::path& path);
void saveSources(const std::filesystem::path& path, const std::vector<int>& sources);

/// Loads a full dataset. meta.json is expected next to contacts_path.
std::pair<DynamicHypergraph, StateSequence> loadDataset(const std::filesystem::path& contacts_path,
                                                        const std::filesystem::path& states_path);

/// Writes contacts.csv + meta.json + states.csv into `dir`.
void saveDataset(const std::filesystem::path& dir, const DynamicHypergraph& hypergraph,
                 const StateSequence& states);

/// Atomically replaces `path` with `content` (write temp file, then rename).
void atomicWriteFile(const std::filesystem::path& path, const std::string& content);

}  // namespace epidhgnn
