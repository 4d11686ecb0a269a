#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "epidhgnn/hypergraph.hpp"
#include "epidhgnn/rng.hpp"

namespace epidhgnn {

/// Human mobility model parameters. The day covers hourly timesteps from
/// 8:00 to 22:00 inclusive (15 per day); all hour windows are integer and
/// inclusive on both ends.
struct MobilityConfig {
    static constexpr int kFirstHour = 8;
    static constexpr int kLastHour = 22;
    static constexpr int kStepsPerDay = kLastHour - kFirstHour + 1;

    int depart_min = 9;   // a: weekday departure hour T_d ~ U(a, b)
    int depart_max = 11;  // b
    int work_hours_min = 4;  // c: work duration T_w ~ U(c, d)
    int work_hours_max = 8;  // d
    int weekend_out_min = 10;  // g: weekend outing start T_e ~ U(g, h)
    int weekend_out_max = 14;  // h
    double weekend_out_prob = 0.5;  // P_e
    int weekend_stay_min = 1;  // i: weekend outing duration T_m ~ U(i, j)
    int weekend_stay_max = 4;  // j

    // Weekday after-work commercial visits; the duration window defaults to
    // the weekend stay window (i, j).
    double weekday_commercial_prob = 0.3;
    int weekday_commercial_min = 1;
    int weekday_commercial_max = 4;

    int num_residential = 6;
    int num_work = 3;
    int num_commercial = 2;

    int numLocations() const { return num_residential + num_work + num_commercial; }
    // Location id layout: residential [0, R), work [R, R+W), commercial [R+W, R+W+C).
    bool isResidential(int loc) const { return loc < num_residential; }
    bool isWork(int loc) const {
        return loc >= num_residential && loc < num_residential + num_work;
    }
    bool isCommercial(int loc) const { return loc >= num_residential + num_work; }

    void validate() const;
    static MobilityConfig fromJsonFile(const std::filesystem::path& path);
};

/// Acquaintance structure and per-contact infection probabilities for the
/// pairwise transmission mode.
struct ContactConfig {
    int home_acq_min = 1;  // m: K_r ~ U(m, n)
    int home_acq_max = 4;  // n
    int work_acq_min = 2;  // o: K_w ~ U(o, p)
    int work_acq_max = 6;  // p
    double acquaintance_infect_prob = 0.05;  // P_a
    double stranger_infect_prob = 0.01;      // P_s

    void validate() const;
    static ContactConfig fromJsonFile(const std::filesystem::path& path);
};

/// Fixed per-individual attributes: home/work assignment plus acquaintance
/// sets drawn from co-located individuals. Acquaintance queries are
/// symmetric: u and v are acquainted when either lists the other.
struct Population {
    std::vector<int> home;  // residential location id per individual
    std::vector<int> work;  // work location id per individual
    std::vector<std::vector<int>> home_acquaintances;  // sorted ascending
    std::vector<std::vector<int>> work_acquaintances;  // sorted ascending

    int size() const { return static_cast<int>(home.size()); }
    bool acquainted(int u, int v) const;

    void saveJson(const std::filesystem::path& path) const;
    static Population loadJson(const std::filesystem::path& path);
};

/// Assigns homes, workplaces, and acquaintance sets. Deterministic given the
/// rng stream. Throws when an acquaintance window demands more contacts than
/// a location's co-located group can supply.
Population generatePopulation(const MobilityConfig& mobility, const ContactConfig& contact, int N,
                              Rng rng);

/// Simulates hourly movement for `num_days` days (days 0-4 of each week are
/// weekdays, 5-6 weekend). Every individual is incident to exactly one
/// location per timestep.
DynamicHypergraph simulateMobility(const Population& population, const MobilityConfig& mobility,
                                   int num_days, Rng rng);

/// Unordered co-located pairs at timestep `t` flagged as infection-relevant:
/// each pair is included with probability P_a when acquainted, P_s otherwise.
/// Pairs are returned with first < second, sorted.
std::vector<std::pair<int, int>> strangerContactMask(const DynamicHypergraph& hypergraph,
                                                     const Population& population,
                                                     const ContactConfig& contact, int t, Rng rng);

}  // namespace epidhgnn
