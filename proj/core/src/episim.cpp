#include "epidhgnn/episim.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "epidhgnn/dataset_io.hpp"
#include "epidhgnn/errors.hpp"

namespace epidhgnn {

namespace {

using nlohmann::json;

json readJsonFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// Strict flat-object reader: every mandatory key consumed exactly once,
// unknown keys rejected.
class StrictReader {
public:
    StrictReader(json j, std::filesystem::path path) : j_(std::move(j)), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.string() + ": expected a JSON object");
    }

    int getInt(const std::string& key) {
        const json v = take(key);
        if (!v.is_number_integer()) {
            throw ConfigError(path_.string() + ": key '" + key + "' must be an integer");
        }
        return v.get<int>();
    }

    double getDouble(const std::string& key) {
        const json v = take(key);
        if (!v.is_number()) {
            throw ConfigError(path_.string() + ": key '" + key + "' must be a number");
        }
        return v.get<double>();
    }

    int getIntOr(const std::string& key, int fallback) {
        return j_.contains(key) ? getInt(key) : fallback;
    }

    double getDoubleOr(const std::string& key, double fallback) {
        return j_.contains(key) ? getDouble(key) : fallback;
    }

    std::string getStringOr(const std::string& key, const std::string& fallback) {
        if (!j_.contains(key)) return fallback;
        const json v = take(key);
        if (!v.is_string()) {
            throw ConfigError(path_.string() + ": key '" + key + "' must be a string");
        }
        return v.get<std::string>();
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    void finish() const {
        if (!j_.empty()) {
            throw ConfigError(path_.string() + ": unknown key '" + j_.begin().key() + "'");
        }
    }

private:
    json take(const std::string& key) {
        if (!j_.contains(key)) {
            throw ConfigError(path_.string() + ": missing mandatory key '" + key + "'");
        }
        json v = j_[key];
        j_.erase(key);
        return v;
    }

    json j_;
    std::filesystem::path path_;
};

void requireWindow(int lo, int hi, const std::string& name) {
    if (lo > hi) {
        throw ConfigError("window " + name + " must satisfy lower <= upper; got (" +
                          std::to_string(lo) + ", " + std::to_string(hi) + ")");
    }
}

void requireHourWindow(int lo, int hi, const std::string& name) {
    requireWindow(lo, hi, name);
    if (lo < MobilityConfig::kFirstHour || hi > MobilityConfig::kLastHour) {
        throw ConfigError("window " + name + " must lie within the 8:00-22:00 day span; got (" +
                          std::to_string(lo) + ", " + std::to_string(hi) + ")");
    }
}

void requireDurationWindow(int lo, int hi, const std::string& name) {
    requireWindow(lo, hi, name);
    if (lo < 0 || hi > MobilityConfig::kStepsPerDay - 1) {
        throw ConfigError("duration window " + name + " must lie within the 8:00-22:00 day span; got (" +
                          std::to_string(lo) + ", " + std::to_string(hi) + ")");
    }
}

void requireProb(double p, const std::string& name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("probability " + name + " must lie in [0,1]; got " + std::to_string(p));
    }
}

}  // namespace

void MobilityConfig::validate() const {
    requireHourWindow(depart_min, depart_max, "depart (a,b)");
    requireDurationWindow(work_hours_min, work_hours_max, "work_hours (c,d)");
    requireHourWindow(weekend_out_min, weekend_out_max, "weekend_out (g,h)");
    requireDurationWindow(weekend_stay_min, weekend_stay_max, "weekend_stay (i,j)");
    requireDurationWindow(weekday_commercial_min, weekday_commercial_max, "weekday_commercial");
    requireProb(weekend_out_prob, "weekend_out_prob");
    requireProb(weekday_commercial_prob, "weekday_commercial_prob");
    if (num_residential < 1 || num_work < 1 || num_commercial < 1) {
        throw ConfigError("at least one location of each category is required; got residential=" +
                          std::to_string(num_residential) + " work=" + std::to_string(num_work) +
                          " commercial=" + std::to_string(num_commercial));
    }
}

MobilityConfig MobilityConfig::fromJsonFile(const std::filesystem::path& path) {
    StrictReader r(readJsonFile(path), path);
    MobilityConfig c;
    c.depart_min = r.getInt("depart_min");
    c.depart_max = r.getInt("depart_max");
    c.work_hours_min = r.getInt("work_hours_min");
    c.work_hours_max = r.getInt("work_hours_max");
    c.weekend_out_min = r.getInt("weekend_out_min");
    c.weekend_out_max = r.getInt("weekend_out_max");
    c.weekend_out_prob = r.getDouble("weekend_out_prob");
    c.weekend_stay_min = r.getInt("weekend_stay_min");
    c.weekend_stay_max = r.getInt("weekend_stay_max");
    c.num_residential = r.getInt("num_residential");
    c.num_work = r.getInt("num_work");
    c.num_commercial = r.getInt("num_commercial");
    c.weekday_commercial_prob = r.getDoubleOr("weekday_commercial_prob", 0.3);
    c.weekday_commercial_min = r.getIntOr("weekday_commercial_min", c.weekend_stay_min);
    c.weekday_commercial_max = r.getIntOr("weekday_commercial_max", c.weekend_stay_max);
    r.finish();
    c.validate();
    return c;
}

void ContactConfig::validate() const {
    requireWindow(home_acq_min, home_acq_max, "home_acq (m,n)");
    requireWindow(work_acq_min, work_acq_max, "work_acq (o,p)");
    if (home_acq_min < 0 || work_acq_min < 0) {
        throw ConfigError("acquaintance windows must be nonnegative");
    }
    requireProb(acquaintance_infect_prob, "acquaintance_infect_prob");
    requireProb(stranger_infect_prob, "stranger_infect_prob");
}

ContactConfig ContactConfig::fromJsonFile(const std::filesystem::path& path) {
    StrictReader r(readJsonFile(path), path);
    ContactConfig c;
    c.home_acq_min = r.getInt("home_acq_min");
    c.home_acq_max = r.getInt("home_acq_max");
    c.work_acq_min = r.getInt("work_acq_min");
    c.work_acq_max = r.getInt("work_acq_max");
    c.acquaintance_infect_prob = r.getDouble("acquaintance_infect_prob");
    c.stranger_infect_prob = r.getDouble("stranger_infect_prob");
    r.finish();
    c.validate();
    return c;
}

bool Population::acquainted(int u, int v) const {
    const auto& a = home_acquaintances[static_cast<std::size_t>(u)];
    if (std::binary_search(a.begin(), a.end(), v)) return true;
    const auto& b = work_acquaintances[static_cast<std::size_t>(u)];
    if (std::binary_search(b.begin(), b.end(), v)) return true;
    const auto& c = home_acquaintances[static_cast<std::size_t>(v)];
    if (std::binary_search(c.begin(), c.end(), u)) return true;
    const auto& d = work_acquaintances[static_cast<std::size_t>(v)];
    return std::binary_search(d.begin(), d.end(), u);
}

void Population::saveJson(const std::filesystem::path& path) const {
    json j;
    j["home"] = home;
    j["work"] = work;
    j["home_acquaintances"] = home_acquaintances;
    j["work_acquaintances"] = work_acquaintances;
    atomicWriteFile(path, j.dump() + "\n");
}

Population Population::loadJson(const std::filesystem::path& path) {
    const json j = readJsonFile(path);
    Population p;
    try {
        p.home = j.at("home").get<std::vector<int>>();
        p.work = j.at("work").get<std::vector<int>>();
        p.home_acquaintances = j.at("home_acquaintances").get<std::vector<std::vector<int>>>();
        p.work_acquaintances = j.at("work_acquaintances").get<std::vector<std::vector<int>>>();
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (p.work.size() != p.home.size() || p.home_acquaintances.size() != p.home.size() ||
        p.work_acquaintances.size() != p.home.size()) {
        throw ConfigError(path.string() + ": inconsistent array lengths");
    }
    return p;
}

namespace {

// Draws an acquaintance set for each member of each co-located group.
// K ~ U(lo, hi) with hi clamped to the group size minus one; impossible
// windows (lo exceeding the available co-located individuals) are an error.
std::vector<std::vector<int>> drawAcquaintances(const std::vector<int>& assignment, int num_locations,
                                                int first_location, int lo, int hi,
                                                const char* kind, Rng& rng) {
    const int n = static_cast<int>(assignment.size());
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(num_locations));
    for (int v = 0; v < n; ++v) {
        groups[static_cast<std::size_t>(assignment[static_cast<std::size_t>(v)] - first_location)]
            .push_back(v);
    }

    std::vector<std::vector<int>> result(static_cast<std::size_t>(n));
    for (int g = 0; g < num_locations; ++g) {
        const auto& members = groups[static_cast<std::size_t>(g)];
        if (members.empty()) continue;
        const int avail = static_cast<int>(members.size()) - 1;
        if (lo > avail) {
            throw ConfigError(std::string(kind) + " acquaintance window requires at least " +
                              std::to_string(lo) + " co-located individuals but location " +
                              std::to_string(g + first_location) + " has only " +
                              std::to_string(avail) + " available");
        }
        std::vector<int> pool(members.size() - 1);
        for (const int v : members) {
            const int k = static_cast<int>(rng.uniformInt(lo, std::min(hi, avail)));
            std::vector<int> chosen;
            if (k > 0) {
                std::size_t w = 0;
                for (const int m : members) {
                    if (m != v) pool[w++] = m;
                }
                const auto idx = rng.sampleWithoutReplacement(avail, k);
                chosen.reserve(static_cast<std::size_t>(k));
                for (const auto i : idx) chosen.push_back(pool[static_cast<std::size_t>(i)]);
                std::sort(chosen.begin(), chosen.end());
            }
            result[static_cast<std::size_t>(v)] = std::move(chosen);
        }
    }
    return result;
}

}  // namespace

Population generatePopulation(const MobilityConfig& mobility, const ContactConfig& contact, int N,
                              Rng rng) {
    mobility.validate();
    contact.validate();
    if (N <= 0) throw ConfigError("population size must be positive");

    Population pop;
    pop.home.resize(static_cast<std::size_t>(N));
    pop.work.resize(static_cast<std::size_t>(N));
    for (int v = 0; v < N; ++v) {
        pop.home[static_cast<std::size_t>(v)] =
            static_cast<int>(rng.uniformInt(0, mobility.num_residential - 1));
    }
    const int work_base = mobility.num_residential;
    for (int v = 0; v < N; ++v) {
        pop.work[static_cast<std::size_t>(v)] =
            work_base + static_cast<int>(rng.uniformInt(0, mobility.num_work - 1));
    }
    pop.home_acquaintances =
        drawAcquaintances(pop.home, mobility.num_residential, 0, contact.home_acq_min,
                          contact.home_acq_max, "home", rng);
    pop.work_acquaintances = drawAcquaintances(pop.work, mobility.num_work, work_base,
                                               contact.work_acq_min, contact.work_acq_max, "work", rng);
    return pop;
}

DynamicHypergraph simulateMobility(const Population& population, const MobilityConfig& mobility,
                                   int num_days, Rng rng) {
    mobility.validate();
    if (num_days <= 0) throw ConfigError("num_days must be positive");
    const int N = population.size();
    if (N == 0) throw ConfigError("population is empty");

    const int steps_per_day = MobilityConfig::kStepsPerDay;
    const int T = num_days * steps_per_day;
    const int commercial_base = mobility.num_residential + mobility.num_work;

    std::vector<Contact> contacts;
    contacts.reserve(static_cast<std::size_t>(T) * static_cast<std::size_t>(N));

    for (int day = 0; day < num_days; ++day) {
        const bool weekend = (day % 7) >= 5;
        for (int v = 0; v < N; ++v) {
            const int home = population.home[static_cast<std::size_t>(v)];
            int schedule[MobilityConfig::kStepsPerDay];
            std::fill(schedule, schedule + steps_per_day, home);

            if (!weekend) {
                const int depart =
                    static_cast<int>(rng.uniformInt(mobility.depart_min, mobility.depart_max));
                const int work_hours =
                    static_cast<int>(rng.uniformInt(mobility.work_hours_min, mobility.work_hours_max));
                const int work = population.work[static_cast<std::size_t>(v)];
                const int work_end = depart + work_hours;
                for (int h = depart; h < work_end && h <= MobilityConfig::kLastHour; ++h) {
                    schedule[h - MobilityConfig::kFirstHour] = work;
                }
                if (rng.bernoulli(mobility.weekday_commercial_prob)) {
                    const int stay = static_cast<int>(rng.uniformInt(
                        mobility.weekday_commercial_min, mobility.weekday_commercial_max));
                    const int shop = commercial_base +
                                     static_cast<int>(rng.uniformInt(0, mobility.num_commercial - 1));
                    for (int h = work_end; h < work_end + stay && h <= MobilityConfig::kLastHour; ++h) {
                        schedule[h - MobilityConfig::kFirstHour] = shop;
                    }
                }
            } else {
                if (rng.bernoulli(mobility.weekend_out_prob)) {
                    const int out =
                        static_cast<int>(rng.uniformInt(mobility.weekend_out_min, mobility.weekend_out_max));
                    const int stay = static_cast<int>(
                        rng.uniformInt(mobility.weekend_stay_min, mobility.weekend_stay_max));
                    const int shop = commercial_base +
                                     static_cast<int>(rng.uniformInt(0, mobility.num_commercial - 1));
                    for (int h = out; h < out + stay && h <= MobilityConfig::kLastHour; ++h) {
                        schedule[h - MobilityConfig::kFirstHour] = shop;
                    }
                }
            }

            const int day_base = day * steps_per_day;
            for (int s = 0; s < steps_per_day; ++s) {
                contacts.push_back(Contact{day_base + s, schedule[s], v});
            }
        }
    }

    return DynamicHypergraph(N, mobility.numLocations(), T, std::move(contacts));
}

std::vector<std::pair<int, int>> strangerContactMask(const DynamicHypergraph& hypergraph,
                                                     const Population& population,
                                                     const ContactConfig& contact, int t, Rng rng) {
    contact.validate();
    const auto frame = hypergraph.frame(t);

    std::vector<std::pair<int, int>> mask;
    // Contacts are sorted by (location, individual) within the frame, so each
    // location's member list is a contiguous ascending run.
    std::size_t i = 0;
    while (i < frame.size()) {
        const int loc = frame[i].location;
        std::size_t j = i;
        while (j < frame.size() && frame[j].location == loc) ++j;
        for (std::size_t a = i; a < j; ++a) {
            for (std::size_t b = a + 1; b < j; ++b) {
                const int u = frame[a].individual;
                const int v = frame[b].individual;
                const double p = population.acquainted(u, v) ? contact.acquaintance_infect_prob
                                                             : contact.stranger_infect_prob;
                if (rng.bernoulli(p)) mask.emplace_back(u, v);
            }
        }
        i = j;
    }
    std::sort(mask.begin(), mask.end());
    return mask;
}

}  // namespace epidhgnn
