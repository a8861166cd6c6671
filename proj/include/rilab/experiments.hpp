#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rilab/graph.hpp"
#include "rilab/walk.hpp"

namespace rilab {

inline constexpr const char* kCodeVersion = RILAB_VERSION;
inline constexpr int kRecordsSchema = 1;

enum class ExperimentKind {
    emptiness_identity,
    laplace_bridge,
    green_asymptotics,
    tube_capacity,
    fpp_scaling,
    local_uniqueness,
    walk_capacity_tail,
    laplace_functional,
    coarse_fpp_event,
};

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);
const std::vector<ExperimentKind>& all_experiment_kinds();

// Raised for malformed or inconsistent configurations (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Key-value experiment description; grammar in README.md. Defaults depend on
// the kind and are filled in by with_defaults().
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::emptiness_identity;
    int d = 3;
    DistanceKind distance = DistanceKind::euclidean;
    WeightScale scale = WeightScale::normalized;
    std::uint64_t seed = 1;
    std::uint64_t replicas = 0;
    std::uint64_t walks = 0;  // walk replicas (laplace_bridge LHS, walk_capacity_tail)
    unsigned threads = 1;
    std::string out = "out";

    double kill_radius = 0;  // 0: from bias_target
    double bias_target = 1e-4;

    std::vector<double> u, N, p, theta;
    std::vector<std::int64_t> P;
    double K_radius = 3;
    double window_radius = 0;
    double R = 1;
    double xi = 2;
    double kappa = 0;
    double s = 0;
    double rho = 160;  // green_asymptotics solve radius
    double eta = 0.5;  // layer fraction for the decomposition check
    std::string weights = "box_nonempty";
    std::uint64_t max_window_sites = 3000000;

    // Keys that were set explicitly, in file order (used for the hash).
    std::map<std::string, std::string> raw;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    // Sets a single key; throws ConfigError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);

    ExperimentConfig with_defaults() const;
    void validate() const;
    // Canonical key = value listing of every field after defaults.
    std::string canonical() const;
    // FNV-1a of canonical() with seed, threads and out removed, as hex.
    std::string hash() const;
};

struct EstimateRecord {
    std::string kind;
    std::string params;    // "u=0.2;N=40"
    std::string quantity;  // what the estimate measures
    double estimate = 0;
    double se = 0;
    double reference = 0;  // NaN when there is none
    std::uint64_t n_replicas = 0;
    double bias_bound = 0;
    double wall_time = 0;  // seconds; kept out of records.csv
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string code_version = kCodeVersion;
    std::string flag;  // empty, or e.g. below_mc_floor, bias_exceeds_se
};

struct RunResult {
    ExperimentConfig config;
    std::vector<EstimateRecord> records;
    // fpp kinds: one row per replica (seed,u,N,R,kind,distance,path_length,bias_bound)
    std::string fpp_rows;
    GreenConstants constants;
    double wall_time = 0;
    int exit_code = 0;
};

// Validates the config, runs the experiment and flags records whose bias bound
// exceeds a positive standard error (exit code 3).
RunResult run(const ExperimentConfig& config);

std::string records_csv_header();
std::string records_csv(const std::vector<EstimateRecord>& records);
std::string meta_json(const RunResult& r);
inline constexpr const char* kFppRowsHeader = "seed,u,N,R,kind,distance,path_length,bias_bound\n";
// Writes out/records.csv, out/meta.json and, for fpp kinds, out/fpp_rows.csv.
void write_outputs(const RunResult& r);

// Lookup helper: first record with the given quantity and params.
const EstimateRecord* find_record(const std::vector<EstimateRecord>& recs, const std::string& quantity,
                                  const std::string& params);
std::vector<const EstimateRecord*> find_records(const std::vector<EstimateRecord>& recs, const std::string& quantity);

}  // namespace rilab
