#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oamqec/aqec.hpp"
#include "oamqec/channel_superop.hpp"
#include "oamqec/kraus.hpp"

namespace oamqec {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Experiment constants and the sweep grid. Defaults are the reference
/// parameter set (w0 = 1 cm, lambda = 1 um, cn2 = 1e-14).
struct ScenarioConfig {
    double w0 = 0.01;
    double lambda = 1e-6;
    double cn2 = 1e-14;
    std::vector<double> z_list{1.0, 10.0, 200.0, 500.0, 1000.0};
    std::vector<int> max_in_list{1};
    std::vector<int> max_out_list{1};
    double rel_tol = 1e-6;
    double abs_tol = 1e-10;
    double rank_tol = kDefaultRankTol;
    double cutoff_ratio = 1e-12;
    std::string cache_dir;
    /// 0 uses the OpenMP default (one thread per logical core).
    int workers = 0;

    /// Throws ConfigError.
    void validate() const;
    /// Cache directory after applying the OAM_CACHE_DIR override; empty disables caching.
    std::filesystem::path effective_cache_dir() const;
};

/// Rejects unknown keys and wrongly typed values; missing keys keep their defaults.
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

struct ScenarioPoint {
    double z = 0.0;
    TruncationSpec trunc;
};

std::string to_string(const ScenarioPoint& point);

/// z ascending, then max_in, then max_out, over pairs with max_out >= max_in.
/// Throws ConfigError for empty lists, for a max_in with no admissible max_out
/// and for a max_out below every max_in.
std::vector<ScenarioPoint> expand_grid(const ScenarioConfig& cfg);

struct FidelityRecord {
    double z = 0.0;
    double w_over_r0 = 0.0;
    int max_in = 0;
    int max_out = 0;
    double fidelity = 0.0;
    double deficiency = 0.0;
    std::size_t kraus_count = 0;
    double runtime_seconds = 0.0;
    bool cache_hit = false;
    /// Set when the point failed; the numeric fields are then meaningless.
    std::optional<std::string> error;
};

ChannelParams channel_params(const ScenarioConfig& cfg, double z);
AssemblyOptions assembly_options(const ScenarioConfig& cfg);

struct LoadedChannel {
    SuperopMatrix superop;
    bool cache_hit = false;
    std::filesystem::path cache_file;
};

/// Assembles the superoperator or reads it from the cache directory. Corrupt
/// or stale cache files are recomputed and overwritten.
LoadedChannel obtain_superop(const ScenarioPoint& point, const ScenarioConfig& cfg);

/// Superoperator -> Kraus set -> code -> fidelity. Errors propagate as
/// PointFailure naming the point, except AssemblyCancelled.
FidelityRecord run_point(const ScenarioPoint& point, const ScenarioConfig& cfg);

class PointFailure : public std::runtime_error {
public:
    PointFailure(const ScenarioPoint& point, const std::string& what);
    const ScenarioPoint& point() const { return point_; }

private:
    ScenarioPoint point_;
};

struct SweepResult {
    std::vector<FidelityRecord> records;
    std::size_t failures = 0;
    bool cancelled = false;
};

/// Runs every grid point in order. A failed point is recorded with its error
/// and the sweep continues; cancellation stops it with the finished records kept.
SweepResult run_sweep(const ScenarioConfig& cfg,
                      const std::function<void(const FidelityRecord&)>& on_record = {});

inline constexpr const char* kResultsHeader =
    "z,w_over_r0,max_in,max_out,fidelity,deficiency,kraus_count,runtime_seconds";

/// One CSV row without newline. Failed points read "error" in the fidelity column.
std::string format_record(const FidelityRecord& r);
std::string results_csv(const std::vector<FidelityRecord>& records);

}  // namespace oamqec
