#include "oamqec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <set>

#include <fmt/format.h>

#include "oamqec/io_util.hpp"
#include "oamqec/superop_io.hpp"

namespace oamqec {

namespace {

using nlohmann::json;

const std::set<std::string> kConfigKeys{"w0",           "lambda",      "cn2",      "z_list",
                                        "max_in_list",  "max_out_list", "rel_tol",  "abs_tol",
                                        "rank_tol",     "cutoff_ratio", "cache_dir", "workers"};

template <typename T>
void read_key(const json& j, const char* key, T& out) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
    }
}

void require_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
        throw ConfigError(fmt::format("{} must be positive and finite", name));
    }
}

}  // namespace

void ScenarioConfig::validate() const {
    require_positive(w0, "w0");
    require_positive(lambda, "lambda");
    if (!std::isfinite(cn2) || cn2 < 0.0) {
        throw ConfigError("cn2 must be non-negative and finite");
    }
    for (double z : z_list) {
        require_positive(z, "every z");
    }
    for (int m : max_in_list) {
        if (m < 1) {
            throw ConfigError("every max_in must be at least 1");
        }
    }
    for (int m : max_out_list) {
        if (m < 1) {
            throw ConfigError("every max_out must be at least 1");
        }
    }
    if (!(rel_tol > 0.0) && !(abs_tol > 0.0)) {
        throw ConfigError("rel_tol or abs_tol must be positive");
    }
    if (rel_tol < 0.0 || abs_tol < 0.0) {
        throw ConfigError("tolerances must not be negative");
    }
    require_positive(rank_tol, "rank_tol");
    if (!std::isfinite(cutoff_ratio) || cutoff_ratio < 0.0) {
        throw ConfigError("cutoff_ratio must be non-negative");
    }
    if (workers < 0) {
        throw ConfigError("workers must not be negative");
    }
}

std::filesystem::path ScenarioConfig::effective_cache_dir() const {
    if (const char* env = std::getenv("OAM_CACHE_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return cache_dir;
}

ScenarioConfig config_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!kConfigKeys.contains(key)) {
            throw ConfigError(fmt::format("unknown config key '{}'", key));
        }
    }
    ScenarioConfig cfg;
    read_key(j, "w0", cfg.w0);
    read_key(j, "lambda", cfg.lambda);
    read_key(j, "cn2", cfg.cn2);
    read_key(j, "z_list", cfg.z_list);
    read_key(j, "max_in_list", cfg.max_in_list);
    read_key(j, "max_out_list", cfg.max_out_list);
    read_key(j, "rel_tol", cfg.rel_tol);
    read_key(j, "abs_tol", cfg.abs_tol);
    read_key(j, "rank_tol", cfg.rank_tol);
    read_key(j, "cutoff_ratio", cfg.cutoff_ratio);
    read_key(j, "cache_dir", cfg.cache_dir);
    read_key(j, "workers", cfg.workers);
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("cannot read config {}: {}", path.string(), e.what()));
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config {} is not valid JSON: {}", path.string(), e.what()));
    }
    return config_from_json(j);
}

json config_to_json(const ScenarioConfig& cfg) {
    return {{"w0", cfg.w0},
            {"lambda", cfg.lambda},
            {"cn2", cfg.cn2},
            {"z_list", cfg.z_list},
            {"max_in_list", cfg.max_in_list},
            {"max_out_list", cfg.max_out_list},
            {"rel_tol", cfg.rel_tol},
            {"abs_tol", cfg.abs_tol},
            {"rank_tol", cfg.rank_tol},
            {"cutoff_ratio", cfg.cutoff_ratio},
            {"cache_dir", cfg.cache_dir},
            {"workers", cfg.workers}};
}

std::string to_string(const ScenarioPoint& point) {
    return fmt::format("z={} max_in={} max_out={}", point.z, point.trunc.max_in,
                       point.trunc.max_out);
}

std::vector<ScenarioPoint> expand_grid(const ScenarioConfig& cfg) {
    cfg.validate();
    if (cfg.z_list.empty() || cfg.max_in_list.empty() || cfg.max_out_list.empty()) {
        throw ConfigError("z_list, max_in_list and max_out_list must be non-empty");
    }
    std::vector<double> zs = cfg.z_list;
    std::vector<int> ins = cfg.max_in_list;
    std::vector<int> outs = cfg.max_out_list;
    std::sort(zs.begin(), zs.end());
    zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
    std::sort(ins.begin(), ins.end());
    ins.erase(std::unique(ins.begin(), ins.end()), ins.end());
    std::sort(outs.begin(), outs.end());
    outs.erase(std::unique(outs.begin(), outs.end()), outs.end());
    if (outs.front() < ins.front()) {
        throw ConfigError(fmt::format("max_out {} is below every max_in", outs.front()));
    }
    if (ins.back() > outs.back()) {
        throw ConfigError(fmt::format("max_in {} exceeds every max_out", ins.back()));
    }
    std::vector<ScenarioPoint> points;
    for (double z : zs) {
        for (int mi : ins) {
            for (int mo : outs) {
                if (mo >= mi) {
                    points.push_back({z, {mi, mo}});
                }
            }
        }
    }
    return points;
}

ChannelParams channel_params(const ScenarioConfig& cfg, double z) {
    TurbulenceParams turb;
    turb.cn2 = cfg.cn2;
    return {BeamGeometry(cfg.w0, cfg.lambda), turb, z};
}

AssemblyOptions assembly_options(const ScenarioConfig& cfg) {
    AssemblyOptions options;
    options.tolerance.rel_tol = cfg.rel_tol;
    options.tolerance.abs_tol = cfg.abs_tol;
    options.workers = cfg.workers;
    return options;
}

LoadedChannel obtain_superop(const ScenarioPoint& point, const ScenarioConfig& cfg) {
    point.trunc.validate();
    const ChannelParams params = channel_params(cfg, point.z);
    const AssemblyOptions options = assembly_options(cfg);
    const auto dir = cfg.effective_cache_dir();
    std::filesystem::path file;
    if (!dir.empty()) {
        SuperopMetadata probe;
        probe.geometry = params.geometry;
        probe.turbulence = params.turbulence;
        probe.z = params.z;
        probe.tolerance = options.tolerance;
        probe.method = options.method;
        const std::string key = superop_cache_key(point.trunc, probe);
        file = dir / (key + ".superop");
        if (std::filesystem::exists(file) && peek_cache_key(file) == key) {
            try {
                return {load_superop(file), true, file};
            } catch (const FormatError&) {
                // fall through and recompute
            }
        }
    }
    SuperopMatrix T = assemble_superop(point.trunc, params, options);
    if (!file.empty()) {
        save_superop(T, file);
        // Reload so fresh and cached runs see bit-identical values.
        return {load_superop(file), false, file};
    }
    return {std::move(T), false, file};
}

PointFailure::PointFailure(const ScenarioPoint& point, const std::string& what)
    : std::runtime_error(fmt::format("point {}: {}", to_string(point), what)), point_(point) {}

FidelityRecord run_point(const ScenarioPoint& point, const ScenarioConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    FidelityRecord rec;
    rec.z = point.z;
    rec.max_in = point.trunc.max_in;
    rec.max_out = point.trunc.max_out;
    try {
        rec.w_over_r0 = channel_params(cfg, point.z).w_over_r0();
        auto channel = obtain_superop(point, cfg);
        rec.cache_hit = channel.cache_hit;
        KrausOptions kopts;
        kopts.cutoff_ratio = cfg.cutoff_ratio;
        const KrausSet K = kraus_decompose(rearrange(channel.superop), kopts);
        const CodeSpec code = build_code(point.trunc);
        rec.fidelity = channel_fidelity(K, code, cfg.rank_tol);
        rec.deficiency = completeness_deficiency(K).largest;
        rec.kraus_count = K.size();
    } catch (const AssemblyCancelled&) {
        throw;
    } catch (const std::exception& e) {
        throw PointFailure(point, e.what());
    }
    rec.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

SweepResult run_sweep(const ScenarioConfig& cfg,
                      const std::function<void(const FidelityRecord&)>& on_record) {
    SweepResult result;
    for (const auto& point : expand_grid(cfg)) {
        if (cancellation_requested()) {
            result.cancelled = true;
            break;
        }
        FidelityRecord rec;
        try {
            rec = run_point(point, cfg);
        } catch (const AssemblyCancelled&) {
            result.cancelled = true;
            break;
        } catch (const PointFailure& e) {
            rec.z = point.z;
            rec.max_in = point.trunc.max_in;
            rec.max_out = point.trunc.max_out;
            rec.error = e.what();
            ++result.failures;
        }
        if (on_record) {
            on_record(rec);
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

std::string format_record(const FidelityRecord& r) {
    if (r.error) {
        return fmt::format("{:.6g},nan,{},{},error,nan,0,nan", r.z, r.max_in, r.max_out);
    }
    return fmt::format("{:.6g},{:.6g},{},{},{:.4f},{:.6g},{},{:.6g}", r.z, r.w_over_r0, r.max_in,
                       r.max_out, r.fidelity, r.deficiency, r.kraus_count, r.runtime_seconds);
}

std::string results_csv(const std::vector<FidelityRecord>& records) {
    std::string out = std::string(kResultsHeader) + "\n";
    for (const auto& r : records) {
        out += format_record(r);
        out += '\n';
    }
    return out;
}

}  // namespace oamqec
