#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "checks.hpp"
#include "oamqec/aqec.hpp"
#include "oamqec/field_grid.hpp"
#include "oamqec/io_util.hpp"
#include "oamqec/kraus.hpp"
#include "oamqec/pipeline.hpp"
#include "oamqec/superop_io.hpp"

using namespace oamqec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

extern "C" void on_sigint(int) { request_cancellation(); }

struct Overrides {
    std::string config;
    std::optional<double> z, w0, lambda, cn2, rel_tol, abs_tol, rank_tol, cutoff_ratio;
    std::optional<int> max_in, max_out, workers;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "Scenario JSON file")->required();
        app->add_option("--z", z, "Path length in m (replaces z_list)");
        app->add_option("--max-in", max_in, "Input truncation (replaces max_in_list)");
        app->add_option("--max-out", max_out, "Output truncation (replaces max_out_list)");
        app->add_option("--w0", w0, "Beam waist in m");
        app->add_option("--lambda", lambda, "Wavelength in m");
        app->add_option("--cn2", cn2, "Refractive-index structure constant");
        app->add_option("--rel-tol", rel_tol, "Relative quadrature tolerance");
        app->add_option("--abs-tol", abs_tol, "Absolute quadrature tolerance");
        app->add_option("--rank-tol", rank_tol, "Relative support cut for E(P)");
        app->add_option("--cutoff-ratio", cutoff_ratio, "Kraus eigenvalue cutoff relative to the largest");
        app->add_option("--workers", workers, "Thread count (0 = one per core)");
    }

    ScenarioConfig load() const {
        ScenarioConfig cfg = load_config(config);
        if (z) cfg.z_list = {*z};
        if (max_in) cfg.max_in_list = {*max_in};
        if (max_out) cfg.max_out_list = {*max_out};
        if (w0) cfg.w0 = *w0;
        if (lambda) cfg.lambda = *lambda;
        if (cn2) cfg.cn2 = *cn2;
        if (rel_tol) cfg.rel_tol = *rel_tol;
        if (abs_tol) cfg.abs_tol = *abs_tol;
        if (rank_tol) cfg.rank_tol = *rank_tol;
        if (cutoff_ratio) cfg.cutoff_ratio = *cutoff_ratio;
        if (workers) cfg.workers = *workers;
        cfg.validate();
        return cfg;
    }
};

ScenarioPoint single_point(const ScenarioConfig& cfg) {
    const auto points = expand_grid(cfg);
    if (points.size() != 1) {
        fmt::print(stderr, "note: config describes {} points, using {}\n", points.size(),
                   to_string(points.front()));
    }
    return points.front();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_compute_superop(const Overrides& o, const std::string& out) {
    const ScenarioConfig cfg = o.load();
    const ScenarioPoint point = single_point(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    if (!out.empty()) {
        SuperopMetadata probe;
        const auto params = channel_params(cfg, point.z);
        probe.geometry = params.geometry;
        probe.turbulence = params.turbulence;
        probe.z = params.z;
        probe.tolerance = assembly_options(cfg).tolerance;
        const std::string key = superop_cache_key(point.trunc, probe);
        if (std::filesystem::exists(out) && peek_cache_key(out) == key) {
            const SuperopMatrix T = load_superop(out);
            fmt::print("cache hit: {}\n", out);
            fmt::print("elements: {}\nmax quadrature error: {:.3e}\nwall time: {:.3f} s\n",
                       T.entry_count(), T.metadata().max_error_estimate, seconds_since(t0));
            return kExitOk;
        }
    }
    const LoadedChannel channel = obtain_superop(point, cfg);
    if (channel.cache_hit) {
        fmt::print("cache hit: {}\n", channel.cache_file.string());
    }
    if (!out.empty()) {
        save_superop(channel.superop, out);
    }
    const auto& T = channel.superop;
    fmt::print("elements: {}\nmax quadrature error: {:.3e}\nwall time: {:.3f} s\n", T.entry_count(),
               T.metadata().max_error_estimate, seconds_since(t0));
    const auto written = out.empty() ? channel.cache_file : std::filesystem::path(out);
    if (!written.empty()) {
        fmt::print("written: {}\n", written.string());
    }
    return kExitOk;
}

int cmd_kraus(const Overrides& o, const std::string& superop_in, const std::string& out) {
    const ScenarioConfig cfg = o.load();
    std::optional<SuperopMatrix> T;
    if (!superop_in.empty()) {
        T = load_superop(superop_in);
    } else {
        T = obtain_superop(single_point(cfg), cfg).superop;
    }
    KrausOptions options;
    options.cutoff_ratio = cfg.cutoff_ratio;
    const KrausSet K = kraus_decompose(rearrange(*T), options);
    fmt::print("operators: {} (dropped {}, clamped {})\n", K.size(), K.dropped, K.clamped);
    if (K.size() == 0) {
        fmt::print(stderr, "error: the channel has no positive eigenvalues\n");
        return kExitFailure;
    }
    fmt::print("leading eigenvalue: {:.9g}\n", K.eigenvalues.front());
    fmt::print("completeness deficiency: {:.6g}\n", completeness_deficiency(K).largest);
    const auto report = leading_kraus_analysis(K);
    fmt::print("leading operator: c = {:.6g}{:+.6g}i, |A1 - cE|/|c| = {:.6g}\n", report.scale.real(),
               report.scale.imag(), report.relative_residual);
    for (const auto& pair : report.pairs) {
        fmt::print("pair {}/{}: lambda {:.6g}, {:.6g}, shifts {:+d} {:+d}\n", pair.first + 1,
                   pair.second + 1, K.eigenvalues[pair.first], K.eigenvalues[pair.second],
                   pair.shift_first, pair.shift_second);
    }
    if (!out.empty()) {
        export_kraus(K, out);
        fmt::print("written: {}\n", out);
    }
    return kExitOk;
}

int cmd_sweep(const Overrides& o, const std::string& out) {
    const ScenarioConfig cfg = o.load();
    const auto points = expand_grid(cfg);
    fmt::print("{} points\n", points.size());
    fmt::print("{}\n", kResultsHeader);
    const SweepResult result = run_sweep(cfg, [](const FidelityRecord& r) {
        fmt::print("{}{}\n", format_record(r), r.cache_hit ? "  (cache hit)" : "");
        if (r.error) {
            fmt::print(stderr, "failed: {}\n", *r.error);
        }
        std::fflush(stdout);
    });
    write_file_atomic(out, results_csv(result.records));
    if (result.cancelled) {
        fmt::print(stderr, "cancelled after {} of {} points; partial results in {}\n",
                   result.records.size(), points.size(), out);
        return kExitFailure;
    }
    if (result.failures > 0) {
        fmt::print(stderr, "{} of {} points failed\n", result.failures, points.size());
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_field_grid(const Overrides& o, const std::string& state_name, const std::string& stage,
                   const GridSpec& spec, const std::string& out) {
    const ScenarioConfig cfg = o.load();
    const ScenarioPoint point = single_point(cfg);
    const CodeSpec code = build_code(point.trunc);
    const Eigen::VectorXcd psi = state_name == "logical0" ? code.logical_zero : code.logical_one;
    const BeamGeometry geom(cfg.w0, cfg.lambda);
    std::optional<StateOnModes> state;
    if (stage == "before") {
        state = StateOnModes::pure(point.trunc.max_in, psi, point.z);
    } else {
        const auto channel = obtain_superop(point, cfg);
        KrausOptions options;
        options.cutoff_ratio = cfg.cutoff_ratio;
        const KrausSet K = kraus_decompose(rearrange(channel.superop), options);
        const Eigen::MatrixXcd rho = psi * psi.adjoint();
        if (stage == "after-noise") {
            state = StateOnModes::mixed(point.trunc.max_out, apply_kraus(K, rho), point.z,
                                        SpaceTag::output);
        } else {
            const RecoveryMap R = transpose_recovery(K, code, cfg.rank_tol);
            state = StateOnModes::mixed(point.trunc.max_in, apply_channel_and_recover(K, R, rho),
                                        point.z, SpaceTag::input);
        }
    }
    const FieldGrid grid = state_intensity_grid(*state, geom, spec);
    write_field_grid_csv(grid, out);
    fmt::print("{}x{} grid, integrated intensity {:.6f}, written: {}\n", grid.x.size(),
               grid.y.size(), grid.integrated_intensity(), out);
    return kExitOk;
}

int cmd_verify(const std::string& level) {
    const auto lv = level == "full" ? oracle::VerifyLevel::full : oracle::VerifyLevel::fast;
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = oracle::run_verification(lv, [](const oracle::CheckResult& r) {
        fmt::print("[{}] {}: {}\n", r.passed ? "PASS" : "FAIL", r.name, r.detail);
        std::fflush(stdout);
    });
    std::size_t failed = 0;
    for (const auto& r : results) {
        failed += r.passed ? 0 : 1;
    }
    fmt::print("{} checks, {} failed, {:.1f} s\n", results.size(), failed, seconds_since(t0));
    return failed == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OAM channel simulation and approximate error correction"};
    app.require_subcommand(1);
    app.footer("Numeric flags take precedence over config values; OAM_CACHE_DIR overrides cache_dir.\n"
               "Exit status: 0 success, 1 computation failure, 2 usage or config error.");

    Overrides superop_o, kraus_o, sweep_o, grid_o;
    std::string superop_out, kraus_in, kraus_out, sweep_out, grid_out;
    std::string state_name, stage, level = "fast";
    GridSpec spec;

    auto* superop = app.add_subcommand("compute-superop", "Assemble and store the channel superoperator");
    superop_o.attach(superop);
    superop->add_option("--out", superop_out, "Superoperator output file (default: cache directory)");

    auto* kraus = app.add_subcommand("kraus", "Kraus decomposition of a superoperator");
    kraus_o.attach(kraus);
    kraus->add_option("--superop", kraus_in, "Read this superoperator instead of assembling one");
    kraus->add_option("--out", kraus_out, "Kraus operator output file");

    auto* sweep = app.add_subcommand("fidelity-sweep", "Channel fidelity over the configured grid");
    sweep_o.attach(sweep);
    sweep->add_option("--out", sweep_out, "Results CSV")->required();

    auto* grid = app.add_subcommand("field-grid", "Intensity grid of a logical state");
    grid_o.attach(grid);
    grid->add_option("--state", state_name, "logical0 or logical1")
        ->required()
        ->check(CLI::IsMember({"logical0", "logical1"}));
    grid->add_option("--stage", stage, "before, after-noise or after-recovery")
        ->required()
        ->check(CLI::IsMember({"before", "after-noise", "after-recovery"}));
    grid->add_option("--points", spec.points, "Samples per axis")->check(CLI::Range(2, 4096));
    grid->add_option("--half-width", spec.half_width_in_w, "Half width in units of w(z)")
        ->check(CLI::PositiveNumber);
    grid->add_option("--out", grid_out, "Grid CSV")->required();

    auto* verify = app.add_subcommand("verify", "Run the oracle cross-checks");
    verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    std::signal(SIGINT, on_sigint);
    try {
        if (superop->parsed()) return cmd_compute_superop(superop_o, superop_out);
        if (kraus->parsed()) return cmd_kraus(kraus_o, kraus_in, kraus_out);
        if (sweep->parsed()) return cmd_sweep(sweep_o, sweep_out);
        if (grid->parsed()) return cmd_field_grid(grid_o, state_name, stage, spec, grid_out);
        if (verify->parsed()) return cmd_verify(level);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kExitUsage;
    } catch (const AssemblyCancelled& e) {
        fmt::print(stderr, "{}\n", e.what());
        return kExitFailure;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitFailure;
    }
    return kExitUsage;
}
