#include <cmath>
#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "oamqec/io_util.hpp"
#include "oamqec/pipeline.hpp"

using namespace oamqec;

namespace {

class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("oamqec_" + name)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

TEST(Config, DefaultsAndParsing) {
    const auto cfg = config_from_json(nlohmann::json::parse(
        R"({"w0": 0.02, "z_list": [5, 1], "max_in_list": [1], "max_out_list": [2], "workers": 1})"));
    EXPECT_EQ(cfg.w0, 0.02);
    EXPECT_EQ(cfg.lambda, 1e-6);
    EXPECT_EQ(cfg.cn2, 1e-14);
    EXPECT_EQ(cfg.z_list, (std::vector<double>{5, 1}));
    EXPECT_EQ(cfg.workers, 1);
    EXPECT_EQ(config_from_json(config_to_json(cfg)).z_list, cfg.z_list);
}

TEST(Config, RejectsUnknownAndInvalid) {
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"w_0": 0.01})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"w0": "big"})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"w0": -1})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"cn2": -1e-14})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"([1, 2])")), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(ExpandGrid, SmallGrid) {
    ScenarioConfig cfg;
    cfg.z_list = {1};
    cfg.max_in_list = {1};
    cfg.max_out_list = {1, 2};
    const auto pts = expand_grid(cfg);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[0].trunc.max_out, 1);
    EXPECT_EQ(pts[1].trunc.max_out, 2);
}

TEST(ExpandGrid, ReferenceGridOrder) {
    ScenarioConfig cfg;
    cfg.z_list = {1000, 1, 500, 10, 200};
    cfg.max_in_list = {3, 2, 1};
    cfg.max_out_list = {1, 2, 3, 4, 5, 6};
    const auto pts = expand_grid(cfg);
    ASSERT_EQ(pts.size(), 75u);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto& a = pts[i - 1];
        const auto& b = pts[i];
        EXPECT_TRUE(std::tie(a.z, a.trunc.max_in, a.trunc.max_out) <
                    std::tie(b.z, b.trunc.max_in, b.trunc.max_out));
        EXPECT_GE(b.trunc.max_out, b.trunc.max_in);
    }
    EXPECT_EQ(pts.front().z, 1.0);
}

TEST(ExpandGrid, Errors) {
    ScenarioConfig cfg;
    cfg.z_list = {};
    EXPECT_THROW(expand_grid(cfg), ConfigError);
    cfg.z_list = {1};
    cfg.max_in_list = {2};
    cfg.max_out_list = {1};
    EXPECT_THROW(expand_grid(cfg), ConfigError);
    cfg.max_in_list = {1, 3};
    cfg.max_out_list = {2};
    EXPECT_THROW(expand_grid(cfg), ConfigError);
}

TEST(RunPoint, ZeroTurbulence) {
    ScenarioConfig cfg;
    cfg.cn2 = 0.0;
    const auto rec = run_point({500.0, {1, 2}}, cfg);
    EXPECT_NEAR(rec.fidelity, 1.0, 1e-10);
    EXPECT_NEAR(rec.deficiency, 0.0, 1e-10);
    EXPECT_EQ(rec.kraus_count, 1u);
    EXPECT_EQ(rec.w_over_r0, 0.0);
}

TEST(RunPoint, ReferenceValue) {
    ScenarioConfig cfg;
    const auto rec = run_point({200.0, {1, 3}}, cfg);
    EXPECT_NEAR(rec.fidelity, 0.9558, 0.02);
    const double w = beam_width(BeamGeometry(0.01, 1e-6), 200.0);
    EXPECT_NEAR(rec.w_over_r0 / (w / fried_parameter(1e-6, 1e-14, 200.0)), 1.0, 1e-12);
    EXPECT_GT(rec.deficiency, 0.0);
    EXPECT_LT(rec.deficiency, 1.0);
}

TEST(RunPoint, CacheCoherence) {
    TempDir dir("pipeline_cache");
    ScenarioConfig cfg;
    cfg.cache_dir = dir.path().string();
    ::unsetenv("OAM_CACHE_DIR");
    const ScenarioPoint pt{500.0, {1, 2}};
    const auto fresh = run_point(pt, cfg);
    EXPECT_FALSE(fresh.cache_hit);
    const auto warm = run_point(pt, cfg);
    EXPECT_TRUE(warm.cache_hit);
    auto strip = [](FidelityRecord r) {
        r.runtime_seconds = 0.0;
        r.cache_hit = false;
        return format_record(r);
    };
    EXPECT_EQ(strip(fresh), strip(warm));
    EXPECT_EQ(fresh.fidelity, warm.fidelity);
    EXPECT_EQ(fresh.deficiency, warm.deficiency);
    ScenarioConfig uncached;
    const auto direct = run_point(pt, uncached);
    EXPECT_EQ(direct.fidelity, fresh.fidelity);
}

TEST(RunPoint, EnvOverridesCacheDir) {
    TempDir dir("pipeline_env");
    ::setenv("OAM_CACHE_DIR", dir.path().c_str(), 1);
    ScenarioConfig cfg;
    cfg.cache_dir = "/nonexistent/unused";
    EXPECT_EQ(cfg.effective_cache_dir(), dir.path());
    (void)run_point({10.0, {1, 1}}, cfg);
    ::unsetenv("OAM_CACHE_DIR");
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
        files += entry.path().extension() == ".superop" ? 1 : 0;
    }
    EXPECT_EQ(files, 1u);
}

TEST(RunPoint, CorruptCacheIsRecomputed) {
    TempDir dir("pipeline_corrupt");
    ScenarioConfig cfg;
    cfg.cache_dir = dir.path().string();
    const ScenarioPoint pt{10.0, {1, 1}};
    const auto first = run_point(pt, cfg);
    for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
        if (entry.path().extension() == ".superop") {
            std::filesystem::resize_file(entry.path(), 64);
        }
    }
    const auto again = run_point(pt, cfg);
    EXPECT_FALSE(again.cache_hit);
    EXPECT_EQ(again.fidelity, first.fidelity);
}

TEST(Sweep, FailurePolicyContinues) {
    TempDir dir("pipeline_fail");
    const auto blocker = dir.path() / "file";
    write_file_atomic(blocker, "x");
    ScenarioConfig cfg;
    cfg.z_list = {10.0, 200.0};
    cfg.cache_dir = (blocker / "cache").string();
    // the cache directory cannot be created under a regular file
    const auto result = run_sweep(cfg);
    EXPECT_EQ(result.records.size(), 2u);
    EXPECT_EQ(result.failures, 2u);
    for (const auto& r : result.records) {
        ASSERT_TRUE(r.error.has_value());
        EXPECT_NE(r.error->find("z="), std::string::npos);
    }
    EXPECT_NE(results_csv(result.records).find("10,nan,1,1,error,nan,0,nan"), std::string::npos);
}

TEST(Sweep, CancellationKeepsFinishedRecords) {
    ScenarioConfig cfg;
    cfg.z_list = {10.0, 200.0, 500.0};
    std::size_t seen = 0;
    const auto result = run_sweep(cfg, [&](const FidelityRecord&) {
        if (++seen == 1) {
            request_cancellation();
        }
    });
    clear_cancellation();
    EXPECT_TRUE(result.cancelled);
    EXPECT_EQ(result.records.size(), 1u);
}

TEST(ResultsCsv, Format) {
    FidelityRecord r;
    r.z = 500.0;
    r.w_over_r0 = 0.26639234;
    r.max_in = 1;
    r.max_out = 3;
    r.fidelity = 0.73886123;
    r.deficiency = 0.0123456789;
    r.kraus_count = 50;
    r.runtime_seconds = 1.23456789;
    EXPECT_EQ(format_record(r), "500,0.266392,1,3,0.7389,0.0123457,50,1.23457");
    const std::string csv = results_csv({r});
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "z,w_over_r0,max_in,max_out,fidelity,deficiency,kraus_count,runtime_seconds");
}

}  // namespace
