#include <bit>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "oamqec/io_util.hpp"
#include "oamqec/superop_io.hpp"

using namespace oamqec;

namespace {

class SuperopIo : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("oamqec_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    static SuperopMatrix sample() {
        TurbulenceParams t;
        t.cn2 = 1e-14;
        return assemble_superop({1, 1}, {BeamGeometry(0.01, 1e-6), t, 200.0});
    }

    std::filesystem::path dir_;
};

TEST_F(SuperopIo, RoundTripIsBitwise) {
    const auto T = sample();
    const auto path = dir_ / "t.superop";
    save_superop(T, path);
    const auto U = load_superop(path);
    ASSERT_EQ(U.entry_count(), T.entry_count());
    for (std::size_t i = 0; i < T.entry_count(); ++i) {
        EXPECT_EQ(U.entries()[i].index, T.entries()[i].index);
        EXPECT_EQ(std::bit_cast<std::uint64_t>(U.entries()[i].value.real()),
                  std::bit_cast<std::uint64_t>(T.entries()[i].value.real()));
        EXPECT_EQ(std::bit_cast<std::uint64_t>(U.entries()[i].value.imag()),
                  std::bit_cast<std::uint64_t>(T.entries()[i].value.imag()));
    }
    EXPECT_EQ(U.metadata().z, 200.0);
    EXPECT_EQ(U.metadata().turbulence.cn2, 1e-14);
    EXPECT_EQ(U.metadata().max_error_estimate, T.metadata().max_error_estimate);
    EXPECT_EQ(std::filesystem::file_size(path), T.entry_count() * 32);
}

TEST_F(SuperopIo, SidecarFields) {
    const auto T = sample();
    const auto path = dir_ / "t.superop";
    save_superop(T, path);
    const auto j = nlohmann::json::parse(read_file(sidecar_path(path)));
    for (const char* key : {"format_version", "w0", "lambda", "cn2", "z", "max_in", "max_out", "rel_tol",
                            "abs_tol", "basis_order", "sha256"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["basis_order"], "l ascending then p ascending");
    EXPECT_EQ(j["sha256"], sha256_hex(read_file(path)));
    EXPECT_EQ(peek_cache_key(path), superop_cache_key(T.truncation(), T.metadata()));
}

TEST_F(SuperopIo, EditedParameterIsHashMismatch) {
    const auto path = dir_ / "t.superop";
    save_superop(sample(), path);
    auto j = nlohmann::json::parse(read_file(sidecar_path(path)));
    j["cn2"] = 2e-14;
    write_file_atomic(sidecar_path(path), j.dump());
    EXPECT_THROW(load_superop(path), HashMismatch);
}

TEST_F(SuperopIo, CorruptPayloadIsHashMismatch) {
    const auto path = dir_ / "t.superop";
    save_superop(sample(), path);
    std::string bytes = read_file(path);
    bytes[40] ^= 0x01;
    write_file_atomic(path, bytes);
    EXPECT_THROW(load_superop(path), HashMismatch);
}

TEST_F(SuperopIo, MalformedFiles) {
    const auto path = dir_ / "t.superop";
    save_superop(sample(), path);
    std::string bytes = read_file(path);
    bytes.resize(bytes.size() - 5);
    write_file_atomic(path, bytes);
    auto j = nlohmann::json::parse(read_file(sidecar_path(path)));
    j["sha256"] = sha256_hex(bytes);
    write_file_atomic(sidecar_path(path), j.dump());
    EXPECT_THROW(load_superop(path), FormatError);
    write_file_atomic(sidecar_path(path), "{not json");
    EXPECT_THROW(load_superop(path), FormatError);
    EXPECT_THROW(load_superop(dir_ / "missing.superop"), std::exception);
}

TEST_F(SuperopIo, EmptyMatrixRoundTrips) {
    SuperopMetadata meta;
    meta.z = 42.0;
    const SuperopMatrix T({1, 1}, meta);
    const auto path = dir_ / "empty.superop";
    save_superop(T, path);
    const auto U = load_superop(path);
    EXPECT_EQ(U.entry_count(), 0u);
    EXPECT_EQ(U.metadata().z, 42.0);
}

TEST_F(SuperopIo, CacheKeyTracksParameters) {
    SuperopMetadata a;
    a.z = 500.0;
    SuperopMetadata b = a;
    b.turbulence.cn2 = 1e-15;
    SuperopMetadata c = a;
    c.method = ElementMethod::adaptive_cubature;
    const TruncationSpec t{1, 2};
    EXPECT_EQ(superop_cache_key(t, a), superop_cache_key(t, a));
    EXPECT_NE(superop_cache_key(t, a), superop_cache_key(t, b));
    EXPECT_NE(superop_cache_key(t, a), superop_cache_key(t, c));
    EXPECT_NE(superop_cache_key(t, a), superop_cache_key({1, 3}, a));
    EXPECT_EQ(superop_cache_key(t, a).size(), 64u);
}

TEST(IoUtil, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(IoUtil, ByteRoundTrip) {
    ByteWriter w;
    w.put_i16(-3);
    w.put_u64(0x0102030405060708ULL);
    w.put_f64(-0.1);
    EXPECT_EQ(static_cast<unsigned char>(w.bytes()[2]), 0x08);  // little-endian
    ByteReader r(w.bytes());
    EXPECT_EQ(r.get_i16(), -3);
    EXPECT_EQ(r.get_u64(), 0x0102030405060708ULL);
    EXPECT_EQ(r.get_f64(), -0.1);
    EXPECT_EQ(r.remaining(), 0u);
    EXPECT_THROW(r.get_i16(), FormatError);
}

}  // namespace
