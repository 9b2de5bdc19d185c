#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace oamqec {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a truncated file under the final name.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Little-endian record encoder.
class ByteWriter {
public:
    void put_i16(std::int16_t v);
    void put_u64(std::uint64_t v);
    void put_f64(double v);
    const std::string& bytes() const { return buffer_; }

private:
    std::string buffer_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}
    std::int16_t get_i16();
    std::uint64_t get_u64();
    double get_f64();
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view take(std::size_t n);
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace oamqec
