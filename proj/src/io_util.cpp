#include "oamqec/io_util.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <unistd.h>

namespace oamqec {

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        hex += fmt::format("{:02x}", digest[i]);
    }
    return hex;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += fmt::format(".tmp.{}", ::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

template <typename U>
void append_le(std::string& buffer, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        buffer.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
    }
}

template <typename U>
U read_le(std::string_view raw) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        v |= static_cast<U>(static_cast<unsigned char>(raw[i])) << (8 * i);
    }
    return v;
}

}  // namespace

void ByteWriter::put_i16(std::int16_t v) { append_le(buffer_, std::bit_cast<std::uint16_t>(v)); }
void ByteWriter::put_u64(std::uint64_t v) { append_le(buffer_, v); }
void ByteWriter::put_f64(double v) { append_le(buffer_, std::bit_cast<std::uint64_t>(v)); }

std::string_view ByteReader::take(std::size_t n) {
    if (remaining() < n) {
        throw FormatError("binary payload truncated");
    }
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
}

std::int16_t ByteReader::get_i16() {
    return std::bit_cast<std::int16_t>(read_le<std::uint16_t>(take(2)));
}
std::uint64_t ByteReader::get_u64() { return read_le<std::uint64_t>(take(8)); }
double ByteReader::get_f64() { return std::bit_cast<double>(read_le<std::uint64_t>(take(8))); }

}  // namespace oamqec
