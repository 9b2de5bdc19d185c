#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "oamqec/channel_superop.hpp"
#include "oamqec/io_util.hpp"

namespace oamqec {

inline constexpr int kSuperopFormatVersion = 1;
inline constexpr const char* kBasisOrder = "l ascending then p ascending";

class HashMismatch : public FormatError {
public:
    using FormatError::FormatError;
};

/// SHA-256 over the canonical (sorted-key, compact) JSON of the parameters
/// that determine a superoperator.
std::string superop_cache_key(const TruncationSpec& trunc, const SuperopMetadata& meta);

nlohmann::json superop_sidecar(const SuperopMatrix& T, const std::string& payload_sha256);

/// Sidecar path for a payload path: "<path>.json".
std::filesystem::path sidecar_path(const std::filesystem::path& payload);

/// Binary payload: per entry eight int16 (l~,p~,l~',p~',l,p,l',p') then re, im
/// as little-endian doubles, sorted by tuple. Both files are written atomically.
void save_superop(const SuperopMatrix& T, const std::filesystem::path& path);

/// Throws HashMismatch when the sidecar parameters or the payload digest do
/// not match, FormatError for malformed files.
SuperopMatrix load_superop(const std::filesystem::path& path);

/// Reads only the sidecar's parameter hash (empty if missing or unreadable).
std::string peek_cache_key(const std::filesystem::path& path);

}  // namespace oamqec
