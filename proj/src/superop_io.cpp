#include "oamqec/superop_io.hpp"

#include <limits>

namespace oamqec {

namespace {

using nlohmann::json;

json key_fields(const TruncationSpec& trunc, const SuperopMetadata& meta) {
    json j;
    j["format_version"] = kSuperopFormatVersion;
    j["w0"] = meta.geometry.waist();
    j["lambda"] = meta.geometry.wavelength();
    j["cn2"] = meta.turbulence.cn2;
    j["z"] = meta.z;
    j["max_in"] = trunc.max_in;
    j["max_out"] = trunc.max_out;
    j["rel_tol"] = meta.tolerance.rel_tol;
    j["abs_tol"] = meta.tolerance.abs_tol;
    j["element_method"] = to_string(meta.method);
    return j;
}

template <typename T>
T field(const json& j, const char* name) {
    if (!j.contains(name)) {
        throw FormatError(std::string("sidecar is missing field '") + name + "'");
    }
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("sidecar field '") + name + "' has the wrong type");
    }
}

std::int16_t narrow(int v) {
    if (v < std::numeric_limits<std::int16_t>::min() || v > std::numeric_limits<std::int16_t>::max()) {
        throw FormatError("mode index does not fit in int16");
    }
    return static_cast<std::int16_t>(v);
}

}  // namespace

std::string superop_cache_key(const TruncationSpec& trunc, const SuperopMetadata& meta) {
    return sha256_hex(key_fields(trunc, meta).dump());
}

std::filesystem::path sidecar_path(const std::filesystem::path& payload) {
    auto p = payload;
    p += ".json";
    return p;
}

json superop_sidecar(const SuperopMatrix& T, const std::string& payload_sha256) {
    json j = key_fields(T.truncation(), T.metadata());
    j["turbulence_model"] = to_string(T.metadata().turbulence.model);
    j["max_evaluations"] = T.metadata().tolerance.max_evaluations;
    j["max_error_estimate"] = T.metadata().max_error_estimate;
    j["basis_order"] = kBasisOrder;
    j["entry_count"] = T.entry_count();
    j["sha256"] = payload_sha256;
    j["parameter_hash"] = superop_cache_key(T.truncation(), T.metadata());
    return j;
}

void save_superop(const SuperopMatrix& T, const std::filesystem::path& path) {
    ByteWriter w;
    for (const auto& e : T.entries()) {
        for (const ModeIndex& m : {e.index.out_row, e.index.out_col, e.index.in_row, e.index.in_col}) {
            w.put_i16(narrow(m.l));
            w.put_i16(narrow(m.p));
        }
        w.put_f64(e.value.real());
        w.put_f64(e.value.imag());
    }
    const std::string digest = sha256_hex(w.bytes());
    // Payload first: a sidecar never points at a missing payload.
    write_file_atomic(path, w.bytes());
    write_file_atomic(sidecar_path(path), superop_sidecar(T, digest).dump(2) + "\n");
}

SuperopMatrix load_superop(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(sidecar_path(path)));
    } catch (const json::exception& e) {
        throw FormatError("malformed superoperator sidecar: " + std::string(e.what()));
    }
    if (field<int>(j, "format_version") != kSuperopFormatVersion) {
        throw FormatError("unsupported superoperator format version");
    }
    if (field<std::string>(j, "basis_order") != kBasisOrder) {
        throw FormatError("unsupported basis order");
    }
    TruncationSpec trunc{field<int>(j, "max_in"), field<int>(j, "max_out")};
    try {
        trunc.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("invalid truncation in sidecar: ") + e.what());
    }
    SuperopMetadata meta;
    meta.geometry = BeamGeometry(field<double>(j, "w0"), field<double>(j, "lambda"));
    meta.turbulence.cn2 = field<double>(j, "cn2");
    meta.turbulence.model = turbulence_model_from_string(field<std::string>(j, "turbulence_model"));
    meta.z = field<double>(j, "z");
    meta.tolerance.rel_tol = field<double>(j, "rel_tol");
    meta.tolerance.abs_tol = field<double>(j, "abs_tol");
    meta.tolerance.max_evaluations = field<std::size_t>(j, "max_evaluations");
    meta.method = element_method_from_string(field<std::string>(j, "element_method"));
    meta.max_error_estimate = field<double>(j, "max_error_estimate");

    if (field<std::string>(j, "parameter_hash") != superop_cache_key(trunc, meta)) {
        throw HashMismatch("superoperator sidecar parameters do not match their hash");
    }
    const std::string payload = read_file(path);
    if (field<std::string>(j, "sha256") != sha256_hex(payload)) {
        throw HashMismatch("superoperator payload does not match its sha256");
    }
    constexpr std::size_t kRecord = 8 * 2 + 2 * 8;
    if (payload.size() % kRecord != 0) {
        throw FormatError("superoperator payload size is not a whole number of records");
    }
    const std::size_t count = payload.size() / kRecord;
    if (count != field<std::size_t>(j, "entry_count")) {
        throw FormatError("superoperator entry count does not match the payload");
    }
    ByteReader r(payload);
    std::vector<SuperopMatrix::Entry> entries;
    entries.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        ModeIndex m[4];
        for (auto& mode : m) {
            mode.l = r.get_i16();
            mode.p = r.get_i16();
        }
        const double re = r.get_f64();
        const double im = r.get_f64();
        ElementIndex idx{m[0], m[1], m[2], m[3]};
        if (!entries.empty() && !(entries.back().index < idx)) {
            throw FormatError("superoperator records are not strictly sorted");
        }
        entries.push_back({idx, {re, im}});
    }
    SuperopMatrix T(trunc, meta);
    try {
        T.assign(std::move(entries));
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("invalid superoperator record: ") + e.what());
    }
    return T;
}

std::string peek_cache_key(const std::filesystem::path& path) {
    try {
        const json j = json::parse(read_file(sidecar_path(path)));
        return j.value("parameter_hash", std::string{});
    } catch (const std::exception&) {
        return {};
    }
}

}  // namespace oamqec
