// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/embedding_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <nlohmann/json.hpp>

namespace decorstory {
namespace {

constexpr std::uint8_t kMagic[4] = {'D', 'E', 'M', 'B'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | p[i];
    }
    return v;
}

template <Real T>
using Bits = std::conditional_t<std::is_same_v<T, float>, std::uint32_t, std::uint64_t>;

std::size_t dtype_size(Dtype d) {
    return d == Dtype::f32 ? 4 : 8;
}

template <Real Stored>
Stored get_value(const std::uint8_t* p) {
    Bits<Stored> v = 0;
    for (int i = static_cast<int>(sizeof(Stored)) - 1; i >= 0; --i) {
        v = (v << 8) | p[i];
    }
    return std::bit_cast<Stored>(v);
}

template <Real T, Real Stored>
Matrix<T> decode_payload(const std::uint8_t* payload, std::size_t rows, std::size_t cols) {
    Matrix<T> m(rows, cols);
    T* out = m.data();
    for (std::size_t i = 0; i < rows * cols; ++i) {
        const Stored v = get_value<Stored>(payload + i * sizeof(Stored));
        const T cast = static_cast<T>(v);
        if (!std::isfinite(cast)) {
            raise(Errc::non_finite_entry, "entry " + std::to_string(i) + " is not finite");
        }
        out[i] = cast;
    }
    return m;
}

TokenSpan span_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned()) {
        raise(Errc::malformed_file, std::string("layout field '") + what + "' must be an [start, end] pair");
    }
    return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

std::size_t index_from_json(const nlohmann::json& root, const char* key) {
    if (!root.contains(key) || !root[key].is_number_unsigned()) {
        raise(Errc::malformed_file, std::string("layout field '") + key + "' must be a non-negative integer");
    }
    return root[key].get<std::size_t>();
}

}  // namespace

template <Real T>
std::vector<std::uint8_t> encode_demb(const Matrix<T>& matrix) {
    if (!matrix.all_finite()) {
        raise(Errc::non_finite_entry, "refusing to write a matrix containing NaN or Inf");
    }
    std::vector<std::uint8_t> out;
    out.reserve(kDembHeaderBytes + matrix.size() * sizeof(T));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(kDembVersion);
    out.push_back(static_cast<std::uint8_t>(dtype_of<T>()));
    out.push_back(0);
    out.push_back(0);
    put_u64(out, matrix.rows());
    put_u64(out, matrix.cols());
    for (T v : matrix.values()) {
        const auto bits = std::bit_cast<Bits<T>>(v);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }
    return out;
}

DembHeader decode_demb_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kDembHeaderBytes) {
        raise(Errc::malformed_file, "truncated header (" + std::to_string(bytes.size()) + " bytes)");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        raise(Errc::malformed_file, "bad magic, expected \"DEMB\"");
    }
    if (bytes[4] != kDembVersion) {
        raise(Errc::malformed_file, "unsupported version " + std::to_string(bytes[4]));
    }
    if (bytes[5] != static_cast<std::uint8_t>(Dtype::f32) && bytes[5] != static_cast<std::uint8_t>(Dtype::f64)) {
        raise(Errc::malformed_file, "unknown dtype code " + std::to_string(bytes[5]));
    }
    if (bytes[6] != 0 || bytes[7] != 0) {
        raise(Errc::malformed_file, "reserved header bytes must be zero");
    }
    DembHeader h;
    h.dtype = static_cast<Dtype>(bytes[5]);
    h.rows = get_u64(bytes.data() + 8);
    h.cols = get_u64(bytes.data() + 16);
    return h;
}

template <Real T>
Matrix<T> decode_demb(std::span<const std::uint8_t> bytes) {
    const DembHeader h = decode_demb_header(bytes);
    const std::size_t elem = dtype_size(h.dtype);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / elem;
    if (h.cols != 0 && h.rows > limit / h.cols) {
        raise(Errc::malformed_file, "matrix dimensions overflow");
    }
    const std::uint64_t payload = h.rows * h.cols * elem;
    if (bytes.size() - kDembHeaderBytes != payload) {
        raise(Errc::malformed_file, "payload is " + std::to_string(bytes.size() - kDembHeaderBytes) +
                                        " bytes, header implies " + std::to_string(payload));
    }
    const std::uint8_t* p = bytes.data() + kDembHeaderBytes;
    if (h.dtype == Dtype::f32) {
        return decode_payload<T, float>(p, h.rows, h.cols);
    }
    return decode_payload<T, double>(p, h.rows, h.cols);
}

std::string encode_layout_json(const PromptLayout& layout) {
    nlohmann::json j;
    j["sot"] = layout.sot;
    j["identity"] = {layout.identity.first, layout.identity.last};
    j["frames"] = nlohmann::json::array();
    for (const auto& s : layout.frames) {
        j["frames"].push_back({s.first, s.last});
    }
    j["eot"] = layout.eot;
    return j.dump() + "\n";
}

PromptLayout decode_layout_json(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        raise(Errc::malformed_file, std::string("layout JSON: ") + e.what());
    }
    if (!root.is_object()) {
        raise(Errc::malformed_file, "layout JSON must be an object");
    }
    PromptLayout layout;
    layout.sot = index_from_json(root, "sot");
    layout.eot = index_from_json(root, "eot");
    if (!root.contains("identity")) {
        raise(Errc::malformed_file, "layout field 'identity' missing");
    }
    layout.identity = span_from_json(root["identity"], "identity");
    if (!root.contains("frames") || !root["frames"].is_array()) {
        raise(Errc::malformed_file, "layout field 'frames' must be a list of pairs");
    }
    for (const auto& f : root["frames"]) {
        layout.frames.push_back(span_from_json(f, "frames"));
    }
    return layout;
}

std::filesystem::path layout_sidecar_path(const std::filesystem::path& demb_path) {
    std::filesystem::path p = demb_path;
    p.replace_extension(".layout.json");
    return p;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(Errc::io_failure, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        raise(Errc::io_failure, "read error on " + path.string());
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(Errc::io_failure, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        raise(Errc::io_failure, "write error on " + path.string());
    }
}

DembHeader read_demb_header(const std::filesystem::path& path) {
    return decode_demb_header(read_file_bytes(path));
}

template <Real T>
void write_matrix(const Matrix<T>& matrix, const std::filesystem::path& path) {
    write_file_bytes(path, encode_demb(matrix));
}

template <Real T>
Matrix<T> load_matrix(const std::filesystem::path& path) {
    return decode_demb<T>(read_file_bytes(path));
}

template <Real T>
EmbeddingFile<T> load_embeddings(const std::filesystem::path& path) {
    EmbeddingFile<T> file{load_matrix<T>(path), {}};
    const auto sidecar = layout_sidecar_path(path);
    const auto text = read_file_bytes(sidecar);
    file.layout = decode_layout_json(std::string(text.begin(), text.end()));
    file.layout.validate(file.matrix.rows());
    return file;
}

template <Real T>
void write_embeddings(const TokenEmbeddingMatrix<T>& matrix, const PromptLayout& layout,
                      const std::filesystem::path& path) {
    layout.validate(matrix.rows());
    const auto bytes = encode_demb(matrix);
    const std::string json = encode_layout_json(layout);
    write_file_bytes(path, bytes);
    write_file_bytes(layout_sidecar_path(path),
                     std::span(reinterpret_cast<const std::uint8_t*>(json.data()), json.size()));
}

#define DECORSTORY_INSTANTIATE(T)                                                                          \
    template std::vector<std::uint8_t> encode_demb<T>(const Matrix<T>&);                                   \
    template Matrix<T> decode_demb<T>(std::span<const std::uint8_t>);                                      \
    template void write_matrix<T>(const Matrix<T>&, const std::filesystem::path&);                         \
    template Matrix<T> load_matrix<T>(const std::filesystem::path&);                                       \
    template EmbeddingFile<T> load_embeddings<T>(const std::filesystem::path&);                            \
    template void write_embeddings<T>(const TokenEmbeddingMatrix<T>&, const PromptLayout&,                 \
                                      const std::filesystem::path&);

DECORSTORY_INSTANTIATE(float)
DECORSTORY_INSTANTIATE(double)
#undef DECORSTORY_INSTANTIATE

}  // namespace decorstory
