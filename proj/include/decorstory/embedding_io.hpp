// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// DEMB container, little-endian:
//
//   offset  size  field
//   0       4     magic "DEMB"
//   4       1     version, 0x01
//   5       1     dtype, 0x01 = float32, 0x02 = float64
//   6       2     reserved, zero
//   8       8     rows (M), uint64
//   16      8     cols (D), uint64
//   24      M*D*s payload, row-major
//
// A token matrix is paired with a JSON sidecar next to it, `<stem>.layout.json`:
//   {"eot": 7, "frames": [[3, 3], [4, 6]], "identity": [1, 2], "sot": 0}
// All ranges are inclusive [start, end] row pairs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "decorstory/layout.hpp"
#include "decorstory/matrix.hpp"

namespace decorstory {

enum class Dtype : std::uint8_t { f32 = 0x01, f64 = 0x02 };

template <Real T>
constexpr Dtype dtype_of() {
    return std::is_same_v<T, float> ? Dtype::f32 : Dtype::f64;
}

inline constexpr std::size_t kDembHeaderBytes = 24;
inline constexpr std::uint8_t kDembVersion = 0x01;

struct DembHeader {
    Dtype dtype = Dtype::f64;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
};

/// Serializes a matrix. Throws NonFiniteEntry before producing any bytes.
template <Real T>
std::vector<std::uint8_t> encode_demb(const Matrix<T>& matrix);

/// Parses a DEMB byte stream, converting to T when the stored dtype differs.
/// Throws MalformedFile on bad magic/version/dtype/reserved bytes or size mismatch,
/// NonFiniteEntry on NaN/Inf (including float64 values that overflow float32).
template <Real T>
Matrix<T> decode_demb(std::span<const std::uint8_t> bytes);

DembHeader decode_demb_header(std::span<const std::uint8_t> bytes);

std::string encode_layout_json(const PromptLayout& layout);
/// Throws MalformedFile on JSON/schema errors. Index consistency is checked separately.
PromptLayout decode_layout_json(const std::string& text);

/// `dir/name.demb` -> `dir/name.layout.json`
std::filesystem::path layout_sidecar_path(const std::filesystem::path& demb_path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

DembHeader read_demb_header(const std::filesystem::path& path);

/// Layout-free DEMB file (used for attention outputs and other non-token matrices).
template <Real T>
void write_matrix(const Matrix<T>& matrix, const std::filesystem::path& path);
template <Real T>
Matrix<T> load_matrix(const std::filesystem::path& path);

template <Real T>
struct EmbeddingFile {
    TokenEmbeddingMatrix<T> matrix;
    PromptLayout layout;
};

template <Real T>
EmbeddingFile<T> load_embeddings(const std::filesystem::path& path);

template <Real T>
void write_embeddings(const TokenEmbeddingMatrix<T>& matrix, const PromptLayout& layout,
                      const std::filesystem::path& path);

}  // namespace decorstory
