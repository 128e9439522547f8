// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "decorstory/matrix.hpp"

namespace decorstory {

/// Inclusive row range [first, last]. Always non-empty by construction of a valid layout.
struct TokenSpan {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t size() const noexcept { return last - first + 1; }
    bool contains(std::size_t row) const noexcept { return row >= first && row <= last; }

    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

enum class TokenRole { sot, identity, frame, eot, padding };

/// Row roles of a concatenated prompt [SOT, P0, P1..PN, EOT]. Rows that no role
/// covers are padding and pass through every stage untouched.
///
/// Frame numbers in this library are 1-based (frame k lives in frames[k - 1]).
struct PromptLayout {
    std::size_t sot = 0;
    TokenSpan identity;
    std::vector<TokenSpan> frames;
    std::size_t eot = 0;

    std::size_t n_frames() const noexcept { return frames.size(); }

    /// Throws LayoutInconsistent unless
    /// sot < identity < frames[0] < ... < frames[N-1] < eot < rows, N >= 1.
    void validate(std::size_t rows) const;

    TokenRole role_of(std::size_t row) const noexcept;

    const TokenSpan& frame(std::size_t k) const;

    friend bool operator==(const PromptLayout&, const PromptLayout&) = default;
};

/// Norm below which a frame representative counts as zero: 1e-12 (double), 1e-6 (float).
template <Real T>
constexpr T zero_norm_threshold() {
    if constexpr (std::is_same_v<T, float>) {
        return 1e-6f;
    } else {
        return 1e-12;
    }
}

enum class RepresentativeMode { single_token, mean_pooled };

/// N x D matrix holding one representative row per frame. Every row has a
/// strictly positive norm (checked at construction).
template <Real T>
class FrameMatrix {
public:
    /// Throws ZeroFrameEmbedding if any row norm is below zero_norm_threshold<T>().
    FrameMatrix(Matrix<T> rows, RepresentativeMode mode);

    const Matrix<T>& rows() const noexcept { return m_rows; }
    RepresentativeMode mode() const noexcept { return m_mode; }
    std::size_t n_frames() const noexcept { return m_rows.rows(); }
    std::size_t dim() const noexcept { return m_rows.cols(); }

private:
    Matrix<T> m_rows;
    RepresentativeMode m_mode;
};

/// Arithmetic mean of the span's rows. Throws EmptySpan / ShapeMismatch.
template <Real T>
std::vector<T> pool_span(const Matrix<T>& tokens, TokenSpan span);

template <Real T>
FrameMatrix<T> extract_frame_matrix(const Matrix<T>& tokens, const PromptLayout& layout);

/// Writes a new frame representative into `span` of `tokens`. A single-token
/// span gets the row verbatim; a multi-token span is translated so that its
/// centroid becomes `representative` (t <- t + (representative - centroid)).
template <Real T>
void write_span_representative(Matrix<T>& tokens, TokenSpan span, std::span<const T> representative);

}  // namespace decorstory
