// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/layout.hpp"

#include <string>

#include "decorstory/simd.hpp"

namespace decorstory {

void PromptLayout::validate(std::size_t rows) const {
    auto fail = [](const std::string& what) { raise(Errc::layout_inconsistent, what); };
    if (frames.empty()) {
        fail("layout has no frame spans");
    }
    if (identity.first > identity.last) {
        fail("identity span is empty");
    }
    if (!(sot < identity.first)) {
        fail("SOT must precede the identity span");
    }
    std::size_t prev_last = identity.last;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const TokenSpan& s = frames[k];
        if (s.first > s.last) {
            fail("frame " + std::to_string(k + 1) + " span is empty");
        }
        if (!(prev_last < s.first)) {
            fail("frame " + std::to_string(k + 1) + " span overlaps or precedes the previous span");
        }
        prev_last = s.last;
    }
    if (!(prev_last < eot)) {
        fail("EOT must follow the last frame span");
    }
    if (!(eot < rows)) {
        fail("EOT index " + std::to_string(eot) + " out of range for " + std::to_string(rows) + " rows");
    }
}

TokenRole PromptLayout::role_of(std::size_t row) const noexcept {
    if (row == sot) return TokenRole::sot;
    if (row == eot) return TokenRole::eot;
    if (identity.contains(row)) return TokenRole::identity;
    for (const auto& s : frames) {
        if (s.contains(row)) return TokenRole::frame;
    }
    return TokenRole::padding;
}

const TokenSpan& PromptLayout::frame(std::size_t k) const {
    if (k < 1 || k > frames.size()) {
        raise(Errc::frame_index_out_of_range,
              "frame index " + std::to_string(k) + " outside 1.." + std::to_string(frames.size()));
    }
    return frames[k - 1];
}

template <Real T>
FrameMatrix<T>::FrameMatrix(Matrix<T> rows, RepresentativeMode mode) : m_rows(std::move(rows)), m_mode(mode) {
    if (m_rows.rows() == 0 || m_rows.cols() == 0) {
        raise(Errc::shape_mismatch, "frame matrix must be non-empty");
    }
    if (!m_rows.all_finite()) {
        raise(Errc::non_finite_entry, "frame matrix contains NaN or Inf");
    }
    for (std::size_t k = 0; k < m_rows.rows(); ++k) {
        if (!(simd::norm2<T>(m_rows.row(k)) >= zero_norm_threshold<T>())) {
            raise(Errc::zero_frame_embedding, "frame " + std::to_string(k + 1) + " representative has zero norm");
        }
    }
}

template <Real T>
std::vector<T> pool_span(const Matrix<T>& tokens, TokenSpan span) {
    if (span.first > span.last) {
        raise(Errc::empty_span, "cannot pool an empty span");
    }
    if (span.last >= tokens.rows()) {
        raise(Errc::shape_mismatch, "span exceeds matrix rows");
    }
    const auto& k = simd::active_kernels<T>();
    std::vector<T> mean(tokens.cols(), T(0));
    for (std::size_t r = span.first; r <= span.last; ++r) {
        k.axpy(T(1), tokens.row(r).data(), mean.data(), mean.size());
    }
    k.divide(mean.data(), static_cast<T>(span.size()), mean.size());
    return mean;
}

template <Real T>
FrameMatrix<T> extract_frame_matrix(const Matrix<T>& tokens, const PromptLayout& layout) {
    layout.validate(tokens.rows());
    Matrix<T> rows(layout.n_frames(), tokens.cols());
    bool all_single = true;
    for (std::size_t k = 0; k < layout.n_frames(); ++k) {
        const TokenSpan& s = layout.frames[k];
        all_single = all_single && s.size() == 1;
        rows.set_row(k, pool_span(tokens, s));
    }
    return FrameMatrix<T>(std::move(rows), all_single ? RepresentativeMode::single_token
                                                      : RepresentativeMode::mean_pooled);
}

template <Real T>
void write_span_representative(Matrix<T>& tokens, TokenSpan span, std::span<const T> representative) {
    if (representative.size() != tokens.cols()) {
        raise(Errc::shape_mismatch, "representative width does not match token width");
    }
    if (span.size() == 1) {
        tokens.set_row(span.first, representative);
        return;
    }
    std::vector<T> shift(representative.begin(), representative.end());
    const std::vector<T> centroid = pool_span(tokens, span);
    const auto& k = simd::active_kernels<T>();
    k.axpy(T(-1), centroid.data(), shift.data(), shift.size());
    for (std::size_t r = span.first; r <= span.last; ++r) {
        k.axpy(T(1), shift.data(), tokens.row(r).data(), shift.size());
    }
}

#define DECORSTORY_INSTANTIATE(T)                                                                   \
    template class FrameMatrix<T>;                                                                  \
    template std::vector<T> pool_span<T>(const Matrix<T>&, TokenSpan);                              \
    template FrameMatrix<T> extract_frame_matrix<T>(const Matrix<T>&, const PromptLayout&);         \
    template void write_span_representative<T>(Matrix<T>&, TokenSpan, std::span<const T>);

DECORSTORY_INSTANTIATE(float)
DECORSTORY_INSTANTIATE(double)
#undef DECORSTORY_INSTANTIATE

}  // namespace decorstory
