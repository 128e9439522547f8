// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/decorrelation.hpp"

#include <algorithm>
#include <string>

#include "decorstory/simd.hpp"

namespace decorstory {
namespace {

constexpr double kReorthogonalizeThreshold = 1e-10;

// One MGS sweep of `v` against `basis`. Returns the largest |coefficient| removed.
template <Real T>
double project_out(std::span<T> v, const Matrix<T>& basis, const std::vector<std::size_t>& basis_rows,
                   const simd::Kernels<T>& k) {
    double worst = 0.0;
    for (std::size_t b : basis_rows) {
        const T* q = basis.row(b).data();
        const T coeff = k.dot(v.data(), q, v.size());
        k.axpy(-coeff, q, v.data(), v.size());
        worst = std::max(worst, std::abs(static_cast<double>(coeff)));
    }
    return worst;
}

}  // namespace

void DecorrelationParams::validate() const {
    if (!(dependence_epsilon >= 0.0 && dependence_epsilon < 1.0)) {
        raise(Errc::invalid_argument, "dependence_epsilon must lie in [0, 1)");
    }
}

template <Real T>
bool DecorrelatedFrameMatrix<T>::is_degenerate(std::size_t frame) const noexcept {
    return std::binary_search(degenerate_frames.begin(), degenerate_frames.end(), frame);
}

template <Real T>
DecorrelatedFrameMatrix<T> modified_gram_schmidt(const FrameMatrix<T>& frames, const DecorrelationParams& params) {
    params.validate();
    const auto& k = simd::active_kernels<T>();
    const Matrix<T>& x = frames.rows();
    const std::size_t n = x.rows();
    const std::size_t dim = x.cols();

    DecorrelatedFrameMatrix<T> out{Matrix<T>(n, dim), {}};
    std::vector<std::size_t> basis_rows;
    basis_rows.reserve(std::min(n, dim));

    for (std::size_t row = 0; row < n; ++row) {
        const std::size_t frame = row + 1;
        const auto original = x.row(row);
        const T original_norm = simd::norm2<T>(original);
        if (!(original_norm >= zero_norm_threshold<T>())) {
            raise(Errc::zero_row, "frame " + std::to_string(frame) + " has zero norm");
        }

        std::span<T> v = out.rows.row(row);
        std::copy(original.begin(), original.end(), v.begin());

        bool degenerate = basis_rows.size() >= dim;
        T residual_norm = original_norm;
        if (!degenerate && !basis_rows.empty()) {
            project_out<T>(v, out.rows, basis_rows, k);
            residual_norm = simd::norm2<T>(v);
            degenerate = !(static_cast<double>(residual_norm) >=
                           params.dependence_epsilon * static_cast<double>(original_norm)) ||
                         !(residual_norm > T(0));
            if (!degenerate) {
                double leftover = 0.0;
                for (std::size_t b : basis_rows) {
                    const double c = static_cast<double>(k.dot(v.data(), out.rows.row(b).data(), dim));
                    leftover = std::max(leftover, std::abs(c) / static_cast<double>(residual_norm));
                }
                if (leftover > kReorthogonalizeThreshold) {
                    project_out<T>(v, out.rows, basis_rows, k);
                    residual_norm = simd::norm2<T>(v);
                }
            }
        }

        if (degenerate) {
            if (params.degenerate_policy == DegeneratePolicy::error) {
                throw DegenerateFrameError(frame, "frame " + std::to_string(frame) +
                                                      " is linearly dependent on earlier frames");
            }
            std::copy(original.begin(), original.end(), v.begin());
            k.divide(v.data(), original_norm, dim);
            out.degenerate_frames.push_back(frame);
            continue;
        }

        k.divide(v.data(), residual_norm, dim);
        basis_rows.push_back(row);
    }
    return out;
}

template <Real T>
TokenEmbeddingMatrix<T> inject_decorrelated(const TokenEmbeddingMatrix<T>& tokens, const PromptLayout& layout,
                                            const DecorrelatedFrameMatrix<T>& decorrelated) {
    layout.validate(tokens.rows());
    if (decorrelated.rows.rows() != layout.n_frames() || decorrelated.rows.cols() != tokens.cols()) {
        raise(Errc::shape_mismatch, "decorrelated frame matrix is " + std::to_string(decorrelated.rows.rows()) + "x" +
                                        std::to_string(decorrelated.rows.cols()) + ", layout needs " +
                                        std::to_string(layout.n_frames()) + "x" + std::to_string(tokens.cols()));
    }
    TokenEmbeddingMatrix<T> out = tokens;
    for (std::size_t k = 0; k < layout.n_frames(); ++k) {
        write_span_representative<T>(out, layout.frames[k], decorrelated.rows.row(k));
    }
    return out;
}

#define DECORSTORY_INSTANTIATE(T)                                                                           \
    template struct DecorrelatedFrameMatrix<T>;                                                             \
    template DecorrelatedFrameMatrix<T> modified_gram_schmidt<T>(const FrameMatrix<T>&,                     \
                                                                 const DecorrelationParams&);               \
    template TokenEmbeddingMatrix<T> inject_decorrelated<T>(const TokenEmbeddingMatrix<T>&,                 \
                                                            const PromptLayout&,                            \
                                                            const DecorrelatedFrameMatrix<T>&);

DECORSTORY_INSTANTIATE(float)
DECORSTORY_INSTANTIATE(double)
#undef DECORSTORY_INSTANTIATE

}  // namespace decorstory
