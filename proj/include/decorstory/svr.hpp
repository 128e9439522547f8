// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "decorstory/decorrelation.hpp"
#include "decorstory/layout.hpp"
#include "decorstory/matrix.hpp"

namespace decorstory {

/// Singular-value reweighting strengths.
///   express:  s -> beta  * exp( alpha  * s) * s
///   suppress: s -> beta' * exp(-alpha' * s) * s
struct SvrParams {
    double alpha = 0.001;
    double beta = 1.0;
    double alpha_prime = 0.001;
    double beta_prime = 1.0;

    /// alpha = alpha' = 0, beta = beta' = 1: every pass reconstructs its input.
    static SvrParams identity() { return {0.0, 1.0, 0.0, 1.0}; }

    /// Throws InvalidArgument unless all values are finite, alphas >= 0 and betas > 0.
    void validate() const;
};

double express_gain(double sigma, const SvrParams& params);
double suppress_gain(double sigma, const SvrParams& params);

/// Thin SVD of the transpose of a 2 x D stack: A^T = U diag(sigma) V^T.
///
/// `u` is stored transposed (r x D) so each row is one left singular vector.
/// `v` is 2 x r. r = min(D, 2). Singular values are descending. Sign
/// convention: in every left singular vector the first entry of largest
/// magnitude is nonnegative; the matching column of V is flipped with it.
template <Real T>
struct ThinSvd {
    Matrix<T> u;
    std::vector<T> sigma;
    Matrix<T> v;

    std::size_t rank_bound() const noexcept { return sigma.size(); }
};

/// Closed form for the 2 x D case. A single Jacobi rotation diagonalizes the
/// 2 x 2 Gram matrix A A^T; the rotated rows are A^T's left singular directions
/// scaled by sigma. The second direction is re-orthogonalized against the first
/// so U stays orthonormal even when sigma_2 << sigma_1. Zero singular values get a
/// deterministic completion vector (the standard basis vector least aligned with
/// the first direction, orthogonalized).
template <Real T>
ThinSvd<T> thin_svd(const Matrix<T>& stack);

/// Rebuilds the 2 x D stack U diag(new_sigma) V^T, transposed back to rows.
template <Real T>
Matrix<T> reconstruct_stack(const ThinSvd<T>& svd, std::span<const double> new_sigma);

template <Real T>
using RowPair = std::pair<std::vector<T>, std::vector<T>>;

/// SVR+: amplifies the singular values of [frame_row; eot_row]. Returns the
/// updated (frame, EOT) rows.
template <Real T>
RowPair<T> svr_express(std::span<const T> frame_row, std::span<const T> eot_row, const SvrParams& params);

/// SVR-: attenuates the singular values of [frame_row; eot_row], where eot_row
/// is the EOT produced by the express pass for the current target frame.
template <Real T>
RowPair<T> svr_suppress(std::span<const T> frame_row, std::span<const T> eot_row, const SvrParams& params);

template <Real T>
struct ConditionedMatrix {
    TokenEmbeddingMatrix<T> data;
    std::size_t target_frame = 0;  // 1-based
};

/// Builds the conditioning matrix for target frame `frame` (1-based).
///
/// The target frame's representative is expressed together with the EOT row.
/// Every other frame k, in ascending order, is suppressed against that expressed
/// EOT (never against a previous suppress pass's EOT). The output EOT is the
/// expressed EOT when N = 1, otherwise the EOT returned by the last suppress
/// pass. Spans are written back with write_span_representative. SOT, identity
/// and padding rows are bit-identical to `tokens`.
///
/// `representatives` holds one row per frame (normally the Gram-Schmidt output).
template <Real T>
ConditionedMatrix<T> assemble_conditioned(const TokenEmbeddingMatrix<T>& tokens, const PromptLayout& layout,
                                          const Matrix<T>& representatives, std::size_t frame,
                                          const SvrParams& params);

template <Real T>
ConditionedMatrix<T> assemble_conditioned(const TokenEmbeddingMatrix<T>& tokens, const PromptLayout& layout,
                                          const DecorrelatedFrameMatrix<T>& decorrelated, std::size_t frame,
                                          const SvrParams& params) {
    return assemble_conditioned<T>(tokens, layout, decorrelated.rows, frame, params);
}

}  // namespace decorstory
