// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

#include "decorstory/decorrelation.hpp"
#include "decorstory/embedding_io.hpp"
#include "decorstory/layout.hpp"
#include "decorstory/matrix.hpp"

namespace decorstory {

/// Correlation summary of a set of frame representatives. All statistics are
/// derived from `gram`, so a report can be recomputed from the matrix alone.
struct CorrelationReport {
    Matrix<double> gram;          // N x N cosine similarities
    double mean_abs_offdiag = 0;  // 0 when N = 1
    double max_abs_offdiag = 0;
    /// exp(entropy) of the eigenvalue distribution of `gram`, i.e. of the
    /// squared singular values of the row-normalized representatives. In [1, N].
    double effective_rank = 1;
};

/// S(i, j) = <x_i, x_j> / (|x_i| |x_j|), computed in double. Throws ZeroRow.
template <Real T>
Matrix<double> cosine_gram(const Matrix<T>& rows);

template <Real T>
Matrix<double> cosine_gram(const FrameMatrix<T>& frames) {
    return cosine_gram<T>(frames.rows());
}

CorrelationReport report_from_gram(Matrix<double> gram);

template <Real T>
CorrelationReport correlation_report(const Matrix<T>& rows) {
    return report_from_gram(cosine_gram<T>(rows));
}

/// Reports for the raw representatives and for their decorrelated counterpart.
template <Real T>
std::pair<CorrelationReport, CorrelationReport> correlation_report(const FrameMatrix<T>& before,
                                                                   const DecorrelatedFrameMatrix<T>& after);

/// Rows x_k = normalize(sqrt(rho) g + sqrt(1 - rho) h_k). g and h_1..h_N are
/// standard normal vectors drawn in that order from SplitMix64(seed).
/// Requires 1 <= N <= D; throws InvalidRho unless rho is in [0, 1].
template <Real T>
FrameMatrix<T> gen_synthetic(std::size_t n, std::size_t dim, double rho, std::uint64_t seed);

/// Wraps gen_synthetic in a full prompt: [SOT, identity, frame 1..N, EOT], one
/// token each. The three special rows are unit Gaussian vectors drawn from
/// SplitMix64(seed ^ 0xD1B54A32D192ED03) in the order SOT, identity, EOT.
template <Real T>
EmbeddingFile<T> gen_synthetic_prompt(std::size_t n, std::size_t dim, double rho, std::uint64_t seed);

}  // namespace decorstory
