// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "decorstory/rng.hpp"
#include "decorstory/simd.hpp"

namespace decorstory {
namespace {

std::vector<double> unit_gaussian(SplitMix64& rng, std::size_t dim) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.gaussian();
    const double n = simd::norm2<double>(v);
    simd::divide<double>(v, n);
    return v;
}

}  // namespace

template <Real T>
Matrix<double> cosine_gram(const Matrix<T>& rows) {
    const Matrix<double> x = matrix_cast<double>(rows);
    const std::size_t n = x.rows();
    const auto& k = simd::active_kernels<double>();
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        norms[i] = simd::norm2<double>(x.row(i));
        if (!(norms[i] > 0.0)) {
            raise(Errc::zero_row, "row " + std::to_string(i + 1) + " has zero norm");
        }
    }
    Matrix<double> gram(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        gram(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = k.dot(x.row(i).data(), x.row(j).data(), x.cols()) / (norms[i] * norms[j]);
            gram(i, j) = s;
            gram(j, i) = s;
        }
    }
    return gram;
}

CorrelationReport report_from_gram(Matrix<double> gram) {
    const std::size_t n = gram.rows();
    if (n == 0 || gram.cols() != n) {
        raise(Errc::shape_mismatch, "cosine Gram matrix must be square and non-empty");
    }
    CorrelationReport r;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double a = std::abs(gram(i, j));
            sum += a;
            r.max_abs_offdiag = std::max(r.max_abs_offdiag, a);
        }
    }
    r.mean_abs_offdiag = n > 1 ? sum / static_cast<double>(n * (n - 1)) : 0.0;

    Eigen::MatrixXd g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gram(i, j);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd lambda = solver.eigenvalues().cwiseMax(0.0);
    const double total = lambda.sum();
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const double p = lambda(i) / total;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    r.effective_rank = std::clamp(std::exp(entropy), 1.0, static_cast<double>(n));
    r.gram = std::move(gram);
    return r;
}

template <Real T>
std::pair<CorrelationReport, CorrelationReport> correlation_report(const FrameMatrix<T>& before,
                                                                   const DecorrelatedFrameMatrix<T>& after) {
    if (before.n_frames() != after.rows.rows()) {
        raise(Errc::shape_mismatch, "before/after frame counts differ");
    }
    return {correlation_report<T>(before.rows()), correlation_report<T>(after.rows)};
}

template <Real T>
FrameMatrix<T> gen_synthetic(std::size_t n, std::size_t dim, double rho, std::uint64_t seed) {
    if (!(rho >= 0.0 && rho <= 1.0)) {
        raise(Errc::invalid_rho, "rho must lie in [0, 1]");
    }
    if (n < 1 || n > dim) {
        raise(Errc::invalid_argument, "gen_synthetic requires 1 <= N <= D");
    }
    SplitMix64 rng(seed);
    std::vector<double> shared(dim);
    for (double& x : shared) x = rng.gaussian();
    const double a = std::sqrt(rho);
    const double b = std::sqrt(1.0 - rho);

    Matrix<T> rows(n, dim);
    std::vector<double> x(dim);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < dim; ++i) {
            x[i] = a * shared[i] + b * rng.gaussian();
        }
        const double norm = simd::norm2<double>(x);
        for (std::size_t i = 0; i < dim; ++i) {
            rows(k, i) = static_cast<T>(x[i] / norm);
        }
    }
    return FrameMatrix<T>(std::move(rows), RepresentativeMode::single_token);
}

template <Real T>
EmbeddingFile<T> gen_synthetic_prompt(std::size_t n, std::size_t dim, double rho, std::uint64_t seed) {
    const FrameMatrix<T> frames = gen_synthetic<T>(n, dim, rho, seed);
    SplitMix64 rng(seed ^ 0xD1B54A32D192ED03ULL);
    const auto sot = unit_gaussian(rng, dim);
    const auto identity = unit_gaussian(rng, dim);
    const auto eot = unit_gaussian(rng, dim);

    EmbeddingFile<T> file{Matrix<T>(n + 3, dim), {}};
    auto put = [&](std::size_t row, const std::vector<double>& v) {
        for (std::size_t i = 0; i < dim; ++i) file.matrix(row, i) = static_cast<T>(v[i]);
    };
    put(0, sot);
    put(1, identity);
    for (std::size_t k = 0; k < n; ++k) {
        file.matrix.set_row(k + 2, frames.rows().row(k));
        file.layout.frames.push_back({k + 2, k + 2});
    }
    put(n + 2, eot);
    file.layout.sot = 0;
    file.layout.identity = {1, 1};
    file.layout.eot = n + 2;
    return file;
}

#define DECORSTORY_INSTANTIATE(T)                                                                               \
    template Matrix<double> cosine_gram<T>(const Matrix<T>&);                                                   \
    template std::pair<CorrelationReport, CorrelationReport> correlation_report<T>(                             \
        const FrameMatrix<T>&, const DecorrelatedFrameMatrix<T>&);                                              \
    template FrameMatrix<T> gen_synthetic<T>(std::size_t, std::size_t, double, std::uint64_t);                  \
    template EmbeddingFile<T> gen_synthetic_prompt<T>(std::size_t, std::size_t, double, std::uint64_t);

DECORSTORY_INSTANTIATE(float)
DECORSTORY_INSTANTIATE(double)
#undef DECORSTORY_INSTANTIATE

}  // namespace decorstory
