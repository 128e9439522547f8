// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

using namespace decorstory;
using namespace decorstory::testing;

namespace {

FrameMatrix<double> frames_of(Matrix<double> m) {
    return FrameMatrix<double>(std::move(m), RepresentativeMode::single_token);
}

/// QR of Xᵀ with a positive R diagonal: Q's columns are the orthonormalized rows.
Matrix<double> qr_oracle(const Matrix<double>& x) {
    const Eigen::MatrixXd xt = to_eigen(x).transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(xt);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(xt.rows(), xt.cols());
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < q.cols(); ++k) {
        if (r(k, k) < 0) q.col(k) *= -1.0;
    }
    return from_eigen(q.transpose());
}

double max_offdiag_identity_error(const Matrix<double>& x) {
    const Eigen::MatrixXd e = to_eigen(x);
    const Eigen::MatrixXd g = e * e.transpose() - Eigen::MatrixXd::Identity(e.rows(), e.rows());
    return g.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("params validation") {
    DecorrelationParams p;
    CHECK_NOTHROW(p.validate());
    p.dependence_epsilon = 1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p.dependence_epsilon = -1e-3;
    CHECK_THROWS_AS(p.validate(), Error);
    p.dependence_epsilon = 0.0;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("orthogonal rows are only normalized") {
    const auto out = modified_gram_schmidt(frames_of({{2, 0}, {0, 3}}));
    CHECK(out.rows == Matrix<double>{{1, 0}, {0, 1}});
    CHECK(out.degenerate_frames.empty());
}

TEST_CASE("[[1,1],[1,0]] matches the QR oracle") {
    const Matrix<double> x{{1, 1}, {1, 0}};
    const auto out = modified_gram_schmidt(frames_of(x));
    const Matrix<double> expected = qr_oracle(x);
    CHECK(max_abs_diff(out.rows, expected) <= 1e-15);
    // Frozen from the oracle.
    CHECK(out.rows(0, 0) == doctest::Approx(0.70710678).epsilon(1e-8));
    CHECK(out.rows(0, 1) == doctest::Approx(0.70710678).epsilon(1e-8));
    CHECK(out.rows(1, 0) == doctest::Approx(0.70710678).epsilon(1e-8));
    CHECK(out.rows(1, 1) == doctest::Approx(-0.70710678).epsilon(1e-8));
}

TEST_CASE("linear dependence") {
    SUBCASE("error policy names the frame") {
        try {
            modified_gram_schmidt(frames_of({{1, 0}, {2, 0}}));
            FAIL("expected DegenerateFrame");
        } catch (const DegenerateFrameError& e) {
            CHECK(e.code() == Errc::degenerate_frame);
            CHECK(e.frame() == 2);
        }
    }
    SUBCASE("keep-normalized-original") {
        DecorrelationParams p;
        p.degenerate_policy = DegeneratePolicy::keep_normalized_original;
        const auto out = modified_gram_schmidt(frames_of({{1, 0}, {2, 0}, {1, 1}}), p);
        CHECK(out.degenerate_frames == std::vector<std::size_t>{2});
        CHECK(out.is_degenerate(2));
        CHECK_FALSE(out.is_degenerate(3));
        CHECK(out.rows(1, 0) == 1.0);
        CHECK(out.rows(1, 1) == 0.0);
        // Frame 3 is orthogonalized against frame 1 only.
        CHECK(std::abs(out.rows(2, 0)) <= 1e-15);
        CHECK(out.rows(2, 1) == doctest::Approx(1.0));
    }
    SUBCASE("N > D fails at frame D + 1 even with eps = 0") {
        SplitMix64 rng(5);
        DecorrelationParams p;
        p.dependence_epsilon = 0.0;
        try {
            modified_gram_schmidt(frames_of(gaussian_matrix(rng, 5, 3)), p);
            FAIL("expected DegenerateFrame");
        } catch (const DegenerateFrameError& e) {
            CHECK(e.frame() == 4);
        }
    }
    SUBCASE("nearly dependent row is caught by the relative threshold") {
        DecorrelationParams p;
        p.dependence_epsilon = 1e-6;
        CHECK_THROWS_AS(modified_gram_schmidt(frames_of({{1, 0, 0}, {1, 1e-9, 0}}), p), DegenerateFrameError);
        CHECK_NOTHROW(modified_gram_schmidt(frames_of({{1, 0, 0}, {1, 1e-3, 0}}), p));
    }
}

TEST_CASE("property: orthonormality, span and direction on random inputs") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = uniform_index(rng, 1, 40);
        const std::size_t n = uniform_index(rng, 1, std::min<std::size_t>(d, 10));
        const Matrix<double> x = gaussian_matrix(rng, n, d);
        const auto out = modified_gram_schmidt(frames_of(x));
        CHECK(max_offdiag_identity_error(out.rows) <= 1e-12);

        for (std::size_t j = 0; j < d; ++j) {
            CHECK(out.rows(0, j) * (x(0, j) >= 0 ? 1 : -1) >= 0);
        }
        const Eigen::MatrixXd xe = to_eigen(x);
        for (std::size_t k = 0; k < n; ++k) {
            const Eigen::MatrixXd basis = xe.topRows(static_cast<Eigen::Index>(k + 1)).transpose();
            Eigen::VectorXd target(d);
            for (std::size_t j = 0; j < d; ++j) target(static_cast<Eigen::Index>(j)) = out.rows(k, j);
            const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(target);
            CHECK((basis * coef - target).norm() <= 1e-10);
        }
        CHECK(max_abs_diff(out.rows, qr_oracle(x)) <= 1e-10);
    }
}

TEST_CASE("idempotence on orthonormal input") {
    SplitMix64 rng(8);
    const auto once = modified_gram_schmidt(frames_of(gaussian_matrix(rng, 6, 12)));
    const auto twice = modified_gram_schmidt(frames_of(once.rows));
    CHECK(max_abs_diff(once.rows, twice.rows) <= 1e-10);
}

TEST_CASE("ill-conditioned input stays orthonormal") {
    // Rows differ by tiny perturbations; classical GS loses orthogonality here.
    SplitMix64 rng(77);
    const std::size_t n = 8, d = 16;
    Matrix<double> x(n, d);
    const Matrix<double> base = gaussian_matrix(rng, 1, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = base(0, j) + 1e-6 * rng.gaussian();
    DecorrelationParams p;
    p.dependence_epsilon = 1e-9;
    const auto out = modified_gram_schmidt(frames_of(x), p);
    CHECK(max_offdiag_identity_error(out.rows) <= 1e-8);
}

TEST_CASE("float precision") {
    SplitMix64 rng(3);
    const Matrix<float> x = gaussian_matrix<float>(rng, 4, 16);
    const auto out = modified_gram_schmidt(FrameMatrix<float>(x, RepresentativeMode::single_token));
    CHECK(max_offdiag_identity_error(matrix_cast<double>(out.rows)) <= 1e-5);
}

TEST_CASE("inject_decorrelated") {
    SUBCASE("single-token spans substitute rows and leave the rest alone") {
        SplitMix64 rng(12);
        for (int trial = 0; trial < 30; ++trial) {
            const RandomPrompt p = random_prompt(rng, uniform_index(rng, 1, 4), 8, 1, true);
            const auto x = modified_gram_schmidt(extract_frame_matrix(p.tokens, p.layout));
            const Matrix<double> c = inject_decorrelated(p.tokens, p.layout, x);
            for (std::size_t r = 0; r < c.rows(); ++r) {
                if (p.layout.role_of(r) == TokenRole::frame) continue;
                CHECK(std::ranges::equal(c.row(r), p.tokens.row(r)));
            }
            for (std::size_t k = 0; k < p.layout.n_frames(); ++k) {
                CHECK(std::ranges::equal(c.row(p.layout.frames[k].first), x.rows.row(k)));
            }
        }
    }
    SUBCASE("already orthonormal input is a no-op") {
        Matrix<double> c{{5, 5, 5}, {4, 4, 4}, {1, 0, 0}, {0, 0, 1}, {3, 3, 3}};
        PromptLayout l{0, {1, 1}, {{2, 2}, {3, 3}}, 4};
        const auto x = modified_gram_schmidt(extract_frame_matrix(c, l));
        CHECK(inject_decorrelated(c, l, x) == c);
    }
    SUBCASE("centroid shift on a two-token span") {
        const Matrix<double> c{{9, 9}, {8, 8}, {1, 0}, {0, 1}, {7, 7}};
        const PromptLayout l{0, {1, 1}, {{2, 3}}, 4};
        const DecorrelatedFrameMatrix<double> x{Matrix<double>{{0, 1}}, {}};
        const Matrix<double> out = inject_decorrelated(c, l, x);
        CHECK(out == Matrix<double>{{9, 9}, {8, 8}, {0.5, 0.5}, {-0.5, 1.5}, {7, 7}});
    }
    SUBCASE("centroid consistency on random multi-token prompts") {
        SplitMix64 rng(13);
        for (int trial = 0; trial < 30; ++trial) {
            const RandomPrompt p = random_prompt(rng, uniform_index(rng, 1, 4), 8, 4, true);
            const auto x = modified_gram_schmidt(extract_frame_matrix(p.tokens, p.layout));
            const Matrix<double> c = inject_decorrelated(p.tokens, p.layout, x);
            for (std::size_t k = 0; k < p.layout.n_frames(); ++k) {
                const auto pooled = pool_span(c, p.layout.frames[k]);
                for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(pooled[j] - x.rows(k, j)) <= 1e-10);
            }
        }
    }
    SUBCASE("shape mismatch") {
        const Matrix<double> c{{9, 9}, {8, 8}, {1, 0}, {7, 7}};
        const PromptLayout l{0, {1, 1}, {{2, 2}}, 3};
        const DecorrelatedFrameMatrix<double> x{Matrix<double>{{0, 1}, {1, 0}}, {}};
        try {
            inject_decorrelated(c, l, x);
            FAIL("expected ShapeMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::shape_mismatch);
        }
    }
}
