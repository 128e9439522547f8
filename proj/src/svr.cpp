// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/svr.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "decorstory/simd.hpp"

namespace decorstory {
namespace {

template <Real T>
void flip_to_sign_convention(std::span<T> u, Matrix<T>& v, std::size_t col) {
    std::size_t pivot = 0;
    T best = T(-1);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const T mag = std::abs(u[i]);
        if (mag > best) {
            best = mag;
            pivot = i;
        }
    }
    if (u[pivot] < T(0)) {
        for (T& x : u) x = -x;
        for (std::size_t i = 0; i < v.rows(); ++i) v(i, col) = -v(i, col);
    }
}

// Unit vector orthogonal to `u1`, built from the standard basis vector where u1 is smallest.
template <Real T>
void completion_vector(std::span<const T> u1, std::span<T> out, const simd::Kernels<T>& k) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < u1.size(); ++i) {
        if (std::abs(u1[i]) < std::abs(u1[pick])) pick = i;
    }
    std::fill(out.begin(), out.end(), T(0));
    out[pick] = T(1);
    for (int pass = 0; pass < 2; ++pass) {
        k.axpy(-k.dot(out.data(), u1.data(), out.size()), u1.data(), out.data(), out.size());
    }
    k.divide(out.data(), simd::norm2<T>(out), out.size());
}

template <Real T>
Matrix<T> stack_rows(std::span<const T> top, std::span<const T> bottom) {
    if (top.size() != bottom.size()) {
        raise(Errc::shape_mismatch, "SVR rows have different widths");
    }
    Matrix<T> m(2, top.size());
    m.set_row(0, top);
    m.set_row(1, bottom);
    return m;
}

template <Real T>
RowPair<T> reweight(std::span<const T> frame_row, std::span<const T> eot_row, const SvrParams& params,
                    double (*gain)(double, const SvrParams&)) {
    params.validate();
    const ThinSvd<T> svd = thin_svd<T>(stack_rows(frame_row, eot_row));
    std::vector<double> new_sigma(svd.sigma.size());
    for (std::size_t l = 0; l < svd.sigma.size(); ++l) {
        new_sigma[l] = gain(static_cast<double>(svd.sigma[l]), params);
    }
    const Matrix<T> out = reconstruct_stack<T>(svd, new_sigma);
    return {std::vector<T>(out.row(0).begin(), out.row(0).end()),
            std::vector<T>(out.row(1).begin(), out.row(1).end())};
}

}  // namespace

void SvrParams::validate() const {
    const bool finite = std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(alpha_prime) &&
                        std::isfinite(beta_prime);
    if (!finite || alpha < 0.0 || alpha_prime < 0.0 || !(beta > 0.0) || !(beta_prime > 0.0)) {
        raise(Errc::invalid_argument, "SVR parameters require finite alpha, alpha' >= 0 and beta, beta' > 0");
    }
}

double express_gain(double sigma, const SvrParams& params) {
    return params.beta * std::exp(params.alpha * sigma) * sigma;
}

double suppress_gain(double sigma, const SvrParams& params) {
    return params.beta_prime * std::exp(-params.alpha_prime * sigma) * sigma;
}

template <Real T>
ThinSvd<T> thin_svd(const Matrix<T>& stack) {
    if (stack.rows() != 2 || stack.cols() == 0) {
        raise(Errc::shape_mismatch, "thin_svd expects a 2 x D stack with D >= 1");
    }
    const std::size_t dim = stack.cols();
    const auto& k = simd::active_kernels<T>();

    if (dim == 1) {
        // A^T is 1 x 2: one singular value, U = [1].
        ThinSvd<T> out{Matrix<T>(1, 1, T(1)), {}, Matrix<T>(2, 1)};
        const T a0 = stack(0, 0);
        const T a1 = stack(1, 0);
        const T s = std::hypot(a0, a1);
        out.sigma.push_back(s);
        if (s > T(0)) {
            out.v(0, 0) = a0 / s;
            out.v(1, 0) = a1 / s;
        } else {
            out.v(0, 0) = T(1);
        }
        return out;
    }

    const auto r1 = stack.row(0);
    const auto r2 = stack.row(1);
    const double a = static_cast<double>(k.dot(r1.data(), r1.data(), dim));
    const double c = static_cast<double>(k.dot(r2.data(), r2.data(), dim));
    const double b = static_cast<double>(k.dot(r1.data(), r2.data(), dim));

    // Jacobi rotation J = [[cs, sn], [-sn, cs]] with J^T G J diagonal.
    double cs = 1.0;
    double sn = 0.0;
    if (b != 0.0) {
        const double zeta = (c - a) / (2.0 * b);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        cs = 1.0 / std::hypot(1.0, t);
        sn = cs * t;
    }

    ThinSvd<T> out{Matrix<T>(2, dim), {T(0), T(0)}, Matrix<T>(2, 2)};
    std::span<T> w1 = out.u.row(0);
    std::span<T> w2 = out.u.row(1);
    for (std::size_t d = 0; d < dim; ++d) {
        const double x = static_cast<double>(r1[d]);
        const double y = static_cast<double>(r2[d]);
        w1[d] = static_cast<T>(cs * x - sn * y);
        w2[d] = static_cast<T>(sn * x + cs * y);
    }
    // A^T [w1 w2] relation: A^T J = [w1 w2], so V = J.
    out.v(0, 0) = static_cast<T>(cs);
    out.v(1, 0) = static_cast<T>(-sn);
    out.v(0, 1) = static_cast<T>(sn);
    out.v(1, 1) = static_cast<T>(cs);

    T s1 = simd::norm2<T>(std::span<const T>(w1));
    T s2 = simd::norm2<T>(std::span<const T>(w2));
    if (s2 > s1) {
        std::swap_ranges(w1.begin(), w1.end(), w2.begin());
        std::swap(out.v(0, 0), out.v(0, 1));
        std::swap(out.v(1, 0), out.v(1, 1));
        std::swap(s1, s2);
    }

    if (!(s1 > T(0))) {
        // Zero stack: U gets the first two standard basis vectors, V = I.
        std::fill(w1.begin(), w1.end(), T(0));
        std::fill(w2.begin(), w2.end(), T(0));
        w1[0] = T(1);
        w2[1] = T(1);
        out.v = Matrix<T>{{T(1), T(0)}, {T(0), T(1)}};
        return out;
    }

    k.divide(w1.data(), s1, dim);
    for (int pass = 0; pass < 2; ++pass) {
        k.axpy(-k.dot(w2.data(), w1.data(), dim), w1.data(), w2.data(), dim);
    }
    s2 = simd::norm2<T>(std::span<const T>(w2));
    if (s2 >= std::numeric_limits<T>::min()) {
        k.divide(w2.data(), s2, dim);
    } else {
        s2 = T(0);
        completion_vector<T>(w1, w2, k);
    }

    out.sigma = {s1, s2};
    flip_to_sign_convention<T>(w1, out.v, 0);
    flip_to_sign_convention<T>(w2, out.v, 1);
    return out;
}

template <Real T>
Matrix<T> reconstruct_stack(const ThinSvd<T>& svd, std::span<const double> new_sigma) {
    if (new_sigma.size() != svd.sigma.size()) {
        raise(Errc::shape_mismatch, "reweighted singular value count differs from the decomposition");
    }
    const auto& k = simd::active_kernels<T>();
    const std::size_t dim = svd.u.cols();
    Matrix<T> out(2, dim);
    for (std::size_t l = 0; l < new_sigma.size(); ++l) {
        if (new_sigma[l] == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < 2; ++i) {
            const T coeff = static_cast<T>(new_sigma[l] * static_cast<double>(svd.v(i, l)));
            k.axpy(coeff, svd.u.row(l).data(), out.row(i).data(), dim);
        }
    }
    return out;
}

template <Real T>
RowPair<T> svr_express(std::span<const T> frame_row, std::span<const T> eot_row, const SvrParams& params) {
    return reweight<T>(frame_row, eot_row, params, &express_gain);
}

template <Real T>
RowPair<T> svr_suppress(std::span<const T> frame_row, std::span<const T> eot_row, const SvrParams& params) {
    return reweight<T>(frame_row, eot_row, params, &suppress_gain);
}

template <Real T>
ConditionedMatrix<T> assemble_conditioned(const TokenEmbeddingMatrix<T>& tokens, const PromptLayout& layout,
                                          const Matrix<T>& representatives, std::size_t frame,
                                          const SvrParams& params) {
    layout.validate(tokens.rows());
    const std::size_t n = layout.n_frames();
    if (frame < 1 || frame > n) {
        raise(Errc::frame_index_out_of_range,
              "frame index " + std::to_string(frame) + " outside 1.." + std::to_string(n));
    }
    if (representatives.rows() != n || representatives.cols() != tokens.cols()) {
        raise(Errc::shape_mismatch, "representative matrix does not match the layout");
    }
    params.validate();

    ConditionedMatrix<T> out{tokens, frame};
    const auto [expressed_frame, expressed_eot] =
        svr_express<T>(representatives.row(frame - 1), tokens.row(layout.eot), params);

    std::vector<T> final_eot = expressed_eot;
    for (std::size_t k = 1; k <= n; ++k) {
        if (k == frame) {
            continue;
        }
        auto [suppressed_frame, suppressed_eot] =
            svr_suppress<T>(representatives.row(k - 1), std::span<const T>(expressed_eot), params);
        write_span_representative<T>(out.data, layout.frames[k - 1], suppressed_frame);
        final_eot = std::move(suppressed_eot);
    }
    write_span_representative<T>(out.data, layout.frames[frame - 1], expressed_frame);
    out.data.set_row(layout.eot, final_eot);
    return out;
}

#define DECORSTORY_INSTANTIATE(T)                                                                              \
    template ThinSvd<T> thin_svd<T>(const Matrix<T>&);                                                         \
    template Matrix<T> reconstruct_stack<T>(const ThinSvd<T>&, std::span<const double>);                       \
    template RowPair<T> svr_express<T>(std::span<const T>, std::span<const T>, const SvrParams&);              \
    template RowPair<T> svr_suppress<T>(std::span<const T>, std::span<const T>, const SvrParams&);             \
    template ConditionedMatrix<T> assemble_conditioned<T>(const TokenEmbeddingMatrix<T>&, const PromptLayout&, \
                                                          const Matrix<T>&, std::size_t, const SvrParams&);

DECORSTORY_INSTANTIATE(float)
DECORSTORY_INSTANTIATE(double)
#undef DECORSTORY_INSTANTIATE

}  // namespace decorstory
