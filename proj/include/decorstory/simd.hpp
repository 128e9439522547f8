// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Runtime-dispatched arithmetic kernels. Every ISA variant computes the same
// contract as the scalar reference; results may differ in the last few ulps
// because of FMA contraction and lane-wise accumulation order. For a fixed ISA
// every kernel is bitwise deterministic.
//
// The active ISA defaults to the best one the CPU supports and can be pinned
// with DECORSTORY_SIMD=scalar|avx2|neon or set_active_isa().

#include <cstddef>
#include <span>
#include <string_view>

#include "decorstory/matrix.hpp"

namespace decorstory::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);
bool isa_supported(Isa isa);
Isa best_isa();
Isa active_isa();
/// Throws Error(invalid_argument) when the ISA is not compiled in or not supported by this CPU.
void set_active_isa(Isa isa);

template <Real T>
struct Kernels {
    T (*dot)(const T* x, const T* y, std::size_t n);
    void (*axpy)(T a, const T* x, T* y, std::size_t n);  // y += a * x
    void (*scale)(T a, T* x, std::size_t n);             // x *= a
    void (*divide)(T* x, T s, std::size_t n);            // x /= s
};

template <Real T>
const Kernels<T>& kernels(Isa isa);
template <>
const Kernels<float>& kernels<float>(Isa isa);
template <>
const Kernels<double>& kernels<double>(Isa isa);

template <Real T>
const Kernels<T>& active_kernels() {
    return kernels<T>(active_isa());
}

template <Real T>
T dot(std::span<const T> x, std::span<const T> y) {
    if (x.size() != y.size()) {
        raise(Errc::shape_mismatch, "dot of vectors with different length");
    }
    return active_kernels<T>().dot(x.data(), y.data(), x.size());
}

template <Real T>
void axpy(T a, std::span<const T> x, std::span<T> y) {
    if (x.size() != y.size()) {
        raise(Errc::shape_mismatch, "axpy of vectors with different length");
    }
    active_kernels<T>().axpy(a, x.data(), y.data(), x.size());
}

template <Real T>
void scale(T a, std::span<T> x) {
    active_kernels<T>().scale(a, x.data(), x.size());
}

template <Real T>
void divide(std::span<T> x, T s) {
    active_kernels<T>().divide(x.data(), s, x.size());
}

template <Real T>
T norm2(std::span<const T> x) {
    return std::sqrt(dot<T>(x, x));
}

/// Row-major product a (m x k) * b (k x n), accumulated row by row with axpy.
template <Real T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) {
        raise(Errc::shape_mismatch, "matmul inner dimensions differ");
    }
    const auto& k = active_kernels<T>();
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        T* out = c.row(i).data();
        for (std::size_t p = 0; p < a.cols(); ++p) {
            k.axpy(a(i, p), b.row(p).data(), out, b.cols());
        }
    }
    return c;
}

}  // namespace decorstory::simd
