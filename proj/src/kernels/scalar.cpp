// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. Plain sequential loops, one accumulator, no contraction
// assumptions. These define the contract the vector variants are tested against.

#include "kernel_tables.hpp"

namespace decorstory::simd::detail {
namespace {

template <typename T>
T dot(const T* x, const T* y, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i] * y[i];
    }
    return acc;
}

template <typename T>
void axpy(T a, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += a * x[i];
    }
}

template <typename T>
void scale(T a, T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        x[i] *= a;
    }
}

template <typename T>
void divide(T* x, T s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        x[i] /= s;
    }
}

}  // namespace

const Kernels<float>& scalar_kernels_f32() {
    static const Kernels<float> table{&dot<float>, &axpy<float>, &scale<float>, &divide<float>};
    return table;
}

const Kernels<double>& scalar_kernels_f64() {
    static const Kernels<double> table{&dot<double>, &axpy<double>, &scale<double>, &divide<double>};
    return table;
}

}  // namespace decorstory::simd::detail
