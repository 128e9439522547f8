// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

// AArch64 NEON variants. Advanced SIMD is mandatory on AArch64, so no runtime probe is needed.

#include <arm_neon.h>

#include "kernel_tables.hpp"

namespace decorstory::simd::detail {
namespace {

double dot_f64(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        acc += x[i] * y[i];
    }
    return acc;
}

float dot_f32(const float* x, const float* y, std::size_t n) {
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    float32x4_t acc1 = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vfmaq_f32(acc0, vld1q_f32(x + i), vld1q_f32(y + i));
        acc1 = vfmaq_f32(acc1, vld1q_f32(x + i + 4), vld1q_f32(y + i + 4));
    }
    float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
    for (; i < n; ++i) {
        acc += x[i] * y[i];
    }
    return acc;
}

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void axpy_f32(float a, const float* x, float* y, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void scale_f64(double a, double* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_n_f64(vld1q_f64(x + i), a));
    }
    for (; i < n; ++i) {
        x[i] *= a;
    }
}

void scale_f32(float a, float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(x + i, vmulq_n_f32(vld1q_f32(x + i), a));
    }
    for (; i < n; ++i) {
        x[i] *= a;
    }
}

void divide_f64(double* x, double s, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vdivq_f64(vld1q_f64(x + i), vs));
    }
    for (; i < n; ++i) {
        x[i] /= s;
    }
}

void divide_f32(float* x, float s, std::size_t n) {
    const float32x4_t vs = vdupq_n_f32(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(x + i, vdivq_f32(vld1q_f32(x + i), vs));
    }
    for (; i < n; ++i) {
        x[i] /= s;
    }
}

}  // namespace

const Kernels<float>& neon_kernels_f32() {
    static const Kernels<float> table{&dot_f32, &axpy_f32, &scale_f32, &divide_f32};
    return table;
}

const Kernels<double>& neon_kernels_f64() {
    static const Kernels<double> table{&dot_f64, &axpy_f64, &scale_f64, &divide_f64};
    return table;
}

}  // namespace decorstory::simd::detail
