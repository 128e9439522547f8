// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "decorstory/simd.hpp"

namespace decorstory::simd::detail {

const Kernels<float>& scalar_kernels_f32();
const Kernels<double>& scalar_kernels_f64();

#if defined(DECORSTORY_HAVE_AVX2)
const Kernels<float>& avx2_kernels_f32();
const Kernels<double>& avx2_kernels_f64();
#endif

#if defined(DECORSTORY_HAVE_NEON)
const Kernels<float>& neon_kernels_f32();
const Kernels<double>& neon_kernels_f64();
#endif

}  // namespace decorstory::simd::detail
