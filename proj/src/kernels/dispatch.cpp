// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernel_tables.hpp"

namespace decorstory::simd {
namespace {

constexpr int kUnset = -1;
std::atomic<int> g_active{kUnset};

bool cpu_has_avx2() {
#if defined(DECORSTORY_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool ok = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    return ok;
#else
    return false;
#endif
}

Isa initial_isa() {
    if (const char* env = std::getenv("DECORSTORY_SIMD")) {
        const std::string want(env);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
            if (want == to_string(isa) && isa_supported(isa)) {
                return isa;
            }
        }
        // Unknown or unsupported request falls back to the reference kernels.
        return Isa::scalar;
    }
    return best_isa();
}

}  // namespace

std::string_view to_string(Isa isa) {
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) {
    switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return cpu_has_avx2();
    case Isa::neon:
#if defined(DECORSTORY_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

Isa best_isa() {
    if (isa_supported(Isa::avx2)) {
        return Isa::avx2;
    }
    if (isa_supported(Isa::neon)) {
        return Isa::neon;
    }
    return Isa::scalar;
}

Isa active_isa() {
    int v = g_active.load(std::memory_order_acquire);
    if (v == kUnset) {
        int expected = kUnset;
        g_active.compare_exchange_strong(expected, static_cast<int>(initial_isa()), std::memory_order_acq_rel);
        v = g_active.load(std::memory_order_acquire);
    }
    return static_cast<Isa>(v);
}

void set_active_isa(Isa isa) {
    if (!isa_supported(isa)) {
        raise(Errc::invalid_argument, "ISA '" + std::string(to_string(isa)) + "' is not available on this build/CPU");
    }
    g_active.store(static_cast<int>(isa), std::memory_order_release);
}

template <>
const Kernels<float>& kernels<float>(Isa isa) {
    switch (isa) {
#if defined(DECORSTORY_HAVE_AVX2)
    case Isa::avx2:
        if (cpu_has_avx2()) return detail::avx2_kernels_f32();
        break;
#endif
#if defined(DECORSTORY_HAVE_NEON)
    case Isa::neon: return detail::neon_kernels_f32();
#endif
    default: break;
    }
    return detail::scalar_kernels_f32();
}

template <>
const Kernels<double>& kernels<double>(Isa isa) {
    switch (isa) {
#if defined(DECORSTORY_HAVE_AVX2)
    case Isa::avx2:
        if (cpu_has_avx2()) return detail::avx2_kernels_f64();
        break;
#endif
#if defined(DECORSTORY_HAVE_NEON)
    case Isa::neon: return detail::neon_kernels_f64();
#endif
    default: break;
    }
    return detail::scalar_kernels_f64();
}

}  // namespace decorstory::simd
