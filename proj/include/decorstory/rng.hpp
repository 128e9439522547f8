// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace decorstory {

/// SplitMix64 stream. The output sequence is fully specified so that any
/// reimplementation reproduces it:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// uniform01() = (next() >> 11) * 2^-53, in [0, 1)
/// uniform_pm1() = 2 * uniform01() - 1, in [-1, 1)
/// gaussian() draws two words: u1 = ((next() >> 11) + 1) * 2^-53 in (0, 1],
///   u2 = uniform01(); returns sqrt(-2 ln u1) * cos(2 pi u2). The sine branch is discarded.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : m_state(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (m_state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform01() noexcept;
    double uniform_pm1() noexcept;
    double gaussian() noexcept;

private:
    std::uint64_t m_state;
};

}  // namespace decorstory
