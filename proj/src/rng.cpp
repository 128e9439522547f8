// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/rng.hpp"

#include <cmath>
#include <numbers>

namespace decorstory {

namespace {
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
}

double SplitMix64::uniform01() noexcept {
    return static_cast<double>(next() >> 11) * kTwoPow53Inv;
}

double SplitMix64::uniform_pm1() noexcept {
    return 2.0 * uniform01() - 1.0;
}

double SplitMix64::gaussian() noexcept {
    const double u1 = static_cast<double>((next() >> 11) + 1) * kTwoPow53Inv;
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace decorstory
