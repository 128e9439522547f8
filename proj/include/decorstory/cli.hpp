// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace decorstory::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `decorstory` invocation. `args` excludes the program name.
/// Precision comes from DECORSTORY_FLOAT=f32|f64 (default f64).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest locale-independent text for `value` with a fixed number of
/// significant digits: 17 for double, 9 for float.
std::string format_real(double value, int significant_digits = 17);

}  // namespace decorstory::cli
