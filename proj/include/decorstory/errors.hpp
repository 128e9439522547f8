// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace decorstory {

enum class Errc {
    malformed_file,
    layout_inconsistent,
    non_finite_entry,
    io_failure,
    zero_frame_embedding,
    empty_span,
    degenerate_frame,
    zero_row,
    shape_mismatch,
    frame_index_out_of_range,
    non_finite_score,
    steps_remaining,
    invalid_rho,
    invalid_argument,
};

std::string_view to_string(Errc code);

/// Domain error raised by every library operation. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);

    Errc code() const noexcept { return m_code; }

private:
    Errc m_code;
};

/// Thrown by modified_gram_schmidt under the error policy. `frame()` is 1-based.
class DegenerateFrameError : public Error {
public:
    DegenerateFrameError(std::size_t frame, const std::string& message)
        : Error(Errc::degenerate_frame, message), m_frame(frame) {}

    std::size_t frame() const noexcept { return m_frame; }

private:
    std::size_t m_frame;
};

[[noreturn]] void raise(Errc code, const std::string& message);

}  // namespace decorstory
