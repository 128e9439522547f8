// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/errors.hpp"

namespace decorstory {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::malformed_file: return "MalformedFile";
    case Errc::layout_inconsistent: return "LayoutInconsistent";
    case Errc::non_finite_entry: return "NonFiniteEntry";
    case Errc::io_failure: return "IoFailure";
    case Errc::zero_frame_embedding: return "ZeroFrameEmbedding";
    case Errc::empty_span: return "EmptySpan";
    case Errc::degenerate_frame: return "DegenerateFrame";
    case Errc::zero_row: return "ZeroRow";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::frame_index_out_of_range: return "FrameIndexOutOfRange";
    case Errc::non_finite_score: return "NonFiniteScore";
    case Errc::steps_remaining: return "StepsRemaining";
    case Errc::invalid_rho: return "InvalidRho";
    case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), m_code(code) {}

void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace decorstory
