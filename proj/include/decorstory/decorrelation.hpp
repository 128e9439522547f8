// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "decorstory/layout.hpp"
#include "decorstory/matrix.hpp"

namespace decorstory {

enum class DegeneratePolicy {
    error,                    // throw DegenerateFrameError
    keep_normalized_original  // emit c_k / |c_k| and record k
};

struct DecorrelationParams {
    /// Frame k is degenerate when its residual norm after projection falls
    /// below dependence_epsilon * |c_k|. Must lie in [0, 1).
    double dependence_epsilon = 1e-8;
    DegeneratePolicy degenerate_policy = DegeneratePolicy::error;

    void validate() const;
};

template <Real T>
struct DecorrelatedFrameMatrix {
    Matrix<T> rows;
    /// 1-based frame numbers that took the fallback path, ascending.
    std::vector<std::size_t> degenerate_frames;

    bool is_degenerate(std::size_t frame) const noexcept;
};

/// Row-wise modified Gram-Schmidt in ascending frame order.
///
/// Each frame row is projected sequentially against every basis row produced so
/// far (using the running residual, not the original row) and then normalized.
/// If any residual coefficient against the basis is still above 1e-10 after the
/// first sweep, a second sweep is applied. Frame 1 is exactly c_1 / |c_1|.
///
/// Degenerate frames (residual below the epsilon threshold, or more frames than
/// dimensions) are never added to the basis, so later frames are orthogonalized
/// only against genuine basis rows.
template <Real T>
DecorrelatedFrameMatrix<T> modified_gram_schmidt(const FrameMatrix<T>& frames,
                                                 const DecorrelationParams& params = {});

/// Replaces every frame span of `tokens` with the matching decorrelated row
/// (see write_span_representative). SOT, identity, EOT and padding rows are copied unchanged.
template <Real T>
TokenEmbeddingMatrix<T> inject_decorrelated(const TokenEmbeddingMatrix<T>& tokens, const PromptLayout& layout,
                                            const DecorrelatedFrameMatrix<T>& decorrelated);

}  // namespace decorstory
