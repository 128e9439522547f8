// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Identity-preserving cross-attention over a conditioned token matrix.
//
// Keys/values are projected from the token matrix, then an identity-only copy
// is made in which every row outside the identity span is zero. Attention
// runs over the 2M-row concatenation [K; K_id] / [V; V_id]:
//
//   Out = softmax(Q [K; K_id]^T / sqrt(d)) [V; V_id]

#include <cstddef>
#include <utility>

#include "decorstory/layout.hpp"
#include "decorstory/matrix.hpp"
#include "decorstory/svr.hpp"

namespace decorstory {

template <Real T>
struct AttentionWeights {
    Matrix<T> w_k;  // D x d
    Matrix<T> w_v;  // D x d

    std::size_t key_dim() const noexcept { return w_k.cols(); }
    /// Throws ShapeMismatch / NonFiniteEntry.
    void validate(std::size_t embedding_dim) const;
};

template <Real T>
struct AttentionBatch {
    Matrix<T> q;     // Lq x d
    Matrix<T> k;     // M x d
    Matrix<T> v;     // M x d
    Matrix<T> k_id;  // M x d, zero outside the identity span
    Matrix<T> v_id;  // M x d, zero outside the identity span

    void validate() const;
};

template <Real T>
using KeyValue = std::pair<Matrix<T>, Matrix<T>>;

/// K = C W_K, V = C W_V.
template <Real T>
KeyValue<T> project_kv(const Matrix<T>& tokens, const AttentionWeights<T>& weights);

template <Real T>
KeyValue<T> project_kv(const ConditionedMatrix<T>& conditioned, const AttentionWeights<T>& weights) {
    return project_kv<T>(conditioned.data, weights);
}

/// Copies of K and V with every non-identity row (SOT, frames, EOT, padding) set to zero.
template <Real T>
KeyValue<T> identity_mask(const Matrix<T>& k, const Matrix<T>& v, const PromptLayout& layout);

/// Projects, masks and packages a batch for `queries`.
template <Real T>
AttentionBatch<T> make_ipca_batch(Matrix<T> queries, const Matrix<T>& tokens, const PromptLayout& layout,
                                  const AttentionWeights<T>& weights);

/// Row-softmax(Q K^T / sqrt(d)) with per-row max subtraction; the exponentials
/// are accumulated in long double. Throws NonFiniteScore.
template <Real T>
Matrix<T> attention_weights(const Matrix<T>& q, const Matrix<T>& keys);

/// Plain scaled dot-product attention.
template <Real T>
Matrix<T> attention(const Matrix<T>& q, const Matrix<T>& keys, const Matrix<T>& values);

/// Stacks `top` over `bottom` along the token axis.
template <Real T>
Matrix<T> concat_rows(const Matrix<T>& top, const Matrix<T>& bottom);

template <Real T>
Matrix<T> ipca_attention_weights(const AttentionBatch<T>& batch);

template <Real T>
Matrix<T> ipca_attention(const AttentionBatch<T>& batch);

/// Same contract as ipca_attention using only explicit scalar loops in double
/// precision. Kept independent of the kernel layer so it can serve as an oracle.
template <Real T>
Matrix<T> naive_attention_oracle(const AttentionBatch<T>& batch);

}  // namespace decorstory
