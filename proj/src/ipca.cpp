// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/ipca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "decorstory/simd.hpp"

namespace decorstory {
namespace {

template <Real T>
void require_shape(const Matrix<T>& m, std::size_t rows, std::size_t cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        raise(Errc::shape_mismatch, std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                                        std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                                        std::to_string(cols));
    }
}

}  // namespace

template <Real T>
void AttentionWeights<T>::validate(std::size_t embedding_dim) const {
    if (w_k.cols() == 0) {
        raise(Errc::shape_mismatch, "key dimension must be at least 1");
    }
    require_shape(w_k, embedding_dim, w_k.cols(), "W_K");
    require_shape(w_v, embedding_dim, w_k.cols(), "W_V");
    if (!w_k.all_finite() || !w_v.all_finite()) {
        raise(Errc::non_finite_entry, "attention weights contain NaN or Inf");
    }
}

template <Real T>
void AttentionBatch<T>::validate() const {
    const std::size_t d = q.cols();
    const std::size_t m = k.rows();
    if (d == 0 || m == 0) {
        raise(Errc::shape_mismatch, "attention batch needs d >= 1 and at least one key");
    }
    require_shape(k, m, d, "K");
    require_shape(v, m, d, "V");
    require_shape(k_id, m, d, "K_id");
    require_shape(v_id, m, d, "V_id");
}

template <Real T>
KeyValue<T> project_kv(const Matrix<T>& tokens, const AttentionWeights<T>& weights) {
    weights.validate(tokens.cols());
    return {simd::matmul(tokens, weights.w_k), simd::matmul(tokens, weights.w_v)};
}

template <Real T>
KeyValue<T> identity_mask(const Matrix<T>& k, const Matrix<T>& v, const PromptLayout& layout) {
    if (k.rows() != v.rows() || k.cols() != v.cols()) {
        raise(Errc::shape_mismatch, "K and V shapes differ");
    }
    layout.validate(k.rows());
    KeyValue<T> out{Matrix<T>(k.rows(), k.cols()), Matrix<T>(v.rows(), v.cols())};
    for (std::size_t r = layout.identity.first; r <= layout.identity.last; ++r) {
        out.first.set_row(r, k.row(r));
        out.second.set_row(r, v.row(r));
    }
    return out;
}

template <Real T>
AttentionBatch<T> make_ipca_batch(Matrix<T> queries, const Matrix<T>& tokens, const PromptLayout& layout,
                                  const AttentionWeights<T>& weights) {
    auto [k, v] = project_kv<T>(tokens, weights);
    auto [k_id, v_id] = identity_mask<T>(k, v, layout);
    AttentionBatch<T> batch{std::move(queries), std::move(k), std::move(v), std::move(k_id), std::move(v_id)};
    batch.validate();
    return batch;
}

template <Real T>
Matrix<T> attention_weights(const Matrix<T>& q, const Matrix<T>& keys) {
    if (q.cols() != keys.cols() || q.cols() == 0) {
        raise(Errc::shape_mismatch, "query and key widths differ");
    }
    const auto& kern = simd::active_kernels<T>();
    const std::size_t d = q.cols();
    const std::size_t n = keys.rows();
    const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));

    Matrix<T> w(q.rows(), n);
    std::vector<long double> e(n);
    for (std::size_t i = 0; i < q.rows(); ++i) {
        std::span<T> scores = w.row(i);
        T max_score = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            scores[j] = kern.dot(q.row(i).data(), keys.row(j).data(), d) * inv_sqrt_d;
            if (!std::isfinite(scores[j])) {
                raise(Errc::non_finite_score, "attention score (" + std::to_string(i) + ", " + std::to_string(j) +
                                                  ") is not finite");
            }
            max_score = std::max(max_score, scores[j]);
        }
        long double sum = 0.0L;
        for (std::size_t j = 0; j < n; ++j) {
            e[j] = std::exp(static_cast<long double>(scores[j]) - static_cast<long double>(max_score));
            sum += e[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            scores[j] = static_cast<T>(e[j] / sum);
        }
    }
    return w;
}

template <Real T>
Matrix<T> attention(const Matrix<T>& q, const Matrix<T>& keys, const Matrix<T>& values) {
    if (keys.rows() != values.rows()) {
        raise(Errc::shape_mismatch, "key and value counts differ");
    }
    return simd::matmul(attention_weights<T>(q, keys), values);
}

template <Real T>
Matrix<T> concat_rows(const Matrix<T>& top, const Matrix<T>& bottom) {
    if (top.cols() != bottom.cols()) {
        raise(Errc::shape_mismatch, "cannot stack matrices of different widths");
    }
    Matrix<T> out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.values().begin(), top.values().end(), out.values().begin());
    std::copy(bottom.values().begin(), bottom.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(top.size()));
    return out;
}

template <Real T>
Matrix<T> ipca_attention_weights(const AttentionBatch<T>& batch) {
    batch.validate();
    return attention_weights<T>(batch.q, concat_rows(batch.k, batch.k_id));
}

template <Real T>
Matrix<T> ipca_attention(const AttentionBatch<T>& batch) {
    batch.validate();
    return attention<T>(batch.q, concat_rows(batch.k, batch.k_id), concat_rows(batch.v, batch.v_id));
}

template <Real T>
Matrix<T> naive_attention_oracle(const AttentionBatch<T>& batch) {
    batch.validate();
    const std::size_t lq = batch.q.rows();
    const std::size_t m = batch.k.rows();
    const std::size_t d = batch.q.cols();
    const double scale = std::sqrt(static_cast<double>(d));

    Matrix<T> out(lq, d);
    std::vector<double> score(2 * m);
    for (std::size_t i = 0; i < lq; ++i) {
        for (std::size_t j = 0; j < 2 * m; ++j) {
            const Matrix<T>& keys = j < m ? batch.k : batch.k_id;
            const std::size_t row = j < m ? j : j - m;
            double s = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                s += static_cast<double>(batch.q(i, t)) * static_cast<double>(keys(row, t));
            }
            score[j] = s / scale;
            if (!std::isfinite(score[j])) {
                raise(Errc::non_finite_score, "attention score is not finite");
            }
        }
        double max_score = score[0];
        for (std::size_t j = 1; j < 2 * m; ++j) {
            if (score[j] > max_score) max_score = score[j];
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < 2 * m; ++j) {
            score[j] = std::exp(score[j] - max_score);
            sum += score[j];
        }
        for (std::size_t t = 0; t < d; ++t) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 2 * m; ++j) {
                const Matrix<T>& values = j < m ? batch.v : batch.v_id;
                const std::size_t row = j < m ? j : j - m;
                acc += (score[j] / sum) * static_cast<double>(values(row, t));
            }
            out(i, t) = static_cast<T>(acc);
        }
    }
    return out;
}

#define DECORSTORY_INSTANTIATE(T)                                                                            \
    template struct AttentionWeights<T>;                                                                     \
    template struct AttentionBatch<T>;                                                                       \
    template KeyValue<T> project_kv<T>(const Matrix<T>&, const AttentionWeights<T>&);                        \
    template KeyValue<T> identity_mask<T>(const Matrix<T>&, const Matrix<T>&, const PromptLayout&);          \
    template AttentionBatch<T> make_ipca_batch<T>(Matrix<T>, const Matrix<T>&, const PromptLayout&,          \
                                                  const AttentionWeights<T>&);                               \
    template Matrix<T> attention_weights<T>(const Matrix<T>&, const Matrix<T>&);                             \
    template Matrix<T> attention<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&);                   \
    template Matrix<T> concat_rows<T>(const Matrix<T>&, const Matrix<T>&);                                   \
    template Matrix<T> ipca_attention_weights<T>(const AttentionBatch<T>&);                                  \
    template Matrix<T> ipca_attention<T>(const AttentionBatch<T>&);                                          \
    template Matrix<T> naive_attention_oracle<T>(const AttentionBatch<T>&);

DECORSTORY_INSTANTIATE(float)
DECORSTORY_INSTANTIATE(double)
#undef DECORSTORY_INSTANTIATE

}  // namespace decorstory
