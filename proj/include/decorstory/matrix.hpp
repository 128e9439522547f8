// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <type_traits>
#include <vector>

#include "decorstory/errors.hpp"

namespace decorstory {

template <typename T>
concept Real = std::is_same_v<T, float> || std::is_same_v<T, double>;

/// Dense row-major matrix. A row is one token (or frame) embedding.
template <Real T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
        : m_rows(rows), m_cols(cols), m_data(rows * cols, fill) {}

    /// Row-list constructor for literals in tests and examples. Ragged input throws ShapeMismatch.
    Matrix(std::initializer_list<std::initializer_list<T>> rows) {
        m_rows = rows.size();
        m_cols = m_rows ? rows.begin()->size() : 0;
        m_data.reserve(m_rows * m_cols);
        for (const auto& r : rows) {
            if (r.size() != m_cols) {
                raise(Errc::shape_mismatch, "ragged row list");
            }
            m_data.insert(m_data.end(), r.begin(), r.end());
        }
    }

    std::size_t rows() const noexcept { return m_rows; }
    std::size_t cols() const noexcept { return m_cols; }
    std::size_t size() const noexcept { return m_data.size(); }
    bool empty() const noexcept { return m_data.empty(); }

    T& operator()(std::size_t r, std::size_t c) noexcept { return m_data[r * m_cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return m_data[r * m_cols + c]; }

    std::span<T> row(std::size_t r) noexcept { return {m_data.data() + r * m_cols, m_cols}; }
    std::span<const T> row(std::size_t r) const noexcept { return {m_data.data() + r * m_cols, m_cols}; }

    void set_row(std::size_t r, std::span<const T> values) {
        if (values.size() != m_cols) {
            raise(Errc::shape_mismatch, "row length does not match matrix width");
        }
        std::copy(values.begin(), values.end(), row(r).begin());
    }

    T* data() noexcept { return m_data.data(); }
    const T* data() const noexcept { return m_data.data(); }
    std::span<T> values() noexcept { return m_data; }
    std::span<const T> values() const noexcept { return m_data; }

    bool all_finite() const noexcept {
        return std::all_of(m_data.begin(), m_data.end(), [](T v) { return std::isfinite(v); });
    }

    /// Element-wise equality; NaN never compares equal.
    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.m_rows == b.m_rows && a.m_cols == b.m_cols && a.m_data == b.m_data;
    }

private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<T> m_data;
};

/// An M x D matrix of token embeddings.
template <Real T>
using TokenEmbeddingMatrix = Matrix<T>;

template <Real To, Real From>
Matrix<To> matrix_cast(const Matrix<From>& m) {
    Matrix<To> out(m.rows(), m.cols());
    std::transform(m.values().begin(), m.values().end(), out.values().begin(),
                   [](From v) { return static_cast<To>(v); });
    return out;
}

/// Largest absolute entry-wise difference. Shapes must agree.
template <Real T>
double max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        raise(Errc::shape_mismatch, "max_abs_diff on matrices of different shape");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
    }
    return worst;
}

}  // namespace decorstory
