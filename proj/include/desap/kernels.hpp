// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal deterministic dense kernels shared by every stage of the pipeline.
// All functions are pure; ties and degenerate inputs resolve the same way on
// every run and platform.

#ifndef DESAP_KERNELS_HPP
#define DESAP_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "desap/types.hpp"

namespace desap {

enum class Axis {
    Rows,  // collapse rows, one value per column
    Cols,  // collapse columns, one value per row
};

template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a) + " by " +
                         shape_str(b));
    }
    return a * b;
}

// Numerically stable softmax per row: max subtraction keeps exp in range.
template <typename Derived>
MatrixX<typename Derived::Scalar> row_softmax(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (m.rows() == 0 || m.cols() == 0) {
        throw ShapeError("row_softmax: empty matrix " + shape_str(m));
    }
    MatrixX<Scalar> out(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i) {
        const Scalar peak = m.row(i).maxCoeff();
        out.row(i) = (m.row(i).array() - peak).exp();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

// Row-wise standardization with population variance, then scale and shift.
template <typename Derived>
MatrixX<typename Derived::Scalar> layer_norm(const Eigen::MatrixBase<Derived>& m,
                                             const VectorX<typename Derived::Scalar>& gamma,
                                             const VectorX<typename Derived::Scalar>& beta,
                                             typename Derived::Scalar eps) {
    using Scalar = typename Derived::Scalar;
    if (gamma.size() != m.cols() || beta.size() != m.cols()) {
        throw ShapeError("layer_norm: matrix " + shape_str(m) + " needs scale/shift of length " +
                         std::to_string(m.cols()) + ", got " + std::to_string(gamma.size()) +
                         " and " + std::to_string(beta.size()));
    }
    if (!(eps > Scalar(0))) {
        throw ConfigError("layer_norm: eps must be positive");
    }
    MatrixX<Scalar> out(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i) {
        const Scalar mean = m.row(i).mean();
        const Scalar var = (m.row(i).array() - mean).square().mean();
        const auto standardized = (m.row(i).array() - mean) / std::sqrt(var + eps);
        out.row(i) = standardized * gamma.transpose().array() + beta.transpose().array();
    }
    return out;
}

// Rows scaled to unit L2 norm; zero rows pass through unchanged so cosine
// products against them come out as 0 rather than NaN.
template <typename Derived>
MatrixX<typename Derived::Scalar> l2_normalize_rows(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    MatrixX<Scalar> out = m;
    for (Index i = 0; i < out.rows(); ++i) {
        const Scalar norm = out.row(i).norm();
        if (norm > Scalar(0)) {
            out.row(i) /= norm;
        }
    }
    return out;
}

// Pairwise cosine of rows of a against rows of b; zero-norm rows give 0.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> cosine_sim_matrix(const Eigen::MatrixBase<DerivedA>& a,
                                                     const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    if (a.cols() != b.cols()) {
        throw ShapeError("cosine_sim_matrix: feature dims disagree, " + shape_str(a) + " vs " +
                         shape_str(b));
    }
    MatrixX<Scalar> out(a.rows(), b.rows());
    VectorX<Scalar> norm_a(a.rows());
    VectorX<Scalar> norm_b(b.rows());
    for (Index i = 0; i < a.rows(); ++i) {
        norm_a(i) = a.row(i).norm();
    }
    for (Index j = 0; j < b.rows(); ++j) {
        norm_b(j) = b.row(j).norm();
    }
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < b.rows(); ++j) {
            const Scalar denom = norm_a(i) * norm_b(j);
            out(i, j) = denom > Scalar(0) ? a.row(i).dot(b.row(j)) / denom : Scalar(0);
        }
    }
    return out;
}

template <typename Derived>
VectorX<typename Derived::Scalar> mean_over_axis(const Eigen::MatrixBase<Derived>& m, Axis axis) {
    if (m.rows() == 0 || m.cols() == 0) {
        throw ShapeError("mean_over_axis: empty matrix " + shape_str(m));
    }
    if (axis == Axis::Rows) {
        return m.colwise().mean().transpose();
    }
    return m.rowwise().mean();
}

// Positions of the k largest scores; equal scores resolve to the lower
// index, and the result is sorted ascending.
template <typename Derived>
IndexSet top_k_indices(const Eigen::MatrixBase<Derived>& scores, Index k) {
    static_assert(Derived::ColsAtCompileTime == 1, "top_k_indices expects a vector");
    const Index n = scores.size();
    if (k < 0 || k > n) {
        throw BudgetError("top_k_indices: k=" + std::to_string(k) + " exceeds " +
                          std::to_string(n) + " scores");
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    std::sort(order.begin(), order.end(), [&scores](Index lhs, Index rhs) {
        if (scores(lhs) != scores(rhs)) {
            return scores(lhs) > scores(rhs);
        }
        return lhs < rhs;
    });
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());
    return IndexSet(std::move(order));
}

}  // namespace desap

#endif  // DESAP_KERNELS_HPP
