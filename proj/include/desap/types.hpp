// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DESAP_TYPES_HPP
#define DESAP_TYPES_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace desap {

// Dense row-major carriers. Everything numeric in the pipeline runs in
// double precision; the 32-bit boundary lives in tensor_io only.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector dimensions. Messages name both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Token budget exceeds what the input can supply (top-k, prune splits).
class BudgetError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value (dims, variants, knobs).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Index outside the addressed sequence.
class IndexError : public Error {
public:
    using Error::Error;
};

// Inputs that must have come from the same run disagree (trace vs weights).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

// Malformed tensor file; carries the byte offset of the defect.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " at offset " + std::to_string(offset)), m_offset(offset) {}

    std::uint64_t offset() const { return m_offset; }

private:
    std::uint64_t m_offset;
};

class DivisionError : public Error {
public:
    using Error::Error;
};

template <typename Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Ordered set of 0-based token positions: strictly increasing, no duplicates.
class IndexSet {
public:
    IndexSet() = default;

    explicit IndexSet(std::vector<Index> indices) : m_indices(std::move(indices)) {
        for (std::size_t i = 0; i < m_indices.size(); ++i) {
            if (m_indices[i] < 0) {
                throw IndexError("IndexSet: negative index " + std::to_string(m_indices[i]));
            }
            if (i > 0 && m_indices[i] <= m_indices[i - 1]) {
                throw IndexError("IndexSet: indices must be strictly increasing, got " +
                                 std::to_string(m_indices[i - 1]) + " before " +
                                 std::to_string(m_indices[i]));
            }
        }
    }

    static IndexSet all(Index n) {
        std::vector<Index> v(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            v[static_cast<std::size_t>(i)] = i;
        }
        return IndexSet(std::move(v));
    }

    const std::vector<Index>& indices() const { return m_indices; }
    Index size() const { return static_cast<Index>(m_indices.size()); }
    bool empty() const { return m_indices.empty(); }
    Index operator[](std::size_t i) const { return m_indices[i]; }

    bool contains(Index i) const {
        auto it = std::lower_bound(m_indices.begin(), m_indices.end(), i);
        return it != m_indices.end() && *it == i;
    }

    // Throws when any index falls outside [0, bound).
    void check_bound(Index bound, const std::string& what) const {
        if (!m_indices.empty() && m_indices.back() >= bound) {
            throw IndexError(what + ": index " + std::to_string(m_indices.back()) +
                             " out of range [0, " + std::to_string(bound) + ")");
        }
    }

    auto begin() const { return m_indices.begin(); }
    auto end() const { return m_indices.end(); }

    friend bool operator==(const IndexSet&, const IndexSet&) = default;

private:
    std::vector<Index> m_indices;
};

}  // namespace desap

#endif  // DESAP_TYPES_HPP
