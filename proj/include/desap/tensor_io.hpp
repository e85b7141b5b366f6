// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary tensor files: magic "DSAP", u32 version (= 1), u32 rank, rank u32
// dims, then the row-major payload as 32-bit IEEE-754 floats. Every
// multi-byte field is little-endian regardless of host order. Math runs in
// 64-bit; the file format is the 32-bit precision boundary for golden
// artifacts.

#ifndef DESAP_TENSOR_IO_HPP
#define DESAP_TENSOR_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "desap/types.hpp"

namespace desap {

inline constexpr std::uint32_t kTensorVersion = 1;

struct TensorFile {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;  // row-major

    Index rank() const { return static_cast<Index>(dims.size()); }

    // Rank-2 view; a rank-1 tensor becomes a single-column matrix.
    Matrix as_matrix() const;
    // Strict rank-1 view.
    Vector as_vector() const;
};

// In-memory encoding/decoding; decode throws FormatError carrying the byte
// offset of the first inconsistency.
std::string encode_tensor(const TensorFile& tensor);
TensorFile decode_tensor(const std::string& bytes);

// File bytes for a rank-2 / rank-1 tensor narrowed to 32-bit.
std::string encode_matrix(const Matrix& m);
std::string encode_vector(const Vector& v);

TensorFile read_tensor_file(const std::string& path);
Matrix read_tensor(const std::string& path);   // as_matrix of the file
Vector read_vector(const std::string& path);   // as_vector of the file

void write_tensor(const std::string& path, const Matrix& m);
void write_tensor(const std::string& path, const Vector& v);

}  // namespace desap

#endif  // DESAP_TENSOR_IO_HPP
