// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0

#include "desap/tensor_io.hpp"

#include <bit>
#include <fstream>
#include <limits>

static_assert(std::numeric_limits<float>::is_iec559, "tensor payloads require IEEE-754 floats");

namespace desap {
namespace {

constexpr char kMagic[4] = {'D', 'S', 'A', 'P'};

void put_u32(std::string& out, std::uint32_t value) {
    out.push_back(static_cast<char>(value & 0xff));
    out.push_back(static_cast<char>((value >> 8) & 0xff));
    out.push_back(static_cast<char>((value >> 16) & 0xff));
    out.push_back(static_cast<char>((value >> 24) & 0xff));
}

std::uint32_t get_u32(const std::string& bytes, std::size_t offset) {
    auto b = [&](std::size_t i) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i]));
    };
    return b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
}

void need(const std::string& bytes, std::size_t offset, std::size_t count, const char* what) {
    if (bytes.size() < offset + count)
        throw FormatError(std::string("tensor file truncated, expected ") + what, offset);
}

}  // namespace

Matrix TensorFile::as_matrix() const {
    Index rows = 0, cols = 0;
    if (dims.size() == 1) {
        rows = static_cast<Index>(dims[0]);
        cols = 1;
    } else if (dims.size() == 2) {
        rows = static_cast<Index>(dims[0]);
        cols = static_cast<Index>(dims[1]);
    } else {
        throw ShapeError("tensor of rank " + std::to_string(dims.size()) +
                         " has no matrix view");
    }
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            m(r, c) = static_cast<double>(values[static_cast<std::size_t>(r * cols + c)]);
    return m;
}

Vector TensorFile::as_vector() const {
    if (dims.size() != 1)
        throw ShapeError("tensor of rank " + std::to_string(dims.size()) + " has no vector view");
    Vector v(static_cast<Index>(dims[0]));
    for (Index i = 0; i < v.size(); ++i)
        v(i) = static_cast<double>(values[static_cast<std::size_t>(i)]);
    return v;
}

std::string encode_tensor(const TensorFile& tensor) {
    std::uint64_t count = 1;
    for (std::uint32_t d : tensor.dims) count *= d;
    if (count != tensor.values.size())
        throw ShapeError("tensor payload holds " + std::to_string(tensor.values.size()) +
                         " values, dims expect " + std::to_string(count));

    std::string out;
    out.reserve(12 + 4 * tensor.dims.size() + 4 * tensor.values.size());
    out.append(kMagic, 4);
    put_u32(out, kTensorVersion);
    put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
    for (std::uint32_t d : tensor.dims) put_u32(out, d);
    for (float f : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
    return out;
}

TensorFile decode_tensor(const std::string& bytes) {
    need(bytes, 0, 4, "4-byte magic");
    if (bytes.compare(0, 4, kMagic, 4) != 0)
        throw FormatError("bad tensor magic", 0);

    need(bytes, 4, 4, "u32 version");
    std::uint32_t version = get_u32(bytes, 4);
    if (version != kTensorVersion)
        throw FormatError("unsupported tensor version " + std::to_string(version), 4);

    need(bytes, 8, 4, "u32 rank");
    std::uint32_t rank = get_u32(bytes, 8);

    TensorFile tensor;
    std::uint64_t count = 1;
    std::size_t offset = 12;
    for (std::uint32_t i = 0; i < rank; ++i, offset += 4) {
        need(bytes, offset, 4, "u32 dim");
        std::uint32_t dim = get_u32(bytes, offset);
        if (dim != 0 && count > std::numeric_limits<std::uint64_t>::max() / dim)
            throw FormatError("tensor dim product overflows", offset);
        tensor.dims.push_back(dim);
        count *= dim;
    }

    if (count > (bytes.size() - offset) / 4)
        throw FormatError("tensor file truncated, expected f32 payload", offset);
    tensor.values.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i, offset += 4)
        tensor.values.push_back(std::bit_cast<float>(get_u32(bytes, offset)));

    if (offset != bytes.size())
        throw FormatError("trailing bytes after tensor payload", offset);
    return tensor;
}

TensorFile read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open tensor file '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_tensor(bytes);
}

Matrix read_tensor(const std::string& path) { return read_tensor_file(path).as_matrix(); }

Vector read_vector(const std::string& path) { return read_tensor_file(path).as_vector(); }

namespace {

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error("short write to '" + path + "'");
}

}  // namespace

std::string encode_matrix(const Matrix& m) {
    TensorFile tensor;
    tensor.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
    tensor.values.reserve(static_cast<std::size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            tensor.values.push_back(static_cast<float>(m(r, c)));
    return encode_tensor(tensor);
}

std::string encode_vector(const Vector& v) {
    TensorFile tensor;
    tensor.dims = {static_cast<std::uint32_t>(v.size())};
    tensor.values.reserve(static_cast<std::size_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) tensor.values.push_back(static_cast<float>(v(i)));
    return encode_tensor(tensor);
}

void write_tensor(const std::string& path, const Matrix& m) { write_bytes(path, encode_matrix(m)); }

void write_tensor(const std::string& path, const Vector& v) { write_bytes(path, encode_vector(v)); }

}  // namespace desap
