// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0

#include "desap/heatmap.hpp"

#include <cmath>
#include <fstream>

namespace desap {

std::string render_pgm(const Vector& scores, Index rows, Index cols) {
    if (rows < 1 || cols < 1)
        throw ShapeError("heatmap grid must be positive, got " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    if (rows * cols != scores.size())
        throw ShapeError("grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " does not hold " + std::to_string(scores.size()) + " scores");

    const double lo = scores.minCoeff();
    const double hi = scores.maxCoeff();

    std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(scores.size()));
    for (Index i = 0; i < scores.size(); ++i) {
        long pixel = hi == lo ? 128 : std::lround(255.0 * (scores(i) - lo) / (hi - lo));
        out.push_back(static_cast<char>(static_cast<unsigned char>(pixel)));
    }
    return out;
}

void write_pgm(const std::string& path, const Vector& scores, Index rows, Index cols) {
    std::string bytes = render_pgm(scores, rows, cols);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error("short write to '" + path + "'");
}

std::pair<Index, Index> auto_grid(Index count) {
    if (count < 1)
        throw ShapeError("cannot grid " + std::to_string(count) + " scores");
    Index side = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(count))));
    if (side >= 1 && side * side == count) return {side, side};
    return {1, count};
}

}  // namespace desap
