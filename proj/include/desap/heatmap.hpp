// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Score vectors rendered as 8-bit binary PGM images for eyeballing which
// tokens a run kept. Min-max normalized per map; a constant map has no
// contrast to show and renders mid-gray.

#ifndef DESAP_HEATMAP_HPP
#define DESAP_HEATMAP_HPP

#include <string>

#include "desap/types.hpp"

namespace desap {

// "P5" PGM bytes for scores laid out row-major on a rows x cols grid.
// Deterministic: identical input gives identical bytes.
std::string render_pgm(const Vector& scores, Index rows, Index cols);

void write_pgm(const std::string& path, const Vector& scores, Index rows, Index cols);

// rows x cols == count, preferring the square root when count is a perfect
// square; otherwise a single row. Used when a config does not pin the grid.
std::pair<Index, Index> auto_grid(Index count);

}  // namespace desap

#endif  // DESAP_HEATMAP_HPP
