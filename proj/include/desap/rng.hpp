// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded uniform draws shared by weight init and synthetic inputs. The
// 53-bit mapping avoids libm and std::distribution differences, so the same
// seed produces the same bytes on every platform.

#ifndef DESAP_RNG_HPP
#define DESAP_RNG_HPP

#include <random>

#include "desap/types.hpp"

namespace desap {

// Uniform on [0, 1) from the top 53 bits of one engine step.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform on [lo, hi), filled row-major.
inline Matrix uniform_matrix(Index rows, Index cols, std::mt19937_64& gen, double lo, double hi) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            m(r, c) = lo + uniform01(gen) * (hi - lo);
    return m;
}

}  // namespace desap

#endif  // DESAP_RNG_HPP
