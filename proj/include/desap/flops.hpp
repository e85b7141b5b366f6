// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Prefill cost model for a decoder-style transformer consuming visual
// tokens. Per layer and sequence length n the model counts
//
//   4*n*d^2 + 2*n^2*d + 3*n*d*m
//
// FLOPs (attention projections, attention scores/mix, and a gated FFN),
// sums them over a per-layer token schedule, and derives the reduction
// ratio and speedup of a pruned schedule against the full one. Counts are
// exact integers; only ratios leave integer arithmetic.

#ifndef DESAP_FLOPS_HPP
#define DESAP_FLOPS_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "desap/types.hpp"

namespace desap {

struct ModelDims {
    std::uint64_t num_layers = 1;
    std::uint64_t hidden_dim = 1;
    std::uint64_t ffn_dim = 1;

    void validate() const;  // throws ConfigError on zero dims
};

// Named dimension presets; "llava15-7b" is the standard 7B decoder
// (32 layers, hidden 4096, FFN 11008).
ModelDims preset_dims(std::string_view name);

// Exact per-layer count for n tokens. Saturates at the 64-bit maximum
// instead of wrapping when the inputs are absurdly large.
std::uint64_t layer_flops(std::uint64_t n, const ModelDims& dims);

// Visual token count per layer; a pruned run keeps fewer tokens from the
// pruning layer onward, a full run keeps them everywhere.
struct TokenSchedule {
    std::vector<std::uint64_t> tokens;
};

TokenSchedule uniform_schedule(std::uint64_t n, std::uint64_t num_layers);

// Sum of layer_flops over the schedule; the schedule must cover every layer.
std::uint64_t total_flops(const TokenSchedule& schedule, const ModelDims& dims);

// 1 - post/total. total must be nonzero.
double reduction_ratio(std::uint64_t total, std::uint64_t post);

// Cost of the similarity alignment between d1 visual and d2 text tokens of
// width e: the token-pair product plus both representative-weight products,
// at 2 FLOPs per multiply-accumulate.
std::uint64_t alignment_overhead_flops(std::uint64_t d1, std::uint64_t d2, std::uint64_t e);

struct FlopsReport {
    std::uint64_t total = 0;
    std::uint64_t post_pruning = 0;
    double reduction_ratio = 0.0;
    double speedup = 0.0;  // total/post; infinity when post is zero
};

FlopsReport make_report(std::uint64_t total, std::uint64_t post);

double tflops_value(std::uint64_t flops);         // flops / 1e12
std::string format_tflops(std::uint64_t flops);   // two-decimal string, e.g. "3.82"

// The reduction ratio a reader would compute from the two-decimal TFLOP
// figures. Published tables round before dividing, so this can differ from
// reduction_ratio in the third decimal.
double reported_reduction_ratio(std::uint64_t total, std::uint64_t post);

}  // namespace desap

#endif  // DESAP_FLOPS_HPP
