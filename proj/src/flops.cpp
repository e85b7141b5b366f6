// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0

#include "desap/flops.hpp"

#include <cstdio>
#include <cstdlib>
#include <limits>

namespace desap {
namespace {

constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();

std::uint64_t saturate(unsigned __int128 value) {
    return value > static_cast<unsigned __int128>(kMax) ? kMax : static_cast<std::uint64_t>(value);
}

}  // namespace

void ModelDims::validate() const {
    if (num_layers == 0 || hidden_dim == 0 || ffn_dim == 0)
        throw ConfigError("model dims must all be positive: layers=" + std::to_string(num_layers) +
                          " hidden=" + std::to_string(hidden_dim) +
                          " ffn=" + std::to_string(ffn_dim));
}

ModelDims preset_dims(std::string_view name) {
    if (name == "llava15-7b") return ModelDims{32, 4096, 11008};
    throw ConfigError("unknown model preset '" + std::string(name) + "'");
}

std::uint64_t layer_flops(std::uint64_t n, const ModelDims& dims) {
    dims.validate();
    using wide = unsigned __int128;
    const wide nd = static_cast<wide>(n) * dims.hidden_dim;
    const wide projections = 4 * nd * dims.hidden_dim;
    const wide attention = 2 * nd * n;
    const wide ffn = 3 * nd * dims.ffn_dim;
    return saturate(projections + attention + ffn);
}

TokenSchedule uniform_schedule(std::uint64_t n, std::uint64_t num_layers) {
    TokenSchedule schedule;
    schedule.tokens.assign(num_layers, n);
    return schedule;
}

std::uint64_t total_flops(const TokenSchedule& schedule, const ModelDims& dims) {
    dims.validate();
    if (schedule.tokens.size() != dims.num_layers)
        throw ShapeError("token schedule covers " + std::to_string(schedule.tokens.size()) +
                         " layers, model has " + std::to_string(dims.num_layers));
    unsigned __int128 sum = 0;
    for (std::uint64_t n : schedule.tokens) sum += layer_flops(n, dims);
    return saturate(sum);
}

double reduction_ratio(std::uint64_t total, std::uint64_t post) {
    if (total == 0)
        throw DivisionError("reduction ratio needs a nonzero baseline FLOP count");
    if (post == 0) return 1.0;
    return 1.0 - static_cast<double>(post) / static_cast<double>(total);
}

std::uint64_t alignment_overhead_flops(std::uint64_t d1, std::uint64_t d2, std::uint64_t e) {
    using wide = unsigned __int128;
    const wide pairs = 2 * static_cast<wide>(d1) * d2 * e;
    const wide reps = 2 * static_cast<wide>(d1) * e + 2 * static_cast<wide>(d2) * e;
    return saturate(pairs + reps);
}

FlopsReport make_report(std::uint64_t total, std::uint64_t post) {
    FlopsReport report;
    report.total = total;
    report.post_pruning = post;
    report.reduction_ratio = reduction_ratio(total, post);
    report.speedup = post == 0 ? std::numeric_limits<double>::infinity()
                               : static_cast<double>(total) / static_cast<double>(post);
    return report;
}

double tflops_value(std::uint64_t flops) {
    return static_cast<double>(flops) / 1e12;
}

std::string format_tflops(std::uint64_t flops) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", tflops_value(flops));
    return buf;
}

double reported_reduction_ratio(std::uint64_t total, std::uint64_t post) {
    if (total == 0)
        throw DivisionError("reduction ratio needs a nonzero baseline FLOP count");
    double rounded_total = std::strtod(format_tflops(total).c_str(), nullptr);
    double rounded_post = std::strtod(format_tflops(post).c_str(), nullptr);
    if (rounded_total == 0.0)
        throw DivisionError("baseline rounds to 0.00 TFLOPs; the reported ratio is undefined");
    return 1.0 - rounded_post / rounded_total;
}

}  // namespace desap
