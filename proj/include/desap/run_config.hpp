// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value run configuration shared by the CLI subcommands. '#'
// starts a comment, blank lines are skipped, keys may appear in any order
// but at most once, and unknown keys are an error rather than a silent
// typo. Inputs may come from tensor files or be synthesized from the seed.

#ifndef DESAP_RUN_CONFIG_HPP
#define DESAP_RUN_CONFIG_HPP

#include <string>

#include "desap/alignment.hpp"
#include "desap/encoder.hpp"
#include "desap/pruning.hpp"
#include "desap/types.hpp"

namespace desap {

struct RunConfig {
    EncoderConfig encoder;  // num_layers num_heads embed_dim ffn_dim num_patches has_cls seed

    AttentionVariant variant = AttentionVariant::QQV;  // variant
    double sharpness = kDefaultSharpness;              // lambda
    double split = 0.5;                                // split
    Index total_keep = 0;                              // total_keep

    Index num_text_tokens = 4;  // num_text_tokens (synthetic text length)
    Index eos_index = -1;       // eos_index (-1: last text token)

    std::string visual_input;    // visual_input (tensor path; empty: synthesize)
    std::string text_embedding;  // text_embedding (tensor path; empty: synthesize)
    std::string output_dir = "out";  // output_dir

    Index grid_rows = 0;  // grid_rows (0: auto)
    Index grid_cols = 0;  // grid_cols (0: auto)
};

RunConfig parse_run_config(const std::string& text);  // throws ConfigError
RunConfig load_run_config(const std::string& path);

// Deterministic stand-in inputs on [-1, 1): the visual tokens from
// seed + 1, the text matrix from seed + 2, both independent of the weight
// stream (which consumes the seed itself).
Matrix synthetic_visual_input(const EncoderConfig& config);
Matrix synthetic_text_matrix(const RunConfig& config);

// Builds the text embedding for a run: loads the tensor when a path is set,
// otherwise synthesizes it; resolves eos_index = -1 to the last row.
TextEmbedding resolve_text(const RunConfig& config);

// Loads or synthesizes the encoder input.
Matrix resolve_visual_input(const RunConfig& config);

}  // namespace desap

#endif  // DESAP_RUN_CONFIG_HPP
