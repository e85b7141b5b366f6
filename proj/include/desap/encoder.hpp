// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic toy residual-attention encoder. Each block applies
// multi-head self-attention to the layer-normalized block input, adds the
// residual, then adds a feed-forward over the layer-normalized intermediate:
//
//   x_re = x + proj(attention(ln1(x)))
//   x'   = x_re + ffn(ln2(x_re))
//
// The forward pass records every intermediate so later stages can split the
// final hidden state into its residual and attention components and read
// attention maps without re-running the model.

#ifndef DESAP_ENCODER_HPP
#define DESAP_ENCODER_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "desap/types.hpp"

namespace desap {

// LayerNorm epsilon used by every block (inside the square root).
inline constexpr double kLayerNormEps = 1e-5;

struct EncoderConfig {
    Index num_layers = 1;
    Index num_heads = 1;
    Index embed_dim = 8;   // must be divisible by num_heads
    Index ffn_dim = 16;
    Index num_patches = 4;
    bool has_cls = true;
    std::uint64_t seed = 0;

    Index head_dim() const { return embed_dim / num_heads; }
    Index token_count() const { return num_patches + (has_cls ? 1 : 0); }

    void validate() const;  // throws ConfigError

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct LayerWeights {
    Vector attn_norm_scale, attn_norm_shift;
    Matrix query_weight, key_weight, value_weight, out_weight;  // embed x embed
    Vector query_bias, key_bias, value_bias, out_bias;
    Vector ffn_norm_scale, ffn_norm_shift;
    Matrix ffn_up_weight;    // embed x ffn
    Vector ffn_up_bias;
    Matrix ffn_down_weight;  // ffn x embed
    Vector ffn_down_bias;
};

struct EncoderWeights {
    EncoderConfig config;
    std::vector<LayerWeights> layers;
};

// Seeded pseudo-random weights: mt19937_64(seed) drives uniforms on
// [-1/sqrt(embed_dim), 1/sqrt(embed_dim)) via the 53-bit mapping
// (x >> 11) * 2^-53, filling each layer in declaration order (matrices
// row-major, bias after its matrix). Norm scales start at 1, shifts at 0.
// Identical seeds give bit-identical weights.
EncoderWeights init_encoder(const EncoderConfig& config);

// All projection/FFN weights and biases zero; norm scales zero too, so the
// encoder is an exact identity map on its input.
EncoderWeights zero_encoder(const EncoderConfig& config);

struct LayerTrace {
    std::vector<Matrix> queries;    // per head, tokens x head_dim
    std::vector<Matrix> keys;
    std::vector<Matrix> values;
    std::vector<Matrix> attention;  // per head, tokens x tokens, row-stochastic
};

struct EncoderTrace {
    EncoderConfig config;
    std::vector<Matrix> hidden;      // hidden[0] = input, hidden[l] = block l output
    std::vector<LayerTrace> layers;

    const Matrix& final_hidden() const { return hidden.back(); }
};

// Runs the encoder and records all per-layer intermediates. The input is an
// already-embedded token matrix of shape token_count x embed_dim, CLS row
// first when present.
EncoderTrace forward(const EncoderWeights& weights, const Matrix& input);

// Split of the final hidden state: residual carries the previous layer's
// hidden state, attention carries the projected self-attention output, and
// reconstruction = residual + attention + ffn(ln(residual + attention)).
struct Decomposition {
    Matrix residual;
    Matrix attention;
    Matrix reconstruction;
};

Decomposition decompose_last_layer(const EncoderWeights& weights, const EncoderTrace& trace);

// Which operands form the pre-softmax token-affinity logits in the last
// block; the softmaxed map is always applied to the value projection.
enum class AttentionVariant { QKV, QQV, VVV, KKV };

AttentionVariant variant_from_string(std::string_view name);  // throws ConfigError
std::string to_string(AttentionVariant variant);

// Per-head pre-softmax logit matrices (scaled by 1/sqrt(head_dim)) for the
// last block under the given variant.
std::vector<Matrix> decoupled_logits(const EncoderWeights& weights, const EncoderTrace& trace,
                                     AttentionVariant variant);

// Variant attention over the last block's projections: softmaxed logits
// applied per head to the value projection, heads concatenated, then passed
// through the block's output projection. Shape: token_count x embed_dim.
Matrix decoupled_attention(const EncoderWeights& weights, const EncoderTrace& trace,
                           AttentionVariant variant);

// Per-patch saliency from the last block's head-averaged attention. With a
// CLS token this is its attention row over the patch columns; without one,
// the column mean over all rows. Entries lie in [0, 1], CLS excluded.
Vector cls_saliency(const EncoderTrace& trace);

}  // namespace desap

#endif  // DESAP_ENCODER_HPP
