// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0

#include "desap/encoder.hpp"

#include <cmath>
#include <random>

#include "desap/kernels.hpp"
#include "desap/rng.hpp"

namespace desap {
namespace {

void fill_uniform(Matrix& m, std::mt19937_64& gen, double bound) {
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            m(r, c) = (2.0 * uniform01(gen) - 1.0) * bound;
}

void fill_uniform(Vector& v, std::mt19937_64& gen, double bound) {
    for (Index i = 0; i < v.size(); ++i)
        v(i) = (2.0 * uniform01(gen) - 1.0) * bound;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865476));
}

Matrix project(const Matrix& x, const Matrix& weight, const Vector& bias) {
    return (x * weight).rowwise() + bias.transpose();
}

Matrix ffn_block(const LayerWeights& lw, const Matrix& x) {
    Matrix normed = layer_norm(x, lw.ffn_norm_scale, lw.ffn_norm_shift, kLayerNormEps);
    Matrix up = project(normed, lw.ffn_up_weight, lw.ffn_up_bias);
    return project(up.unaryExpr([](double v) { return gelu(v); }), lw.ffn_down_weight,
                   lw.ffn_down_bias);
}

// Applies per-head maps to the recorded value heads and projects the
// concatenation; shared by the forward pass, the decomposition, and the
// variant attention so all three agree bit-for-bit.
Matrix project_heads(const LayerWeights& lw, const std::vector<Matrix>& attention,
                     const std::vector<Matrix>& values) {
    const Index heads = static_cast<Index>(attention.size());
    const Index tokens = attention.front().rows();
    const Index head_dim = values.front().cols();
    Matrix context(tokens, heads * head_dim);
    for (Index h = 0; h < heads; ++h)
        context.middleCols(h * head_dim, head_dim) = attention[h] * values[h];
    return project(context, lw.out_weight, lw.out_bias);
}

void check_trace(const EncoderWeights& weights, const EncoderTrace& trace, const char* what) {
    if (!(weights.config == trace.config))
        throw ConsistencyError(std::string(what) + ": weights and trace were built from different configs");
    const std::size_t layers = static_cast<std::size_t>(trace.config.num_layers);
    if (trace.layers.size() != layers || trace.hidden.size() != layers + 1)
        throw ConsistencyError(std::string(what) + ": trace does not cover " +
                               std::to_string(trace.config.num_layers) + " layers");
    if (weights.layers.size() != layers)
        throw ConsistencyError(std::string(what) + ": weights hold " +
                               std::to_string(weights.layers.size()) + " layers, config says " +
                               std::to_string(trace.config.num_layers));
}

}  // namespace

void EncoderConfig::validate() const {
    if (num_layers < 1)
        throw ConfigError("num_layers must be positive, got " + std::to_string(num_layers));
    if (num_heads < 1)
        throw ConfigError("num_heads must be positive, got " + std::to_string(num_heads));
    if (embed_dim < 1)
        throw ConfigError("embed_dim must be positive, got " + std::to_string(embed_dim));
    if (ffn_dim < 1)
        throw ConfigError("ffn_dim must be positive, got " + std::to_string(ffn_dim));
    if (num_patches < 1)
        throw ConfigError("num_patches must be positive, got " + std::to_string(num_patches));
    if (embed_dim % num_heads != 0)
        throw ConfigError("embed_dim " + std::to_string(embed_dim) +
                          " is not divisible by num_heads " + std::to_string(num_heads));
}

EncoderWeights init_encoder(const EncoderConfig& config) {
    config.validate();
    std::mt19937_64 gen(config.seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.embed_dim));
    const Index d = config.embed_dim;
    const Index f = config.ffn_dim;

    EncoderWeights weights;
    weights.config = config;
    weights.layers.resize(static_cast<std::size_t>(config.num_layers));
    for (auto& lw : weights.layers) {
        lw.attn_norm_scale = Vector::Ones(d);
        lw.attn_norm_shift = Vector::Zero(d);
        lw.query_weight.resize(d, d);
        fill_uniform(lw.query_weight, gen, bound);
        lw.query_bias.resize(d);
        fill_uniform(lw.query_bias, gen, bound);
        lw.key_weight.resize(d, d);
        fill_uniform(lw.key_weight, gen, bound);
        lw.key_bias.resize(d);
        fill_uniform(lw.key_bias, gen, bound);
        lw.value_weight.resize(d, d);
        fill_uniform(lw.value_weight, gen, bound);
        lw.value_bias.resize(d);
        fill_uniform(lw.value_bias, gen, bound);
        lw.out_weight.resize(d, d);
        fill_uniform(lw.out_weight, gen, bound);
        lw.out_bias.resize(d);
        fill_uniform(lw.out_bias, gen, bound);
        lw.ffn_norm_scale = Vector::Ones(d);
        lw.ffn_norm_shift = Vector::Zero(d);
        lw.ffn_up_weight.resize(d, f);
        fill_uniform(lw.ffn_up_weight, gen, bound);
        lw.ffn_up_bias.resize(f);
        fill_uniform(lw.ffn_up_bias, gen, bound);
        lw.ffn_down_weight.resize(f, d);
        fill_uniform(lw.ffn_down_weight, gen, bound);
        lw.ffn_down_bias.resize(d);
        fill_uniform(lw.ffn_down_bias, gen, bound);
    }
    return weights;
}

EncoderWeights zero_encoder(const EncoderConfig& config) {
    config.validate();
    const Index d = config.embed_dim;
    const Index f = config.ffn_dim;

    EncoderWeights weights;
    weights.config = config;
    weights.layers.resize(static_cast<std::size_t>(config.num_layers));
    for (auto& lw : weights.layers) {
        lw.attn_norm_scale = Vector::Zero(d);
        lw.attn_norm_shift = Vector::Zero(d);
        lw.query_weight = Matrix::Zero(d, d);
        lw.query_bias = Vector::Zero(d);
        lw.key_weight = Matrix::Zero(d, d);
        lw.key_bias = Vector::Zero(d);
        lw.value_weight = Matrix::Zero(d, d);
        lw.value_bias = Vector::Zero(d);
        lw.out_weight = Matrix::Zero(d, d);
        lw.out_bias = Vector::Zero(d);
        lw.ffn_norm_scale = Vector::Zero(d);
        lw.ffn_norm_shift = Vector::Zero(d);
        lw.ffn_up_weight = Matrix::Zero(d, f);
        lw.ffn_up_bias = Vector::Zero(f);
        lw.ffn_down_weight = Matrix::Zero(f, d);
        lw.ffn_down_bias = Vector::Zero(d);
    }
    return weights;
}

EncoderTrace forward(const EncoderWeights& weights, const Matrix& input) {
    const EncoderConfig& config = weights.config;
    config.validate();
    if (input.rows() != config.token_count() || input.cols() != config.embed_dim)
        throw ShapeError("encoder input is " + shape_str(input) + ", expected " +
                         std::to_string(config.token_count()) + "x" +
                         std::to_string(config.embed_dim));
    if (weights.layers.size() != static_cast<std::size_t>(config.num_layers))
        throw ConsistencyError("forward: weights hold " + std::to_string(weights.layers.size()) +
                               " layers, config says " + std::to_string(config.num_layers));

    const Index dh = config.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    EncoderTrace trace;
    trace.config = config;
    trace.hidden.reserve(static_cast<std::size_t>(config.num_layers) + 1);
    trace.hidden.push_back(input);
    trace.layers.resize(static_cast<std::size_t>(config.num_layers));

    for (Index l = 0; l < config.num_layers; ++l) {
        const LayerWeights& lw = weights.layers[static_cast<std::size_t>(l)];
        LayerTrace& lt = trace.layers[static_cast<std::size_t>(l)];
        const Matrix& x = trace.hidden.back();

        Matrix normed = layer_norm(x, lw.attn_norm_scale, lw.attn_norm_shift, kLayerNormEps);
        Matrix queries = project(normed, lw.query_weight, lw.query_bias);
        Matrix keys = project(normed, lw.key_weight, lw.key_bias);
        Matrix values = project(normed, lw.value_weight, lw.value_bias);

        for (Index h = 0; h < config.num_heads; ++h) {
            lt.queries.push_back(queries.middleCols(h * dh, dh));
            lt.keys.push_back(keys.middleCols(h * dh, dh));
            lt.values.push_back(values.middleCols(h * dh, dh));
            lt.attention.push_back(row_softmax(Matrix(lt.queries[static_cast<std::size_t>(h)] *
                                                      lt.keys[static_cast<std::size_t>(h)].transpose() *
                                                      scale)));
        }

        Matrix attended = x + project_heads(lw, lt.attention, lt.values);
        trace.hidden.push_back(attended + ffn_block(lw, attended));
    }
    return trace;
}

Decomposition decompose_last_layer(const EncoderWeights& weights, const EncoderTrace& trace) {
    check_trace(weights, trace, "decompose_last_layer");
    const LayerWeights& lw = weights.layers.back();
    const LayerTrace& lt = trace.layers.back();

    Decomposition out;
    out.residual = trace.hidden[trace.hidden.size() - 2];
    out.attention = project_heads(lw, lt.attention, lt.values);
    Matrix attended = out.residual + out.attention;
    out.reconstruction = attended + ffn_block(lw, attended);
    return out;
}

AttentionVariant variant_from_string(std::string_view name) {
    if (name == "qkv") return AttentionVariant::QKV;
    if (name == "qqv") return AttentionVariant::QQV;
    if (name == "vvv") return AttentionVariant::VVV;
    if (name == "kkv") return AttentionVariant::KKV;
    throw ConfigError("unknown attention variant '" + std::string(name) +
                      "', expected qkv, qqv, vvv or kkv");
}

std::string to_string(AttentionVariant variant) {
    switch (variant) {
        case AttentionVariant::QKV: return "qkv";
        case AttentionVariant::QQV: return "qqv";
        case AttentionVariant::VVV: return "vvv";
        case AttentionVariant::KKV: return "kkv";
    }
    throw ConfigError("unknown attention variant value " +
                      std::to_string(static_cast<int>(variant)));
}

std::vector<Matrix> decoupled_logits(const EncoderWeights& weights, const EncoderTrace& trace,
                                     AttentionVariant variant) {
    check_trace(weights, trace, "decoupled_logits");
    const LayerTrace& lt = trace.layers.back();
    const double scale = 1.0 / std::sqrt(static_cast<double>(trace.config.head_dim()));

    std::vector<Matrix> logits;
    logits.reserve(lt.values.size());
    for (std::size_t h = 0; h < lt.values.size(); ++h) {
        const Matrix* lhs = nullptr;
        const Matrix* rhs = nullptr;
        switch (variant) {
            case AttentionVariant::QKV: lhs = &lt.queries[h]; rhs = &lt.keys[h]; break;
            case AttentionVariant::QQV: lhs = &lt.queries[h]; rhs = &lt.queries[h]; break;
            case AttentionVariant::VVV: lhs = &lt.values[h]; rhs = &lt.values[h]; break;
            case AttentionVariant::KKV: lhs = &lt.keys[h]; rhs = &lt.keys[h]; break;
        }
        logits.push_back(*lhs * rhs->transpose() * scale);
    }
    return logits;
}

Matrix decoupled_attention(const EncoderWeights& weights, const EncoderTrace& trace,
                           AttentionVariant variant) {
    std::vector<Matrix> maps = decoupled_logits(weights, trace, variant);
    for (Matrix& m : maps) m = row_softmax(m);
    return project_heads(weights.layers.back(), maps, trace.layers.back().values);
}

Vector cls_saliency(const EncoderTrace& trace) {
    if (trace.layers.empty())
        throw ConsistencyError("cls_saliency: trace has no recorded layers");
    const LayerTrace& lt = trace.layers.back();
    if (lt.attention.empty())
        throw ConsistencyError("cls_saliency: last layer has no attention heads");

    Matrix mean = Matrix::Zero(lt.attention.front().rows(), lt.attention.front().cols());
    for (const Matrix& head : lt.attention) mean += head;
    mean /= static_cast<double>(lt.attention.size());

    if (trace.config.has_cls)
        return mean.row(0).segment(1, mean.cols() - 1).transpose();
    return mean.colwise().mean().transpose();
}

}  // namespace desap
