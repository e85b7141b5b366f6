// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0

#include "desap/run_config.hpp"

#include <cstddef>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "desap/rng.hpp"
#include "desap/tensor_io.hpp"

namespace desap {
namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long parsed = 0;
    try {
        parsed = std::stoll(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
    }
    if (used != value.size())
        throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
    return parsed;
}

double parse_real(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
    }
    if (used != value.size())
        throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
    return parsed;
}

bool parse_flag(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "' expects true/false, got '" + value + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig config;
    std::set<std::string> seen;
    std::istringstream stream(text);
    std::string line;

    while (std::getline(stream, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line is not key=value: '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line has an empty key: '" + line + "'");
        if (!seen.insert(key).second)
            throw ConfigError("duplicate config key '" + key + "'");

        if (key == "num_layers") config.encoder.num_layers = parse_int(key, value);
        else if (key == "num_heads") config.encoder.num_heads = parse_int(key, value);
        else if (key == "embed_dim") config.encoder.embed_dim = parse_int(key, value);
        else if (key == "ffn_dim") config.encoder.ffn_dim = parse_int(key, value);
        else if (key == "num_patches") config.encoder.num_patches = parse_int(key, value);
        else if (key == "has_cls") config.encoder.has_cls = parse_flag(key, value);
        else if (key == "seed")
            config.encoder.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "variant") config.variant = variant_from_string(value);
        else if (key == "lambda") config.sharpness = parse_real(key, value);
        else if (key == "split") config.split = parse_real(key, value);
        else if (key == "total_keep") config.total_keep = parse_int(key, value);
        else if (key == "num_text_tokens") config.num_text_tokens = parse_int(key, value);
        else if (key == "eos_index") config.eos_index = parse_int(key, value);
        else if (key == "visual_input") config.visual_input = value;
        else if (key == "text_embedding") config.text_embedding = value;
        else if (key == "output_dir") config.output_dir = value;
        else if (key == "grid_rows") config.grid_rows = parse_int(key, value);
        else if (key == "grid_cols") config.grid_cols = parse_int(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    }

    config.encoder.validate();
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

Matrix synthetic_visual_input(const EncoderConfig& config) {
    std::mt19937_64 gen(config.seed + 1);
    return uniform_matrix(config.token_count(), config.embed_dim, gen, -1.0, 1.0);
}

Matrix synthetic_text_matrix(const RunConfig& config) {
    if (config.num_text_tokens < 1)
        throw ConfigError("num_text_tokens must be positive, got " +
                          std::to_string(config.num_text_tokens));
    std::mt19937_64 gen(config.encoder.seed + 2);
    return uniform_matrix(config.num_text_tokens, config.encoder.embed_dim, gen, -1.0, 1.0);
}

TextEmbedding resolve_text(const RunConfig& config) {
    Matrix tokens = config.text_embedding.empty() ? synthetic_text_matrix(config)
                                                  : read_tensor(config.text_embedding);
    Index eos = config.eos_index < 0 ? tokens.rows() - 1 : config.eos_index;
    return TextEmbedding(std::move(tokens), eos);
}

Matrix resolve_visual_input(const RunConfig& config) {
    if (config.visual_input.empty()) return synthetic_visual_input(config.encoder);
    return read_tensor(config.visual_input);
}

}  // namespace desap
