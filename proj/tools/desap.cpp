// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Every subcommand stages its outputs in memory and
// only touches the filesystem once the whole computation has succeeded, via
// write-to-temp-then-rename, so a failing run leaves no partial files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "desap/alignment.hpp"
#include "desap/encoder.hpp"
#include "desap/flops.hpp"
#include "desap/heatmap.hpp"
#include "desap/pruning.hpp"
#include "desap/run_config.hpp"
#include "desap/tensor_io.hpp"
#include "desap/types.hpp"

namespace fs = std::filesystem;
using namespace desap;

namespace {

void atomic_write(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw Error("short write to '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

// Collects (name, bytes) pairs and writes them all at once; if any write
// fails the files of this run that already landed are removed again.
class OutputStager {
public:
    explicit OutputStager(fs::path dir) : m_dir(std::move(dir)) {}

    void add(const std::string& name, std::string bytes) {
        m_staged.emplace_back(name, std::move(bytes));
    }

    void commit() const {
        fs::create_directories(m_dir);
        std::vector<fs::path> written;
        try {
            for (const auto& [name, bytes] : m_staged) {
                fs::path target = m_dir / name;
                atomic_write(target, bytes);
                written.push_back(target);
            }
        } catch (...) {
            for (const fs::path& p : written) {
                std::error_code ignored;
                fs::remove(p, ignored);
            }
            throw;
        }
        for (const fs::path& p : written) std::cout << "wrote " << p.string() << "\n";
    }

private:
    fs::path m_dir;
    std::vector<std::pair<std::string, std::string>> m_staged;
};

struct ForwardRun {
    RunConfig config;
    EncoderWeights weights;
    EncoderTrace trace;
};

ForwardRun run_forward(const std::string& config_path) {
    ForwardRun run;
    run.config = load_run_config(config_path);
    run.weights = init_encoder(run.config.encoder);
    run.trace = forward(run.weights, resolve_visual_input(run.config));
    return run;
}

void cmd_encode(const std::string& config_path) {
    ForwardRun run = run_forward(config_path);
    OutputStager stage(run.config.output_dir);

    stage.add("final_hidden.dsap", encode_matrix(run.trace.final_hidden()));
    const LayerTrace& last = run.trace.layers.back();
    for (std::size_t h = 0; h < last.attention.size(); ++h)
        stage.add("attention_head" + std::to_string(h) + ".dsap",
                  encode_matrix(last.attention[h]));
    for (AttentionVariant variant : {AttentionVariant::QKV, AttentionVariant::QQV,
                                     AttentionVariant::VVV, AttentionVariant::KKV})
        stage.add("decoupled_" + to_string(variant) + ".dsap",
                  encode_matrix(decoupled_attention(run.weights, run.trace, variant)));
    stage.commit();
}

void cmd_decompose(const std::string& config_path) {
    ForwardRun run = run_forward(config_path);
    Decomposition parts = decompose_last_layer(run.weights, run.trace);
    double max_error = (parts.reconstruction - run.trace.final_hidden()).cwiseAbs().maxCoeff();

    char line[64];
    std::snprintf(line, sizeof(line), "max_reconstruction_error=%.17g\n", max_error);

    OutputStager stage(run.config.output_dir);
    stage.add("residual_component.dsap", encode_matrix(parts.residual));
    stage.add("attention_component.dsap", encode_matrix(parts.attention));
    stage.add("reconstruction.dsap", encode_matrix(parts.reconstruction));
    stage.add("decompose_report.txt", line);
    stage.commit();
}

void cmd_align(const std::string& config_path) {
    ForwardRun run = run_forward(config_path);
    TextEmbedding text = resolve_text(run.config);
    Matrix variant_attention = decoupled_attention(run.weights, run.trace, run.config.variant);
    std::optional<Index> cls_row =
        run.config.encoder.has_cls ? std::optional<Index>(0) : std::nullopt;
    AlignmentResult result =
        decoupled_similarity(variant_attention, text, cls_row, run.config.sharpness);

    OutputStager stage(run.config.output_dir);
    stage.add("token_similarity.dsap", encode_matrix(result.similarity));
    stage.add("visual_alignment.dsap", encode_matrix(result.visual_alignment));
    stage.add("text_alignment.dsap", encode_matrix(result.text_alignment));
    stage.add("task_map.dsap", encode_vector(result.task_map));
    stage.add("vanilla_similarity.dsap",
              encode_vector(vanilla_similarity(run.trace.final_hidden(), text)));
    stage.commit();
}

void cmd_prune(const std::string& config_path) {
    ForwardRun run = run_forward(config_path);
    TextEmbedding text = resolve_text(run.config);

    PruneParams params;
    params.variant = run.config.variant;
    params.sharpness = run.config.sharpness;
    params.split = run.config.split;
    params.total_keep = run.config.total_keep;
    PruneResult result = prune_pipeline(run.trace, run.weights, text, params);

    std::string retained_text;
    for (Index i : result.retained) retained_text += std::to_string(i) + "\n";
    std::string assignment_text;
    for (const auto& [discarded, center] : result.assignment)
        assignment_text += std::to_string(discarded) + " -> " + std::to_string(center) + "\n";

    auto [rows, cols] = (run.config.grid_rows > 0 && run.config.grid_cols > 0)
        ? std::pair<Index, Index>(run.config.grid_rows, run.config.grid_cols)
        : auto_grid(run.config.encoder.num_patches);

    OutputStager stage(run.config.output_dir);
    stage.add("retained_indices.txt", retained_text);
    stage.add("assignment.txt", assignment_text);
    stage.add("merged_tokens.dsap", encode_matrix(result.merged_tokens));
    stage.add("task_map.dsap", encode_vector(result.task_scores));
    stage.add("saliency_map.dsap", encode_vector(result.saliency_scores));
    stage.add("task_map.pgm", render_pgm(result.task_scores, rows, cols));
    stage.add("saliency_map.pgm", render_pgm(result.saliency_scores, rows, cols));
    stage.commit();

    std::cout << "kept " << result.retained.size() << " of " << run.config.encoder.num_patches
              << " patch tokens\n";
}

void cmd_flops(const std::string& preset, std::uint64_t layers, std::uint64_t hidden,
               std::uint64_t ffn, std::uint64_t tokens, std::uint64_t post_tokens) {
    ModelDims dims = preset.empty() ? ModelDims{layers, hidden, ffn} : preset_dims(preset);

    std::uint64_t total = total_flops(uniform_schedule(tokens, dims.num_layers), dims);
    std::uint64_t post = total_flops(uniform_schedule(post_tokens, dims.num_layers), dims);
    FlopsReport report = make_report(total, post);

    // The display-rounded ratio is undefined when the baseline itself rounds
    // to 0.00 T; the exact ratio above still stands, so report NaN here
    // instead of failing the whole command.
    double reported = std::numeric_limits<double>::quiet_NaN();
    try {
        reported = reported_reduction_ratio(total, post);
    } catch (const DivisionError&) {
    }

    std::printf("%-22s %20llu  (%s T)\n", "total FLOPs",
                static_cast<unsigned long long>(report.total), format_tflops(total).c_str());
    std::printf("%-22s %20llu  (%s T)\n", "post-pruning FLOPs",
                static_cast<unsigned long long>(report.post_pruning),
                format_tflops(post).c_str());
    std::printf("%-22s %20.6f\n", "reduction ratio", report.reduction_ratio);
    std::printf("%-22s %20.6f\n", "reduction (2-dec T)", reported);
    std::printf("%-22s %19.2fx\n", "speedup", report.speedup);

    std::printf("total_flops=%llu\n", static_cast<unsigned long long>(report.total));
    std::printf("post_flops=%llu\n", static_cast<unsigned long long>(report.post_pruning));
    std::printf("total_tflops=%s\n", format_tflops(total).c_str());
    std::printf("post_tflops=%s\n", format_tflops(post).c_str());
    std::printf("reduction_ratio=%.17g\n", report.reduction_ratio);
    std::printf("reduction_ratio_reported=%.17g\n", reported);
    std::printf("speedup=%.17g\n", report.speedup);
}

void cmd_heatmap(const std::string& input, const std::string& grid, const std::string& output) {
    TensorFile tensor = read_tensor_file(input);
    Vector scores;
    if (tensor.rank() == 1) {
        scores = tensor.as_vector();
    } else if (tensor.rank() == 2) {
        Matrix m = tensor.as_matrix();
        scores = Vector(m.size());
        for (Index r = 0; r < m.rows(); ++r)
            for (Index c = 0; c < m.cols(); ++c)
                scores(r * m.cols() + c) = m(r, c);
    } else {
        throw ShapeError("heatmap input must be rank 1 or 2, got rank " +
                         std::to_string(tensor.rank()));
    }

    auto parse_side = [&grid](const std::string& part) {
        std::size_t used = 0;
        long long value = 0;
        try {
            value = std::stoll(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size() || part.empty())
            throw ConfigError("grid must look like HxW, got '" + grid + "'");
        return static_cast<Index>(value);
    };
    std::size_t cross = grid.find('x');
    if (cross == std::string::npos)
        throw ConfigError("grid must look like HxW, got '" + grid + "'");
    Index rows = parse_side(grid.substr(0, cross));
    Index cols = parse_side(grid.substr(cross + 1));

    atomic_write(output, render_pgm(scores, rows, cols));
    std::cout << "wrote " << output << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"decoupled-similarity token pruning toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string preset;
    std::uint64_t layers = 1, hidden = 1, ffn = 1, tokens = 0, post_tokens = 0;
    std::string heatmap_in, heatmap_grid, heatmap_out;

    CLI::App* encode = app.add_subcommand("encode", "run the toy encoder, dump trace tensors");
    encode->add_option("--config", config_path, "run config path")->required();

    CLI::App* decompose =
        app.add_subcommand("decompose", "split the final hidden state and verify it");
    decompose->add_option("--config", config_path, "run config path")->required();

    CLI::App* align = app.add_subcommand("align", "cross-modal alignment maps");
    align->add_option("--config", config_path, "run config path")->required();

    CLI::App* prune = app.add_subcommand("prune", "dual-source prune and merge");
    prune->add_option("--config", config_path, "run config path")->required();

    CLI::App* flops = app.add_subcommand("flops", "prefill cost model");
    flops->add_option("--preset", preset, "model preset, e.g. llava15-7b");
    flops->add_option("--layers", layers, "layer count (ignored with --preset)");
    flops->add_option("--hidden", hidden, "hidden dim (ignored with --preset)");
    flops->add_option("--ffn", ffn, "FFN dim (ignored with --preset)");
    flops->add_option("--tokens", tokens, "visual tokens before pruning")->required();
    flops->add_option("--post", post_tokens, "visual tokens after pruning")->required();

    CLI::App* heatmap = app.add_subcommand("heatmap", "render a score tensor as PGM");
    heatmap->add_option("--in", heatmap_in, "score tensor path")->required();
    heatmap->add_option("--grid", heatmap_grid, "grid as HxW")->required();
    heatmap->add_option("--out", heatmap_out, "output PGM path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (encode->parsed()) cmd_encode(config_path);
        if (decompose->parsed()) cmd_decompose(config_path);
        if (align->parsed()) cmd_align(config_path);
        if (prune->parsed()) cmd_prune(config_path);
        if (flops->parsed()) cmd_flops(preset, layers, hidden, ffn, tokens, post_tokens);
        if (heatmap->parsed()) cmd_heatmap(heatmap_in, heatmap_grid, heatmap_out);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
