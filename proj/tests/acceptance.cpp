// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gates for the pruning toolkit. Each numbered check prints one
// PASS/FAIL line with the quantities it measured and its runtime; the binary
// exits nonzero if any gate fails. The checks restate the project's headline
// guarantees: exact cost-model totals, the decomposition and normalization
// identities, oracle-exact pruning and merging, determinism of the CLI, and
// the dual-guidance keep-set behavior.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "desap/alignment.hpp"
#include "desap/encoder.hpp"
#include "desap/flops.hpp"
#include "desap/pruning.hpp"
#include "desap/rng.hpp"
#include "desap/types.hpp"
#include "oracles.hpp"

using namespace desap;
namespace fs = std::filesystem;

namespace {

std::string fmt(const char* pattern, ...) {
    char buffer[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buffer, sizeof(buffer), pattern, args);
    va_end(args);
    return buffer;
}

struct Gate {
    bool ok = true;
    std::string detail;

    void require(bool condition, const std::string& message) {
        if (!condition) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += message;
        }
    }
};

// Random toy encoder within the acceptance envelope: up to 4 layers, up to
// 4 heads, embedding dim at most 32, at most 16 patches.
EncoderConfig random_config(std::mt19937_64& rng) {
    EncoderConfig config;
    config.num_layers = static_cast<Index>(1 + rng() % 4);
    config.num_heads = static_cast<Index>(1 + rng() % 4);
    Index max_head_dim = 32 / config.num_heads;
    config.embed_dim = config.num_heads * static_cast<Index>(1 + rng() % max_head_dim);
    config.ffn_dim = static_cast<Index>(1 + rng() % 48);
    config.num_patches = static_cast<Index>(1 + rng() % 16);
    config.has_cls = (rng() % 2) == 0;
    config.seed = rng();
    return config;
}

Vector random_scores(Index n, std::mt19937_64& rng, bool gridded) {
    Vector scores(n);
    for (Index i = 0; i < n; ++i) {
        double value = uniform01(rng);
        scores(i) = gridded ? std::floor(value * 4.0) * 0.25 : value;
    }
    return scores;
}

int run_cli(const fs::path& cwd, const std::string& args) {
    std::string command = "cd '" + cwd.string() + "' && '" + DESAP_CLI_PATH + "' " + args +
                          " > cli_stdout.log 2> cli_stderr.log";
    int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::optional<std::string> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// --- the nine gates ---------------------------------------------------

Gate check_cost_model_totals() {
    Gate gate;
    ModelDims dims = preset_dims("llava15-7b");
    std::uint64_t total = total_flops(uniform_schedule(576, dims.num_layers), dims);
    std::uint64_t post = total_flops(uniform_schedule(64, dims.num_layers), dims);

    gate.require(total == 3'817'152'184'320ULL, fmt("total was %llu", (unsigned long long)total));
    gate.require(post == 415'538'085'888ULL, fmt("post was %llu", (unsigned long long)post));
    gate.require(format_tflops(total) == "3.82",
                 "total formatted as " + format_tflops(total) + " T");
    gate.require(format_tflops(post) == "0.42",
                 "post formatted as " + format_tflops(post) + " T");

    double reported = reported_reduction_ratio(total, post);
    gate.require(reported >= 0.889 && reported <= 0.891,
                 fmt("reduction at 2-decimal rounding was %.6f", reported));
    if (gate.ok)
        gate.detail = fmt("3.82 T -> 0.42 T, reduction %.6f at 2-decimal rounding (%.6f exact)",
                          reported, reduction_ratio(total, post));
    return gate;
}

Gate check_alignment_overhead() {
    Gate gate;
    std::uint64_t overhead = alignment_overhead_flops(576, 30, 768);
    ModelDims dims = preset_dims("llava15-7b");
    std::uint64_t post = total_flops(uniform_schedule(64, dims.num_layers), dims);
    double ratio = static_cast<double>(overhead) / static_cast<double>(post);

    gate.require(overhead >= 26'000'000ULL && overhead <= 28'000'000ULL,
                 fmt("overhead was %llu", (unsigned long long)overhead));
    gate.require(ratio < 1e-4, fmt("overhead/post ratio was %.3g", ratio));
    if (gate.ok)
        gate.detail = fmt("%llu extra FLOPs, %.3g of the post-pruning total",
                          (unsigned long long)overhead, ratio);
    return gate;
}

Gate check_decomposition_identity() {
    Gate gate;
    std::mt19937_64 rng(301);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        EncoderConfig config = random_config(rng);
        EncoderWeights weights = init_encoder(config);
        Matrix input = uniform_matrix(config.token_count(), config.embed_dim, rng, -1.0, 1.0);
        EncoderTrace trace = forward(weights, input);
        Decomposition parts = decompose_last_layer(weights, trace);
        double err = (parts.reconstruction - trace.final_hidden()).cwiseAbs().maxCoeff();
        if (err > worst) worst = err;
    }
    gate.require(worst < 1e-6, fmt("max reconstruction error %.3g", worst));
    if (gate.ok) gate.detail = fmt("100 random encoders, max reconstruction error %.3g", worst);
    return gate;
}

Gate check_normalization_identities() {
    Gate gate;
    std::mt19937_64 rng(401);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        Index d1 = static_cast<Index>(1 + rng() % 32);
        Index d2 = static_cast<Index>(1 + rng() % 16);
        Index dim = static_cast<Index>(1 + rng() % 8);
        Matrix visual = uniform_matrix(d1, dim, rng, -1.0, 1.0);
        TextEmbedding text(uniform_matrix(d2, dim, rng, -1.0, 1.0),
                           static_cast<Index>(rng() % static_cast<std::uint64_t>(d2)));
        std::optional<Index> cls_row =
            (rng() % 2) == 0 ? std::optional<Index>(0) : std::nullopt;
        double sharpness = 0.05 + uniform01(rng) * 5.0;

        Matrix similarity = token_similarity(visual, text);
        auto [visual_w, text_w] = representative_weights(visual, text, cls_row);
        auto [visual_map, text_map] =
            fine_grained_alignment(similarity, visual_w, text_w, sharpness);

        for (Index i = 0; i < d1; ++i) {
            double dev = std::abs(visual_map.row(i).sum() -
                                  visual_w(i) / static_cast<double>(d1));
            if (dev > worst) worst = dev;
        }
        for (Index j = 0; j < d2; ++j) {
            double dev = std::abs(text_map.col(j).sum() -
                                  text_w(j) / static_cast<double>(d2));
            if (dev > worst) worst = dev;
        }
    }
    gate.require(worst < 1e-9, fmt("max normalization deviation %.3g", worst));
    if (gate.ok) gate.detail = fmt("1000 random instances, max deviation %.3g", worst);
    return gate;
}

Gate check_pruning_oracle() {
    Gate gate;
    std::mt19937_64 rng(501);
    long dual_checks = 0;
    long merge_checks = 0;

    for (int pair_index = 0; pair_index < 500 && gate.ok; ++pair_index) {
        Index n = static_cast<Index>(1 + rng() % 8);
        bool gridded = (pair_index % 2) == 0;
        Vector task = random_scores(n, rng, gridded);
        Vector saliency = random_scores(n, rng, gridded);
        Matrix tokens = uniform_matrix(n, static_cast<Index>(1 + rng() % 6), rng, -1.0, 1.0);

        for (Index keep = 0; keep <= n && gate.ok; ++keep) {
            for (Index task_keep = 0; task_keep <= keep && gate.ok; ++task_keep) {
                PruneBudget budget{keep, task_keep, keep - task_keep, 0.5};
                auto [task_set, saliency_set] = dual_rank_prune(task, saliency, budget);
                auto [oracle_task, oracle_sal] =
                    oracles::dual_rank_by_sort(task, saliency, task_keep, keep - task_keep);
                ++dual_checks;

                gate.require(task_set.indices() == oracle_task, "task set diverged");
                gate.require(saliency_set.indices() == oracle_sal, "saliency set diverged");
                for (Index i : task_set)
                    gate.require(!saliency_set.contains(i), "sets overlap");
                gate.require(task_set.size() + saliency_set.size() == keep,
                             "keep-set size mismatch");

                if (keep == 0) continue;
                std::vector<Index> union_indices(task_set.begin(), task_set.end());
                union_indices.insert(union_indices.end(), saliency_set.begin(),
                                     saliency_set.end());
                std::sort(union_indices.begin(), union_indices.end());
                IndexSet retained(union_indices);

                auto [merged, assignment] = merge_tokens(tokens, retained);
                auto [oracle_merged, oracle_assignment] =
                    oracles::merge_by_scan(tokens, union_indices);
                ++merge_checks;
                gate.require(assignment == oracle_assignment, "cluster assignment diverged");
                gate.require(merged.rows() == oracle_merged.rows() &&
                                 (merged.array() == oracle_merged.array()).all(),
                             "merged rows diverged");
            }
        }
    }
    if (gate.ok)
        gate.detail = fmt("500 score pairs, %ld budget combinations, %ld merges, all exact",
                          dual_checks, merge_checks);
    return gate;
}

Gate check_mass_conservation() {
    Gate gate;
    std::mt19937_64 rng(601);
    double worst = 0.0;
    for (int trial = 0; trial < 250; ++trial) {
        Index n = static_cast<Index>(1 + rng() % 64);
        Matrix tokens = uniform_matrix(n, static_cast<Index>(1 + rng() % 12), rng, -1.0, 1.0);
        Index keep = static_cast<Index>(1 + rng() % static_cast<std::uint64_t>(n));
        PruneBudget budget = allocate_budget(keep, uniform01(rng), n);
        auto [task_set, saliency_set] =
            dual_rank_prune(random_scores(n, rng, false), random_scores(n, rng, false), budget);

        std::vector<Index> union_indices(task_set.begin(), task_set.end());
        union_indices.insert(union_indices.end(), saliency_set.begin(), saliency_set.end());
        std::sort(union_indices.begin(), union_indices.end());
        IndexSet retained(union_indices);
        auto [merged, assignment] = merge_tokens(tokens, retained);

        Vector recovered = Vector::Zero(tokens.cols());
        for (Index c = 0; c < retained.size(); ++c) {
            long members = 1;
            for (const auto& [discarded, center] : assignment)
                if (center == retained[c]) ++members;
            recovered += static_cast<double>(members) * merged.row(c).transpose();
        }
        Vector expected = tokens.colwise().sum().transpose();
        double dev = (recovered - expected).cwiseAbs().maxCoeff();
        if (dev > worst) worst = dev;
    }
    gate.require(worst < 1e-9, fmt("max mass deviation %.3g", worst));
    if (gate.ok) gate.detail = fmt("250 random instances up to 64 tokens, max deviation %.3g",
                                   worst);
    return gate;
}

Gate check_variant_consistency() {
    Gate gate;
    std::mt19937_64 rng(701);
    double worst_attention = 0.0;
    double worst_symmetry = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        EncoderConfig config = random_config(rng);
        EncoderWeights weights = init_encoder(config);
        Matrix input = uniform_matrix(config.token_count(), config.embed_dim, rng, -1.0, 1.0);
        EncoderTrace trace = forward(weights, input);

        Matrix qkv = decoupled_attention(weights, trace, AttentionVariant::QKV);
        Decomposition parts = decompose_last_layer(weights, trace);
        double attention_err = (qkv - parts.attention).cwiseAbs().maxCoeff();
        if (attention_err > worst_attention) worst_attention = attention_err;

        for (const Matrix& logits :
             decoupled_logits(weights, trace, AttentionVariant::QQV)) {
            double sym = (logits - logits.transpose()).cwiseAbs().maxCoeff();
            if (sym > worst_symmetry) worst_symmetry = sym;
        }
    }
    gate.require(worst_attention < 1e-9,
                 fmt("qkv vs attention component deviation %.3g", worst_attention));
    gate.require(worst_symmetry < 1e-9, fmt("qqv logit asymmetry %.3g", worst_symmetry));
    if (gate.ok)
        gate.detail = fmt("40 random encoders, qkv deviation %.3g, qqv asymmetry %.3g",
                          worst_attention, worst_symmetry);
    return gate;
}

Gate check_cli_determinism() {
    Gate gate;
    fs::path base = fs::temp_directory_path() / "desap_acceptance";
    fs::remove_all(base);
    fs::path first = base / "run1";
    fs::path second = base / "run2";
    fs::path identity = base / "identity";
    fs::create_directories(first);
    fs::create_directories(second);
    fs::create_directories(identity);

    std::string demo = std::string(DESAP_FIXTURE_DIR) + "/prune_demo.cfg";
    gate.require(run_cli(first, "prune --config '" + demo + "'") == 0, "first run failed");
    gate.require(run_cli(second, "prune --config '" + demo + "'") == 0, "second run failed");

    for (const char* name : {"retained_indices.txt", "assignment.txt", "merged_tokens.dsap",
                             "task_map.pgm", "saliency_map.pgm"}) {
        std::optional<std::string> a = read_bytes(first / "out" / name);
        std::optional<std::string> b = read_bytes(second / "out" / name);
        gate.require(a.has_value() && b.has_value(), std::string("missing output ") + name);
        if (a && b) gate.require(*a == *b, std::string("runs differ on ") + name);
    }

    std::string full = std::string(DESAP_FIXTURE_DIR) + "/prune_identity.cfg";
    gate.require(run_cli(identity, "prune --config '" + full + "'") == 0,
                 "full-budget run failed");
    std::string expected_indices;
    for (int i = 0; i < 16; ++i) expected_indices += std::to_string(i) + "\n";
    std::optional<std::string> retained = read_bytes(identity / "out/retained_indices.txt");
    std::optional<std::string> assignment = read_bytes(identity / "out/assignment.txt");
    gate.require(retained.has_value() && *retained == expected_indices,
                 "full budget did not retain every patch token");
    gate.require(assignment.has_value() && assignment->empty(),
                 "full budget produced cluster assignments");
    if (gate.ok)
        gate.detail = "two runs byte-identical on all five outputs; "
                      "full budget retains every patch token";
    return gate;
}

Gate check_dual_guidance() {
    Gate gate;
    Vector task(8), saliency(8);
    task << 0.9, 0.8, 0.1, 0.2, 0.15, 0.1, 0.18, 0.12;
    saliency << 0.1, 0.12, 0.15, 0.1, 0.2, 0.18, 0.8, 0.9;
    // Task scores peak on {0, 1}, saliency on the disjoint {6, 7}; the
    // top-1 positions are 0 and 7.

    auto retained_for = [&](double split, Index keep) {
        PruneBudget budget = allocate_budget(keep, split, task.size());
        auto [task_set, saliency_set] = dual_rank_prune(task, saliency, budget);
        std::vector<Index> all(task_set.begin(), task_set.end());
        all.insert(all.end(), saliency_set.begin(), saliency_set.end());
        std::sort(all.begin(), all.end());
        return all;
    };

    std::vector<Index> mixed = retained_for(0.5, 2);
    gate.require(std::find(mixed.begin(), mixed.end(), 0) != mixed.end(),
                 "even split missed the top task token");
    gate.require(std::find(mixed.begin(), mixed.end(), 7) != mixed.end(),
                 "even split missed the top saliency token");

    gate.require(retained_for(0.0, 2) == std::vector<Index>({6, 7}),
                 "saliency-only split left its peak");
    gate.require(retained_for(1.0, 2) == std::vector<Index>({0, 1}),
                 "task-only split left its peak");
    gate.require(retained_for(0.5, 4) == std::vector<Index>({0, 1, 6, 7}),
                 "even split at budget 4 missed a peak");
    if (gate.ok)
        gate.detail = "even split keeps both top-1 tokens; pure splits keep only their own peak";
    return gate;
}

}  // namespace

int main() {
    struct Entry {
        int number;
        const char* name;
        double budget_seconds;
        Gate (*run)();
    };
    const Entry entries[] = {
        {1, "cost-model totals", 1.0, check_cost_model_totals},
        {2, "alignment overhead", 1.0, check_alignment_overhead},
        {3, "decomposition identity", 30.0, check_decomposition_identity},
        {4, "normalization identities", 10.0, check_normalization_identities},
        {5, "pruning oracle equivalence", 30.0, check_pruning_oracle},
        {6, "merge mass conservation", 10.0, check_mass_conservation},
        {7, "variant consistency", 10.0, check_variant_consistency},
        {8, "end-to-end determinism", 10.0, check_cli_determinism},
        {9, "dual-guidance behavior", 5.0, check_dual_guidance},
    };

    int failures = 0;
    for (const Entry& entry : entries) {
        auto start = std::chrono::steady_clock::now();
        Gate gate;
        try {
            gate = entry.run();
        } catch (const std::exception& err) {
            gate.ok = false;
            gate.detail = std::string("unexpected exception: ") + err.what();
        }
        double elapsed = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - start).count();
        if (elapsed >= entry.budget_seconds) {
            gate.ok = false;
            gate.detail += fmt(" [exceeded %.0f s budget]", entry.budget_seconds);
        }

        std::printf("%s criterion %d: %s - %s (%.2f s)\n", gate.ok ? "PASS" : "FAIL",
                    entry.number, entry.name, gate.detail.c_str(), elapsed);
        if (!gate.ok) ++failures;
    }

    if (failures == 0) {
        std::printf("acceptance: all 9 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d of 9 criteria FAILED\n", failures);
    return 1;
}
