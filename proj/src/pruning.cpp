// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0

#include "desap/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "desap/kernels.hpp"

namespace desap {

PruneBudget allocate_budget(Index total_keep, double split, Index num_patches) {
    if (split < 0.0 || split > 1.0)
        throw ConfigError("branch split must lie in [0, 1], got " + std::to_string(split));
    if (total_keep < 0)
        throw BudgetError("keep budget must be nonnegative, got " + std::to_string(total_keep));
    if (total_keep > num_patches)
        throw BudgetError("keep budget " + std::to_string(total_keep) + " exceeds the " +
                          std::to_string(num_patches) + " prunable tokens");

    PruneBudget budget;
    budget.total_keep = total_keep;
    budget.split = split;
    budget.task_keep = static_cast<Index>(
        std::floor(split * static_cast<double>(total_keep) + 0.5));
    budget.saliency_keep = total_keep - budget.task_keep;
    return budget;
}

std::pair<IndexSet, IndexSet> dual_rank_prune(const Vector& task_scores,
                                              const Vector& saliency_scores,
                                              const PruneBudget& budget) {
    const Index n = task_scores.size();
    if (saliency_scores.size() != n)
        throw ShapeError("score vectors disagree: " + std::to_string(n) + " task entries vs " +
                         std::to_string(saliency_scores.size()) + " saliency entries");
    if (budget.task_keep < 0 || budget.saliency_keep < 0 ||
        budget.task_keep + budget.saliency_keep != budget.total_keep)
        throw BudgetError("inconsistent budget: " + std::to_string(budget.task_keep) + " + " +
                          std::to_string(budget.saliency_keep) + " != " +
                          std::to_string(budget.total_keep));
    if (budget.total_keep > n)
        throw BudgetError("keep budget " + std::to_string(budget.total_keep) + " exceeds the " +
                          std::to_string(n) + " scored tokens");

    IndexSet task_set = top_k_indices(task_scores, budget.task_keep);

    // Rank the complement by saliency; positions stay ascending, so ties
    // still resolve to the lowest original index.
    std::vector<Index> rest;
    rest.reserve(static_cast<std::size_t>(n - task_set.size()));
    for (Index i = 0; i < n; ++i)
        if (!task_set.contains(i)) rest.push_back(i);

    Vector rest_scores(static_cast<Index>(rest.size()));
    for (std::size_t p = 0; p < rest.size(); ++p)
        rest_scores(static_cast<Index>(p)) = saliency_scores(rest[p]);

    IndexSet picked = top_k_indices(rest_scores, budget.saliency_keep);
    std::vector<Index> saliency_indices;
    saliency_indices.reserve(static_cast<std::size_t>(picked.size()));
    for (Index p : picked) saliency_indices.push_back(rest[static_cast<std::size_t>(p)]);

    return {std::move(task_set), IndexSet(std::move(saliency_indices))};
}

std::pair<Matrix, Assignment> merge_tokens(const Matrix& tokens, const IndexSet& retained) {
    if (retained.empty())
        throw BudgetError("token merge needs at least one retained center");
    retained.check_bound(tokens.rows(), "retained center");

    std::vector<Index> centers(retained.begin(), retained.end());
    Matrix center_rows(static_cast<Index>(centers.size()), tokens.cols());
    for (std::size_t c = 0; c < centers.size(); ++c)
        center_rows.row(static_cast<Index>(c)) = tokens.row(centers[c]);

    Assignment assignment;
    std::vector<std::vector<Index>> assignees(centers.size());
    for (Index u = 0; u < tokens.rows(); ++u) {
        if (retained.contains(u)) continue;
        Matrix sims = cosine_sim_matrix(Matrix(tokens.row(u)), center_rows);
        Index best = 0;
        for (Index c = 1; c < sims.cols(); ++c)
            if (sims(0, c) > sims(0, best)) best = c;
        assignment[u] = centers[static_cast<std::size_t>(best)];
        assignees[static_cast<std::size_t>(best)].push_back(u);
    }

    Matrix merged(static_cast<Index>(centers.size()), tokens.cols());
    for (std::size_t c = 0; c < centers.size(); ++c) {
        Vector sum = tokens.row(centers[c]).transpose();
        for (Index u : assignees[c]) sum += tokens.row(u).transpose();
        merged.row(static_cast<Index>(c)) =
            sum.transpose() / static_cast<double>(1 + assignees[c].size());
    }
    return {std::move(merged), std::move(assignment)};
}

PruneResult prune_pipeline(const EncoderTrace& trace, const EncoderWeights& weights,
                           const TextEmbedding& text, const PruneParams& params) {
    const EncoderConfig& cfg = trace.config;
    const Index patches = cfg.num_patches;

    Matrix variant_attention = decoupled_attention(weights, trace, params.variant);
    std::optional<Index> cls_row = cfg.has_cls ? std::optional<Index>(0) : std::nullopt;
    AlignmentResult alignment =
        decoupled_similarity(variant_attention, text, cls_row, params.sharpness);

    PruneResult out;
    out.task_scores = cfg.has_cls
        ? Vector(alignment.task_map.segment(1, patches))
        : alignment.task_map;
    out.saliency_scores = cls_saliency(trace);

    PruneBudget budget = allocate_budget(params.total_keep, params.split, patches);
    std::tie(out.task_set, out.saliency_set) =
        dual_rank_prune(out.task_scores, out.saliency_scores, budget);

    std::vector<Index> merged_indices;
    merged_indices.reserve(static_cast<std::size_t>(budget.total_keep));
    std::merge(out.task_set.begin(), out.task_set.end(), out.saliency_set.begin(),
               out.saliency_set.end(), std::back_inserter(merged_indices));
    out.retained = IndexSet(std::move(merged_indices));

    const Matrix& final_hidden = trace.final_hidden();
    Matrix patch_rows = cfg.has_cls
        ? Matrix(final_hidden.bottomRows(patches))
        : final_hidden;
    std::tie(out.merged_tokens, out.assignment) = merge_tokens(patch_rows, out.retained);
    return out;
}

}  // namespace desap
