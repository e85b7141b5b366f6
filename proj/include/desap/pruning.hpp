// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dual-source token pruning: split a keep budget between the task-relevance
// ranking and the saliency ranking, take the top slice of each (the second
// over the complement of the first), then fold every discarded token into
// its most similar retained center by unweighted averaging.

#ifndef DESAP_PRUNING_HPP
#define DESAP_PRUNING_HPP

#include <map>
#include <utility>

#include "desap/alignment.hpp"
#include "desap/encoder.hpp"
#include "desap/types.hpp"

namespace desap {

struct PruneBudget {
    Index total_keep = 0;
    Index task_keep = 0;      // slice ranked by the task map
    Index saliency_keep = 0;  // slice ranked by saliency over the rest
    double split = 0.5;       // fraction of the budget given to the task branch
};

// Splits total_keep between the two branches: the task branch gets
// round-half-up(split * total_keep), the saliency branch the remainder.
PruneBudget allocate_budget(Index total_keep, double split, Index num_patches);

// Top task_keep indices of the task scores, then the top saliency_keep
// saliency indices among the remaining tokens. The sets are disjoint and
// their sizes always sum to the full budget.
std::pair<IndexSet, IndexSet> dual_rank_prune(const Vector& task_scores,
                                              const Vector& saliency_scores,
                                              const PruneBudget& budget);

// Discarded token index -> retained center index.
using Assignment = std::map<Index, Index>;

// Clusters every non-retained row onto its highest-cosine retained center
// (ties take the lowest center index) and returns per-center unweighted
// means, ordered by ascending retained index, plus the cluster assignment.
std::pair<Matrix, Assignment> merge_tokens(const Matrix& tokens, const IndexSet& retained);

struct PruneParams {
    AttentionVariant variant = AttentionVariant::QQV;
    double sharpness = kDefaultSharpness;
    double split = 0.5;
    Index total_keep = 0;
};

struct PruneResult {
    IndexSet task_set;
    IndexSet saliency_set;
    IndexSet retained;        // union of the two, ascending
    Assignment assignment;
    Matrix merged_tokens;     // total_keep x embed_dim
    // The two ranking signals, one entry per patch token, kept for
    // serialization and inspection.
    Vector task_scores;
    Vector saliency_scores;
};

// Full pruning pass over one encoded image/text pair. Scores patches with
// the variant-attention alignment map and the class-token saliency, selects
// the dual-ranked keep set, and merges the final hidden state's patch rows.
// The class token itself is never a candidate and never forwarded.
PruneResult prune_pipeline(const EncoderTrace& trace, const EncoderWeights& weights,
                           const TextEmbedding& text, const PruneParams& params);

}  // namespace desap

#endif  // DESAP_PRUNING_HPP
