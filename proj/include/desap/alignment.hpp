// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cross-modal token alignment. Starting from the attention component of the
// visual hidden state and a text embedding matrix, this module builds the
// token-pair cosine similarity matrix, weights it by each side's similarity
// to the other side's representative token, sharpens it with a temperature
// softmax in both directions, and averages over text positions to produce a
// per-visual-token task-relevance map.

#ifndef DESAP_ALIGNMENT_HPP
#define DESAP_ALIGNMENT_HPP

#include <optional>
#include <utility>
#include <vector>

#include "desap/types.hpp"

namespace desap {

// Default softmax temperature for the alignment sharpening.
inline constexpr double kDefaultSharpness = 0.1;

// Non-padded text token embeddings plus the position of the representative
// (end-of-sequence) token.
struct TextEmbedding {
    Matrix tokens;        // count x dim
    Index eos_index = 0;

    TextEmbedding(Matrix token_rows, Index eos);  // throws ConfigError / IndexError

    // Drops padded rows. keep must cover every row of padded, and the
    // representative row itself must be kept; eos is re-indexed to the
    // compacted matrix.
    static TextEmbedding from_padded(const Matrix& padded, const std::vector<bool>& keep,
                                     Index eos);

    Index count() const { return tokens.rows(); }
    Index dim() const { return tokens.cols(); }
};

// Cosine similarity between every visual row and every text row; both sides
// are L2-normalized first, so entries lie in [-1, 1]. Shape: visual x text.
Matrix token_similarity(const Matrix& visual, const TextEmbedding& text);

// Per-token weights against the other modality's representative: first the
// cosine of each visual row to the text EOS row, second the cosine of each
// text row to the visual representative. cls_row selects that representative;
// when absent the normalized mean of the normalized visual rows stands in.
std::pair<Vector, Vector> representative_weights(const Matrix& visual, const TextEmbedding& text,
                                                 std::optional<Index> cls_row);

// Temperature-sharpened bidirectional alignment. Rows of the first matrix
// are softmax distributions over text positions weighted by the text-side
// weights, scaled by the row's visual weight and divided by the visual
// count; the second matrix mirrors this over columns. The normalization
// identities (row sums = visual_weights/d1, column sums = text_weights/d2)
// hold by construction.
std::pair<Matrix, Matrix> fine_grained_alignment(const Matrix& similarity,
                                                 const Vector& visual_weights,
                                                 const Vector& text_weights, double sharpness);

// Mean over text positions of (visual_alignment + text_alignment) ⊙
// similarity; one relevance score per visual token.
Vector task_attention_map(const Matrix& similarity, const Matrix& visual_alignment,
                          const Matrix& text_alignment);

// Baseline relevance: per-visual-token mean cosine similarity to all text
// tokens, with no representative weighting or sharpening.
Vector vanilla_similarity(const Matrix& hidden, const TextEmbedding& text);

// Everything the alignment stage produces, kept together so downstream
// consumers and serialization see one immutable record.
struct AlignmentResult {
    Matrix similarity;          // visual x text cosine matrix
    Vector visual_weights;      // per visual token, vs text representative
    Vector text_weights;        // per text token, vs visual representative
    Matrix visual_alignment;    // row-normalized sharpened map
    Matrix text_alignment;      // column-normalized sharpened map
    Matrix weighted_similarity; // (visual_alignment + text_alignment) ⊙ similarity
    Vector task_map;            // mean over text positions, one entry per visual row
    double sharpness = kDefaultSharpness;
};

// Runs the full alignment pipeline. task_map keeps one entry per visual row,
// including the representative row when cls_row is given; dropping it is the
// pruning stage's job.
AlignmentResult decoupled_similarity(const Matrix& visual, const TextEmbedding& text,
                                     std::optional<Index> cls_row,
                                     double sharpness = kDefaultSharpness);

}  // namespace desap

#endif  // DESAP_ALIGNMENT_HPP
