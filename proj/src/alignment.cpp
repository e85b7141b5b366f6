// Copyright 2026 The DeSAP Authors
// SPDX-License-Identifier: Apache-2.0

#include "desap/alignment.hpp"

#include <cmath>
#include <string>

#include "desap/kernels.hpp"

namespace desap {
namespace {

void check_dims(const Matrix& visual, const TextEmbedding& text, const char* what) {
    if (visual.rows() < 1)
        throw ShapeError(std::string(what) + ": visual matrix has no rows");
    if (visual.cols() != text.dim())
        throw ShapeError(std::string(what) + ": visual dim " + std::to_string(visual.cols()) +
                         " does not match text dim " + std::to_string(text.dim()));
}

Vector normalized_or_zero(const Vector& v) {
    double norm = v.norm();
    return norm == 0.0 ? Vector(Vector::Zero(v.size())) : Vector(v / norm);
}

}  // namespace

TextEmbedding::TextEmbedding(Matrix token_rows, Index eos) : tokens(std::move(token_rows)), eos_index(eos) {
    if (tokens.rows() < 1)
        throw ConfigError("text embedding needs at least one token row");
    if (eos_index < 0 || eos_index >= tokens.rows())
        throw IndexError("text representative index " + std::to_string(eos_index) +
                         " out of range for " + std::to_string(tokens.rows()) + " tokens");
}

TextEmbedding TextEmbedding::from_padded(const Matrix& padded, const std::vector<bool>& keep,
                                         Index eos) {
    if (static_cast<Index>(keep.size()) != padded.rows())
        throw ShapeError("pad mask covers " + std::to_string(keep.size()) + " rows, embedding has " +
                         std::to_string(padded.rows()));
    if (eos < 0 || eos >= padded.rows())
        throw IndexError("text representative index " + std::to_string(eos) +
                         " out of range for " + std::to_string(padded.rows()) + " tokens");
    if (!keep[static_cast<std::size_t>(eos)])
        throw ConfigError("text representative token is masked out by the pad mask");

    Index kept = 0;
    for (bool flag : keep) kept += flag ? 1 : 0;
    if (kept == 0)
        throw ConfigError("pad mask removes every text token");

    Matrix compact(kept, padded.cols());
    Index eos_compact = 0;
    Index next = 0;
    for (Index i = 0; i < padded.rows(); ++i) {
        if (!keep[static_cast<std::size_t>(i)]) continue;
        compact.row(next) = padded.row(i);
        if (i == eos) eos_compact = next;
        ++next;
    }
    return TextEmbedding(std::move(compact), eos_compact);
}

Matrix token_similarity(const Matrix& visual, const TextEmbedding& text) {
    check_dims(visual, text, "token_similarity");
    return l2_normalize_rows(visual) * l2_normalize_rows(text.tokens).transpose();
}

std::pair<Vector, Vector> representative_weights(const Matrix& visual, const TextEmbedding& text,
                                                 std::optional<Index> cls_row) {
    check_dims(visual, text, "representative_weights");
    if (cls_row && (*cls_row < 0 || *cls_row >= visual.rows()))
        throw IndexError("visual representative index " + std::to_string(*cls_row) +
                         " out of range for " + std::to_string(visual.rows()) + " tokens");

    Matrix visual_unit = l2_normalize_rows(visual);
    Matrix text_unit = l2_normalize_rows(text.tokens);

    Vector visual_rep = cls_row
        ? Vector(visual_unit.row(*cls_row).transpose())
        : normalized_or_zero(visual_unit.colwise().mean().transpose());
    Vector text_rep = text_unit.row(text.eos_index).transpose();

    return {Vector(visual_unit * text_rep), Vector(text_unit * visual_rep)};
}

std::pair<Matrix, Matrix> fine_grained_alignment(const Matrix& similarity,
                                                 const Vector& visual_weights,
                                                 const Vector& text_weights, double sharpness) {
    const Index d1 = similarity.rows();
    const Index d2 = similarity.cols();
    if (visual_weights.size() != d1 || text_weights.size() != d2)
        throw ShapeError("alignment weights are " + std::to_string(visual_weights.size()) + " and " +
                         std::to_string(text_weights.size()) + ", similarity is " +
                         shape_str(similarity));
    if (sharpness <= 0.0)
        throw ConfigError("sharpness must be positive, got " + std::to_string(sharpness));

    // Weighted logits, sharpened row-wise for the visual map and column-wise
    // for the text map; row/column softmax carries the scale guarantees.
    Matrix visual_logits = sharpness * (similarity.array().rowwise() *
                                        text_weights.transpose().array());
    Matrix text_logits = sharpness * (similarity.array().colwise() * visual_weights.array());

    Matrix visual_map = row_softmax(visual_logits);
    visual_map.array() *= visual_weights.array().replicate(1, d2) / static_cast<double>(d1);

    Matrix text_map = row_softmax(Matrix(text_logits.transpose())).transpose();
    text_map.array() *= text_weights.transpose().array().replicate(d1, 1) / static_cast<double>(d2);

    return {std::move(visual_map), std::move(text_map)};
}

Vector task_attention_map(const Matrix& similarity, const Matrix& visual_alignment,
                          const Matrix& text_alignment) {
    if (visual_alignment.rows() != similarity.rows() || visual_alignment.cols() != similarity.cols() ||
        text_alignment.rows() != similarity.rows() || text_alignment.cols() != similarity.cols())
        throw ShapeError("alignment maps " + shape_str(visual_alignment) + " and " +
                         shape_str(text_alignment) + " do not match similarity " +
                         shape_str(similarity));
    Matrix weighted = (visual_alignment + text_alignment).cwiseProduct(similarity);
    return mean_over_axis(weighted, Axis::Cols);
}

Vector vanilla_similarity(const Matrix& hidden, const TextEmbedding& text) {
    check_dims(hidden, text, "vanilla_similarity");
    return mean_over_axis(cosine_sim_matrix(hidden, text.tokens), Axis::Cols);
}

AlignmentResult decoupled_similarity(const Matrix& visual, const TextEmbedding& text,
                                     std::optional<Index> cls_row, double sharpness) {
    AlignmentResult out;
    out.sharpness = sharpness;
    out.similarity = token_similarity(visual, text);
    std::tie(out.visual_weights, out.text_weights) = representative_weights(visual, text, cls_row);
    std::tie(out.visual_alignment, out.text_alignment) =
        fine_grained_alignment(out.similarity, out.visual_weights, out.text_weights, sharpness);
    out.weighted_similarity = (out.visual_alignment + out.text_alignment).cwiseProduct(out.similarity);
    out.task_map = mean_over_axis(out.weighted_similarity, Axis::Cols);
    return out;
}

}  // namespace desap
