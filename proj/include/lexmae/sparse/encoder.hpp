#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lexmae/model/transformer.hpp"
#include "lexmae/sparse/vectors.hpp"

namespace lexmae::sparse {

/// log(1 + max-pool(relu(S))) over non-special positions, with S the encoder
/// LM logits [|V|×n]; a differentiable [|V|] vector.
ad::Var lexicon_representation(const model::ModelGraph& graph, std::span<const std::int32_t> tokens);

/// Inference-only encoding on a frozen snapshot. Safe to call concurrently.
SparseLexiconVector encode_lexicon(const model::TransformerWeights& weights, std::span<const std::int32_t> tokens);

/// F = Σ_j (mean_i row_i[j])² over a batch of equal-length rows.
ad::Var flops_regularizer(const std::vector<ad::Var>& rows);

}  // namespace lexmae::sparse
