#include "lexmae/sparse/encoder.hpp"

#include "lexmae/pretrain/bottleneck.hpp"
#include "lexmae/util/errors.hpp"

namespace lexmae::sparse {

ad::Var lexicon_representation(const model::ModelGraph& graph, std::span<const std::int32_t> tokens)
{
    if (tokens.empty()) {
        throw input_error("cannot encode an empty token sequence");
    }
    ad::Var logits = model::lm_logits(graph, model::encode(graph, tokens));
    // relu commutes with the max, so saturating after pooling touches |V| entries instead of |V|×n.
    ad::Var pooled = ad::max_pool_axis(logits, 1, pretrain::pooling_mask(tokens));
    return ad::log1p(ad::relu(pooled));
}

SparseLexiconVector encode_lexicon(const model::TransformerWeights& weights, std::span<const std::int32_t> tokens)
{
    ad::Tape tape(false);
    model::ModelGraph graph(tape, weights);
    const auto& dense = lexicon_representation(graph, tokens).value();
    return from_dense(dense.values());
}

ad::Var flops_regularizer(const std::vector<ad::Var>& rows)
{
    if (rows.empty()) {
        throw input_error("FLOPS regularizer needs a non-empty batch");
    }
    return ad::sum(ad::square(ad::mean_axis(ad::stack_rows(rows), 0)));
}

}  // namespace lexmae::sparse
