#include "lexmae/pretrain/bottleneck.hpp"

#include "lexmae/text/special_tokens.hpp"
#include "lexmae/util/errors.hpp"

namespace lexmae::pretrain {

std::string to_string(BottleneckVariant variant)
{
    switch (variant) {
    case BottleneckVariant::softmax_cbow: return "softmax-cbow";
    case BottleneckVariant::saturated_cbow: return "saturated-cbow";
    case BottleneckVariant::dense_cls: return "dense-cls";
    case BottleneckVariant::disabled: return "disabled";
    }
    return "unknown";
}

BottleneckVariant bottleneck_variant_from_string(const std::string& name)
{
    if (name == "softmax-cbow") {
        return BottleneckVariant::softmax_cbow;
    }
    if (name == "saturated-cbow") {
        return BottleneckVariant::saturated_cbow;
    }
    if (name == "dense-cls") {
        return BottleneckVariant::dense_cls;
    }
    if (name == "disabled") {
        return BottleneckVariant::disabled;
    }
    throw config_error("unknown bottleneck variant '" + name + "'");
}

std::vector<bool> pooling_mask(std::span<const std::int32_t> x)
{
    std::vector<bool> include(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        include[i] = !text::is_special(x[i]);
    }
    return include;
}

ad::Var lexicon_importance(ad::Var logits, const std::vector<bool>& include, LexiconNorm norm)
{
    ad::Var pooled = ad::max_pool_axis(logits, 1, include);
    if (norm == LexiconNorm::softmax) {
        return ad::softmax(pooled, 0);
    }
    return ad::l1_normalize(ad::log1p(ad::relu(pooled)));
}

ad::Var cbow_bottleneck(ad::Var a, ad::Var word_embedding, bool grad_to_embeddings)
{
    const auto& shape = word_embedding.shape();
    if (a.shape().size() != 1 || shape.size() != 2 || a.shape()[0] != shape[0]) {
        throw dimension_error("cbow_bottleneck: distribution " + ad::shape_string(a.shape())
                              + " does not match embeddings " + ad::shape_string(shape));
    }
    ad::Var table = grad_to_embeddings ? word_embedding : ad::stop_gradient(word_embedding);
    ad::Var row = ad::matmul(ad::reshape(a, {1, shape[0]}), table);
    return ad::reshape(row, {shape[1]});
}

}  // namespace lexmae::pretrain
