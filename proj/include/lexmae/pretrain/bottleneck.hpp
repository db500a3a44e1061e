#pragma once

#include <span>
#include <string>
#include <vector>

#include "lexmae/autodiff/ops.hpp"

namespace lexmae::pretrain {

enum class LexiconNorm { softmax, saturated };

/// What the decoder receives in its [CLS] slot.
///   softmax_cbow / saturated_cbow: W_weᵀ·a with a from the matching LexiconNorm
///   dense_cls: the encoder's contextual vector at position 0
///   disabled:  the plain [CLS] word embedding (no information from the encoder)
enum class BottleneckVariant { softmax_cbow, saturated_cbow, dense_cls, disabled };

std::string to_string(BottleneckVariant variant);
BottleneckVariant bottleneck_variant_from_string(const std::string& name);

/// True at positions that take part in max-pooling (everything except
/// [PAD]/[CLS]/[SEP]/[MASK] in the original sequence).
std::vector<bool> pooling_mask(std::span<const std::int32_t> x);

/// a = Norm(MaxPool(S)) for encoder logits S [|V|×n], pooling over the
/// positions where `include` is true. Softmax or L1(log(1+relu(·))).
ad::Var lexicon_importance(ad::Var logits, const std::vector<bool>& include, LexiconNorm norm);

/// b = W_weᵀ·a, length d. Unless `grad_to_embeddings`, the embedding matrix
/// enters through a stop-gradient edge, so only `a` receives gradient here.
ad::Var cbow_bottleneck(ad::Var a, ad::Var word_embedding, bool grad_to_embeddings);

}  // namespace lexmae::pretrain
