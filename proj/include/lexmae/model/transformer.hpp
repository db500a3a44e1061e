#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lexmae/autodiff/ops.hpp"
#include "lexmae/model/weights.hpp"

namespace lexmae::model {

/// Binds a weight set to a tape. A recording tape needs mutable weights so
/// gradients can flow back into them; an inference tape may read a shared,
/// immutable snapshot.
class ModelGraph {
  public:
    ModelGraph(ad::Tape& tape, TransformerWeights& weights) : m_tape(tape), m_mutable(&weights), m_weights(weights) {}
    ModelGraph(ad::Tape& tape, const TransformerWeights& weights);

    [[nodiscard]] ad::Tape& tape() const noexcept { return m_tape; }
    [[nodiscard]] const TransformerWeights& weights() const noexcept { return m_weights; }
    [[nodiscard]] const ModelConfig& config() const noexcept { return m_weights.config(); }

    ad::Var param(std::size_t id) const;
    [[nodiscard]] ad::Var word_embedding() const { return param(m_weights.word_embedding_id()); }

  private:
    ad::Tape& m_tape;
    TransformerWeights* m_mutable = nullptr;
    const TransformerWeights& m_weights;
};

/// Attention probabilities captured per layer and head, for inspection.
struct AttentionTrace {
    std::vector<ad::Tensor> probabilities;
};

/// Contextual states [n×d]. `attention_mask[j]` false marks a padding
/// position that no query may attend to. An empty mask means "all real".
/// Throws length_error past max_sequence_length and vocab_error for ids ≥ |V|.
ad::Var encode(const ModelGraph& graph, std::span<const std::int32_t> tokens, const std::vector<bool>& attention_mask = {},
               AttentionTrace* trace = nullptr);

/// LM logits [|V|×n] from hidden states through `head`: dense → gelu →
/// layer-norm, projected by the tied word embeddings plus a per-token bias.
/// With `positions`, only those rows of `hidden` are projected, giving
/// [|V|×positions.size()].
ad::Var lm_logits(const ModelGraph& graph, ad::Var hidden, const HeadIds& head,
                  std::optional<std::span<const std::int32_t>> positions = std::nullopt);

/// Encoder LM logits with the encoder head.
ad::Var lm_logits(const ModelGraph& graph, ad::Var hidden);

/// Runs the decoder stack with position 0's input embedding replaced by
/// `prefix` (length d). `tokens[0]` is the [CLS] slot being replaced; it
/// must hold the [CLS] id. Returns decoder hidden states [n×d].
ad::Var decode_hidden_with_prefix(const ModelGraph& graph, ad::Var prefix, std::span<const std::int32_t> tokens,
                                  const std::vector<bool>& attention_mask = {});

/// Decoder logits [|V|×n] (or [|V|×positions.size()]) given a prefix vector.
ad::Var decode_with_prefix(const ModelGraph& graph, ad::Var prefix, std::span<const std::int32_t> tokens,
                           const std::vector<bool>& attention_mask = {},
                           std::optional<std::span<const std::int32_t>> positions = std::nullopt);

/// Decoder forward on plain token embeddings (no bottleneck).
ad::Var decode(const ModelGraph& graph, std::span<const std::int32_t> tokens, const std::vector<bool>& attention_mask = {});

}  // namespace lexmae::model
