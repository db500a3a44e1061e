#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace lexmae::model {

/// How LM heads are laid out over the shared transformer.
///   separate: encoder and decoder each own a head transform + bias; both
///             project through the tied word embeddings.
///   shared:   the decoder reuses the encoder's head.
///   extra_bottleneck: as `separate`, plus a third head whose logits feed
///             the lexicon-importance pooling instead of the encoder's.
enum class LmHeadLayout : std::uint32_t { separate = 0, shared = 1, extra_bottleneck = 2 };

std::string to_string(LmHeadLayout layout);
LmHeadLayout lm_head_layout_from_string(const std::string& name);

struct ModelConfig {
    std::size_t vocab_size = 2000;
    std::size_t hidden_size = 64;
    std::size_t encoder_layers = 4;
    std::size_t decoder_layers = 2;
    std::size_t attention_heads = 4;
    std::size_t max_sequence_length = 128;
    std::size_t ffn_multiplier = 4;
    double init_std = 0.02;
    double layer_norm_epsilon = 1e-12;

    /// Throws config_error on a violated invariant.
    void validate() const;

    [[nodiscard]] std::size_t head_size() const { return hidden_size / attention_heads; }
    [[nodiscard]] std::size_t ffn_size() const { return hidden_size * ffn_multiplier; }

    /// d=16, |V|=50, n=12: small enough for exhaustive finite-difference checks.
    static ModelConfig tiny();

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace lexmae::model
