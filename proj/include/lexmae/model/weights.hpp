#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexmae/autodiff/tape.hpp"
#include "lexmae/model/config.hpp"

namespace lexmae::model {

struct LinearIds {
    std::size_t weight = 0;
    std::size_t bias = 0;
};

struct NormIds {
    std::size_t gamma = 0;
    std::size_t beta = 0;
};

struct LayerIds {
    LinearIds query;
    LinearIds key;
    LinearIds value;
    LinearIds output;
    NormIds attention_norm;
    LinearIds inner;
    LinearIds outer;
    NormIds ffn_norm;
};

/// dense → gelu → layer-norm → tied projection + per-token bias.
struct HeadIds {
    LinearIds transform;
    NormIds norm;
    std::size_t bias = 0;
};

struct StackIds {
    NormIds embedding_norm;
    std::vector<LayerIds> layers;
};

/// Every learnable tensor of the encoder/decoder pair. The word-embedding
/// matrix is a single Parameter; every consumer (both embedding layers, all
/// LM-head projections, the bottleneck) reads it through `word_embedding()`.
class TransformerWeights {
  public:
    TransformerWeights() = default;
    /// Parameters drawn from N(0, init_std²); biases zero, norms at identity.
    TransformerWeights(const ModelConfig& config, LmHeadLayout layout, std::uint64_t seed);

    [[nodiscard]] const ModelConfig& config() const noexcept { return m_config; }
    [[nodiscard]] LmHeadLayout layout() const noexcept { return m_layout; }

    [[nodiscard]] std::vector<ad::Parameter>& parameters() noexcept { return m_params; }
    [[nodiscard]] const std::vector<ad::Parameter>& parameters() const noexcept { return m_params; }
    ad::Parameter& at(std::size_t id) { return m_params.at(id); }
    [[nodiscard]] const ad::Parameter& at(std::size_t id) const { return m_params.at(id); }
    ad::Parameter& by_name(const std::string& name);
    [[nodiscard]] const ad::Parameter& by_name(const std::string& name) const;
    [[nodiscard]] bool contains(const std::string& name) const { return m_index.contains(name); }

    ad::Parameter& word_embedding() { return m_params[m_word]; }
    [[nodiscard]] const ad::Parameter& word_embedding() const { return m_params[m_word]; }
    [[nodiscard]] std::size_t word_embedding_id() const noexcept { return m_word; }
    [[nodiscard]] std::size_t position_embedding_id() const noexcept { return m_position; }

    [[nodiscard]] const StackIds& encoder() const noexcept { return m_encoder; }
    [[nodiscard]] const StackIds& decoder() const noexcept { return m_decoder; }
    [[nodiscard]] const HeadIds& encoder_head() const noexcept { return m_encoder_head; }
    /// The head the decoder projects through under the current layout.
    [[nodiscard]] const HeadIds& decoder_head() const noexcept;
    /// The head whose logits feed lexicon pooling under the current layout.
    [[nodiscard]] const HeadIds& bottleneck_head() const noexcept;

    void zero_grad();
    [[nodiscard]] std::size_t parameter_count() const;
    [[nodiscard]] bool all_finite() const;

    /// Replaces parameter values from a name → tensor list; names and shapes
    /// must match this layout exactly.
    void assign(const std::vector<std::pair<std::string, ad::Tensor>>& values);

  private:
    std::size_t add(const std::string& name, ad::Shape shape);
    LinearIds add_linear(const std::string& prefix, std::size_t in, std::size_t out);
    NormIds add_norm(const std::string& prefix, std::size_t width);
    StackIds add_stack(const std::string& prefix, std::size_t layers);
    HeadIds add_head(const std::string& prefix);

    ModelConfig m_config;
    LmHeadLayout m_layout = LmHeadLayout::separate;
    std::vector<ad::Parameter> m_params;
    std::unordered_map<std::string, std::size_t> m_index;
    std::size_t m_word = 0;
    std::size_t m_position = 0;
    StackIds m_encoder;
    StackIds m_decoder;
    HeadIds m_encoder_head;
    std::optional<HeadIds> m_decoder_head;
    std::optional<HeadIds> m_bottleneck_head;
};

}  // namespace lexmae::model
