#include "lexmae/model/weights.hpp"

#include <random>

#include "lexmae/util/errors.hpp"

namespace lexmae::model {

std::string to_string(LmHeadLayout layout)
{
    switch (layout) {
    case LmHeadLayout::separate: return "separate";
    case LmHeadLayout::shared: return "shared";
    case LmHeadLayout::extra_bottleneck: return "extra-bottleneck";
    }
    return "unknown";
}

LmHeadLayout lm_head_layout_from_string(const std::string& name)
{
    if (name == "separate" || name == "tied-default") {
        return LmHeadLayout::separate;
    }
    if (name == "shared" || name == "shared-with-encoder") {
        return LmHeadLayout::shared;
    }
    if (name == "extra-bottleneck" || name == "extra-head") {
        return LmHeadLayout::extra_bottleneck;
    }
    throw config_error("unknown LM head layout '" + name + "'");
}

void ModelConfig::validate() const
{
    if (vocab_size == 0 || hidden_size == 0 || encoder_layers == 0 || attention_heads == 0
        || max_sequence_length == 0 || ffn_multiplier == 0) {
        throw config_error("model dimensions must be positive");
    }
    if (hidden_size % attention_heads != 0) {
        throw config_error("hidden_size " + std::to_string(hidden_size) + " is not divisible by attention_heads "
                           + std::to_string(attention_heads));
    }
    if (decoder_layers == 0 || decoder_layers >= encoder_layers) {
        throw config_error("decoder must be shallower than the encoder (decoder_layers="
                           + std::to_string(decoder_layers) + ", encoder_layers=" + std::to_string(encoder_layers)
                           + ")");
    }
    if (!(init_std > 0.0) || !(layer_norm_epsilon > 0.0)) {
        throw config_error("init_std and layer_norm_epsilon must be positive");
    }
}

ModelConfig ModelConfig::tiny()
{
    ModelConfig c;
    c.vocab_size = 50;
    c.hidden_size = 16;
    c.encoder_layers = 3;
    c.decoder_layers = 2;
    c.attention_heads = 2;
    c.max_sequence_length = 12;
    c.ffn_multiplier = 2;
    return c;
}

TransformerWeights::TransformerWeights(const ModelConfig& config, LmHeadLayout layout, std::uint64_t seed)
    : m_config(config), m_layout(layout)
{
    config.validate();
    const std::size_t d = config.hidden_size;
    m_word = add("embeddings.word", {config.vocab_size, d});
    m_position = add("embeddings.position", {config.max_sequence_length, d});
    m_encoder = add_stack("encoder", config.encoder_layers);
    m_encoder_head = add_head("encoder.lm_head");
    m_decoder = add_stack("decoder", config.decoder_layers);
    if (layout != LmHeadLayout::shared) {
        m_decoder_head = add_head("decoder.lm_head");
    }
    if (layout == LmHeadLayout::extra_bottleneck) {
        m_bottleneck_head = add_head("bottleneck.lm_head");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, config.init_std);
    for (auto& p : m_params) {
        const auto& name = p.name;
        if (name.ends_with(".gamma")) {
            p.value.fill(1.0);
        }
        else if (name.ends_with(".beta") || name.ends_with(".bias")) {
            p.value.fill(0.0);
        }
        else {
            for (auto& v : p.value.values()) {
                v = normal(rng);
            }
        }
    }
}

std::size_t TransformerWeights::add(const std::string& name, ad::Shape shape)
{
    m_params.emplace_back(name, ad::Tensor(std::move(shape)));
    m_index.emplace(name, m_params.size() - 1);
    return m_params.size() - 1;
}

LinearIds TransformerWeights::add_linear(const std::string& prefix, std::size_t in, std::size_t out)
{
    return {add(prefix + ".weight", {in, out}), add(prefix + ".bias", {out})};
}

NormIds TransformerWeights::add_norm(const std::string& prefix, std::size_t width)
{
    return {add(prefix + ".gamma", {width}), add(prefix + ".beta", {width})};
}

StackIds TransformerWeights::add_stack(const std::string& prefix, std::size_t layers)
{
    const std::size_t d = m_config.hidden_size;
    const std::size_t f = m_config.ffn_size();
    StackIds stack;
    stack.embedding_norm = add_norm(prefix + ".embeddings.ln", d);
    for (std::size_t i = 0; i < layers; ++i) {
        const std::string p = prefix + ".layer." + std::to_string(i);
        LayerIds l;
        l.query = add_linear(p + ".attention.query", d, d);
        l.key = add_linear(p + ".attention.key", d, d);
        l.value = add_linear(p + ".attention.value", d, d);
        l.output = add_linear(p + ".attention.output", d, d);
        l.attention_norm = add_norm(p + ".attention.ln", d);
        l.inner = add_linear(p + ".ffn.inner", d, f);
        l.outer = add_linear(p + ".ffn.outer", f, d);
        l.ffn_norm = add_norm(p + ".ffn.ln", d);
        stack.layers.push_back(l);
    }
    return stack;
}

HeadIds TransformerWeights::add_head(const std::string& prefix)
{
    const std::size_t d = m_config.hidden_size;
    HeadIds h;
    h.transform = add_linear(prefix + ".transform", d, d);
    h.norm = add_norm(prefix + ".ln", d);
    h.bias = add(prefix + ".bias", {m_config.vocab_size});
    return h;
}

const HeadIds& TransformerWeights::decoder_head() const noexcept
{
    return m_decoder_head ? *m_decoder_head : m_encoder_head;
}

const HeadIds& TransformerWeights::bottleneck_head() const noexcept
{
    return m_bottleneck_head ? *m_bottleneck_head : m_encoder_head;
}

ad::Parameter& TransformerWeights::by_name(const std::string& name)
{
    auto it = m_index.find(name);
    if (it == m_index.end()) {
        throw contract_error("no parameter named '" + name + "'");
    }
    return m_params[it->second];
}

const ad::Parameter& TransformerWeights::by_name(const std::string& name) const
{
    return const_cast<TransformerWeights*>(this)->by_name(name);
}

void TransformerWeights::zero_grad()
{
    for (auto& p : m_params) {
        p.zero_grad();
    }
}

std::size_t TransformerWeights::parameter_count() const
{
    std::size_t total = 0;
    for (const auto& p : m_params) {
        total += p.value.size();
    }
    return total;
}

bool TransformerWeights::all_finite() const
{
    for (const auto& p : m_params) {
        if (!p.value.all_finite()) {
            return false;
        }
    }
    return true;
}

void TransformerWeights::assign(const std::vector<std::pair<std::string, ad::Tensor>>& values)
{
    if (values.size() != m_params.size()) {
        throw format_error("expected " + std::to_string(m_params.size()) + " parameter tensors, found "
                           + std::to_string(values.size()));
    }
    for (const auto& [name, tensor] : values) {
        auto& p = by_name(name);
        if (p.value.shape() != tensor.shape()) {
            throw format_error("parameter '" + name + "' has shape " + ad::shape_string(tensor.shape())
                               + ", expected " + ad::shape_string(p.value.shape()));
        }
        p.value = tensor;
        p.grad = ad::Tensor(tensor.shape());
    }
}

}  // namespace lexmae::model
