#include "lexmae/model/transformer.hpp"

#include <cmath>
#include <numeric>

#include "lexmae/text/special_tokens.hpp"
#include "lexmae/util/errors.hpp"

namespace lexmae::model {

using ad::Var;

ModelGraph::ModelGraph(ad::Tape& tape, const TransformerWeights& weights) : m_tape(tape), m_weights(weights)
{
    if (tape.recording()) {
        throw contract_error("a recording tape needs mutable weights");
    }
}

Var ModelGraph::param(std::size_t id) const
{
    if (m_mutable != nullptr) {
        return m_tape.parameter(m_mutable->at(id));
    }
    return m_tape.parameter_constant(m_weights.at(id));
}

namespace {

constexpr double kMaskedScore = -1e30;

Var linear(const ModelGraph& g, Var x, const LinearIds& ids)
{
    return ad::add_bias(ad::matmul(x, g.param(ids.weight)), g.param(ids.bias), 1);
}

Var norm(const ModelGraph& g, Var x, const NormIds& ids)
{
    return ad::layer_norm(x, g.param(ids.gamma), g.param(ids.beta), g.config().layer_norm_epsilon);
}

void check_tokens(const ModelConfig& cfg, std::span<const std::int32_t> tokens, const std::vector<bool>& mask)
{
    if (tokens.empty()) {
        throw input_error("empty token sequence");
    }
    if (tokens.size() > cfg.max_sequence_length) {
        throw length_error("sequence of " + std::to_string(tokens.size()) + " tokens exceeds max_sequence_length "
                           + std::to_string(cfg.max_sequence_length));
    }
    for (auto id : tokens) {
        if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
            throw vocab_error("token id " + std::to_string(id) + " outside vocabulary of size "
                              + std::to_string(cfg.vocab_size));
        }
    }
    if (!mask.empty() && mask.size() != tokens.size()) {
        throw dimension_error("attention mask length differs from token count");
    }
}

Var position_rows(const ModelGraph& g, std::size_t n)
{
    std::vector<std::int32_t> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    return ad::embedding_lookup(g.param(g.weights().position_embedding_id()), pos);
}

Var attention_block(const ModelGraph& g, Var x, const LayerIds& layer, const ad::Tensor& key_bias,
                    AttentionTrace* trace)
{
    const auto& cfg = g.config();
    const std::size_t heads = cfg.attention_heads;
    const std::size_t dh = cfg.head_size();
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    Var q = linear(g, x, layer.query);
    Var k = linear(g, x, layer.key);
    Var v = linear(g, x, layer.value);
    Var bias = g.tape().constant(key_bias);
    std::vector<Var> outputs;
    outputs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Var qh = ad::slice_cols(q, h * dh, dh);
        Var kh = ad::slice_cols(k, h * dh, dh);
        Var vh = ad::slice_cols(v, h * dh, dh);
        Var scores = ad::add_bias(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt), bias, 1);
        Var probs = ad::softmax(scores, 1);
        if (trace != nullptr) {
            trace->probabilities.push_back(probs.value());
        }
        outputs.push_back(ad::matmul(probs, vh));
    }
    Var merged = heads == 1 ? outputs.front() : ad::concat_cols(outputs);
    return norm(g, ad::add(x, linear(g, merged, layer.output)), layer.attention_norm);
}

Var ffn_block(const ModelGraph& g, Var x, const LayerIds& layer)
{
    Var inner = ad::gelu(linear(g, x, layer.inner));
    return norm(g, ad::add(x, linear(g, inner, layer.outer)), layer.ffn_norm);
}

Var run_stack(const ModelGraph& g, Var embedded, const StackIds& stack, const std::vector<bool>& mask,
              AttentionTrace* trace)
{
    const std::size_t n = embedded.value().rows();
    ad::Tensor key_bias({n});
    for (std::size_t j = 0; j < n; ++j) {
        key_bias[j] = mask.empty() || mask[j] ? 0.0 : kMaskedScore;
    }
    Var x = norm(g, embedded, stack.embedding_norm);
    for (const auto& layer : stack.layers) {
        x = attention_block(g, x, layer, key_bias, trace);
        x = ffn_block(g, x, layer);
    }
    return x;
}

}  // namespace

Var encode(const ModelGraph& graph, std::span<const std::int32_t> tokens, const std::vector<bool>& attention_mask,
           AttentionTrace* trace)
{
    check_tokens(graph.config(), tokens, attention_mask);
    Var embedded = ad::add(ad::embedding_lookup(graph.word_embedding(), tokens), position_rows(graph, tokens.size()));
    return run_stack(graph, embedded, graph.weights().encoder(), attention_mask, trace);
}

Var lm_logits(const ModelGraph& graph, Var hidden, const HeadIds& head,
              std::optional<std::span<const std::int32_t>> positions)
{
    Var h = positions ? ad::embedding_lookup(hidden, *positions) : hidden;
    Var transformed = norm(graph, ad::gelu(linear(graph, h, head.transform)), head.norm);
    Var logits = ad::matmul(graph.word_embedding(), ad::transpose(transformed));
    return ad::add_bias(logits, graph.param(head.bias), 0);
}

Var lm_logits(const ModelGraph& graph, Var hidden) { return lm_logits(graph, hidden, graph.weights().encoder_head()); }

Var decode_hidden_with_prefix(const ModelGraph& graph, Var prefix, std::span<const std::int32_t> tokens,
                              const std::vector<bool>& attention_mask)
{
    const auto& cfg = graph.config();
    check_tokens(cfg, tokens, attention_mask);
    if (tokens.front() != text::kClsId) {
        throw contract_error("decoder input must start with the [CLS] slot");
    }
    if (prefix.value().size() != cfg.hidden_size) {
        throw dimension_error("bottleneck prefix must have length " + std::to_string(cfg.hidden_size));
    }
    const std::size_t n = tokens.size();
    const std::size_t d = cfg.hidden_size;
    Var word_rows = ad::reshape(prefix, {d});
    if (n > 1) {
        Var rest = ad::embedding_lookup(graph.word_embedding(), tokens.subspan(1));
        word_rows = ad::concat({word_rows, ad::reshape(rest, {(n - 1) * d})});
    }
    Var embedded = ad::add(ad::reshape(word_rows, {n, d}), position_rows(graph, n));
    return run_stack(graph, embedded, graph.weights().decoder(), attention_mask, nullptr);
}

Var decode_with_prefix(const ModelGraph& graph, Var prefix, std::span<const std::int32_t> tokens,
                       const std::vector<bool>& attention_mask, std::optional<std::span<const std::int32_t>> positions)
{
    Var hidden = decode_hidden_with_prefix(graph, prefix, tokens, attention_mask);
    return lm_logits(graph, hidden, graph.weights().decoder_head(), positions);
}

Var decode(const ModelGraph& graph, std::span<const std::int32_t> tokens, const std::vector<bool>& attention_mask)
{
    check_tokens(graph.config(), tokens, attention_mask);
    Var embedded = ad::add(ad::embedding_lookup(graph.word_embedding(), tokens), position_rows(graph, tokens.size()));
    Var hidden = run_stack(graph, embedded, graph.weights().decoder(), attention_mask, nullptr);
    return lm_logits(graph, hidden, graph.weights().decoder_head());
}

}  // namespace lexmae::model
