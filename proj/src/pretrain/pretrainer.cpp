#include "lexmae/pretrain/pretrainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "lexmae/text/special_tokens.hpp"
#include "lexmae/util/errors.hpp"

namespace lexmae::pretrain {

using ad::Var;

void PretrainConfig::validate() const
{
    if (alpha < 0.0 || beta < 0.0 || alpha + beta > 1.0) {
        throw config_error("mask rates must satisfy 0 <= alpha, 0 <= beta, alpha + beta <= 1 (alpha="
                           + std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
    }
    if (batch_size == 0) {
        throw config_error("batch_size must be positive");
    }
}

namespace {

std::vector<std::int32_t> as_ids(std::span<const std::size_t> positions)
{
    return {positions.begin(), positions.end()};
}

std::vector<std::int32_t> targets_at(std::span<const std::int32_t> x, std::span<const std::size_t> positions)
{
    std::vector<std::int32_t> out;
    out.reserve(positions.size());
    for (auto p : positions) {
        out.push_back(x[p]);
    }
    return out;
}

/// Cross-entropy on logits computed only at `positions`.
Var sparse_mlm_loss(const model::ModelGraph& g, Var hidden, const model::HeadIds& head,
                    std::span<const std::int32_t> x, std::span<const std::size_t> positions)
{
    if (positions.empty()) {
        return g.tape().constant(ad::Tensor({1}));
    }
    const auto rows = as_ids(positions);
    Var logits = model::lm_logits(g, hidden, head, std::span<const std::int32_t>(rows));
    std::vector<std::size_t> cols(positions.size());
    std::iota(cols.begin(), cols.end(), 0);
    return ad::masked_cross_entropy(logits, targets_at(x, positions), cols);
}

Var row(Var matrix, std::int32_t index)
{
    const std::int32_t ids[1] = {index};
    return ad::reshape(ad::embedding_lookup(matrix, ids), {matrix.shape()[1]});
}

}  // namespace

PretrainLoss pretrain_loss(const model::ModelGraph& g, const MaskedSample& s, const PretrainConfig& config)
{
    const auto& weights = g.weights();
    Var hidden = model::encode(g, s.x_enc);

    Var elm;
    Var prefix;
    const bool cbow = config.bottleneck == BottleneckVariant::softmax_cbow
                      || config.bottleneck == BottleneckVariant::saturated_cbow;
    if (cbow) {
        const auto norm = config.bottleneck == BottleneckVariant::softmax_cbow ? LexiconNorm::softmax
                                                                                : LexiconNorm::saturated;
        const bool extra = weights.layout() == model::LmHeadLayout::extra_bottleneck;
        Var pool_logits = model::lm_logits(g, hidden, weights.bottleneck_head());
        if (extra) {
            elm = sparse_mlm_loss(g, hidden, weights.encoder_head(), s.x, s.m_enc);
        }
        else if (s.m_enc.empty()) {
            elm = g.tape().constant(ad::Tensor({1}));
        }
        else {
            elm = ad::masked_cross_entropy(pool_logits, s.x, s.m_enc);
        }
        Var a = lexicon_importance(pool_logits, pooling_mask(s.x), norm);
        prefix = cbow_bottleneck(a, g.word_embedding(), config.embedding_grad_through_bottleneck);
    }
    else {
        elm = sparse_mlm_loss(g, hidden, weights.encoder_head(), s.x, s.m_enc);
        prefix = config.bottleneck == BottleneckVariant::dense_cls ? row(hidden, 0)
                                                                   : row(g.word_embedding(), text::kClsId);
    }

    Var dlm;
    if (s.m_dec.empty()) {
        dlm = g.tape().constant(ad::Tensor({1}));
    }
    else {
        const auto rows = as_ids(s.m_dec);
        Var logits = model::decode_with_prefix(g, prefix, s.x_dec, {}, std::span<const std::int32_t>(rows));
        std::vector<std::size_t> cols(rows.size());
        std::iota(cols.begin(), cols.end(), 0);
        dlm = ad::masked_cross_entropy(logits, targets_at(s.x, s.m_dec), cols);
    }
    return {ad::add(elm, dlm), elm, dlm};
}

PretrainLoss batch_loss(const model::ModelGraph& graph, std::span<const MaskedSample> batch,
                        const PretrainConfig& config)
{
    if (batch.empty()) {
        throw input_error("empty pre-training batch");
    }
    std::vector<Var> elm;
    std::vector<Var> dlm;
    for (const auto& s : batch) {
        auto loss = pretrain_loss(graph, s, config);
        elm.push_back(loss.elm);
        dlm.push_back(loss.dlm);
    }
    Var e = ad::mean(ad::concat(elm));
    Var d = ad::mean(ad::concat(dlm));
    return {ad::add(e, d), e, d};
}

std::string to_log_line(const StepRecord& r)
{
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["loss_total"] = r.loss_total;
    j["loss_elm"] = r.loss_elm;
    j["loss_dlm"] = r.loss_dlm;
    j["grad_norm"] = r.grad_norm;
    j["learning_rate"] = r.learning_rate;
    return j.dump();
}

Pretrainer::Pretrainer(model::TransformerWeights& weights, std::vector<std::vector<std::int32_t>> corpus,
                       PretrainConfig config)
    : m_weights(weights), m_config(config), m_adam(weights, config.optimizer), m_rng(config.seed)
{
    config.validate();
    for (auto& seq : corpus) {
        if (!maskable_positions(seq).empty()) {
            m_corpus.push_back(std::move(seq));
        }
    }
    if (m_corpus.empty()) {
        throw input_error("pre-training corpus has no sequence with maskable tokens");
    }
    m_order.resize(m_corpus.size());
    std::iota(m_order.begin(), m_order.end(), 0);
    m_cursor = m_order.size();
}

std::vector<MaskedSample> Pretrainer::next_batch()
{
    std::vector<MaskedSample> batch;
    batch.reserve(m_config.batch_size);
    const auto vocab = m_weights.config().vocab_size;
    while (batch.size() < m_config.batch_size) {
        if (m_cursor == m_order.size()) {
            std::shuffle(m_order.begin(), m_order.end(), m_rng);
            m_cursor = 0;
        }
        const auto& seq = m_corpus[m_order[m_cursor++]];
        batch.push_back(make_masked_sample(seq, m_config.alpha, m_config.beta, m_config.strategy, vocab, m_rng));
    }
    return batch;
}

StepRecord Pretrainer::step()
{
    auto batch = next_batch();
    StepRecord rec;
    rec.step = m_step;
    rec.learning_rate = m_adam.learning_rate_at(m_step);
    {
        ad::Tape tape;
        model::ModelGraph graph(tape, m_weights);
        auto loss = batch_loss(graph, batch, m_config);
        rec.loss_total = loss.total.value()[0];
        rec.loss_elm = loss.elm.value()[0];
        rec.loss_dlm = loss.dlm.value()[0];
        if (!std::isfinite(rec.loss_total)) {
            throw training_divergence_error("non-finite pre-training loss at step " + std::to_string(m_step)
                                            + " (loss_elm=" + std::to_string(rec.loss_elm)
                                            + ", loss_dlm=" + std::to_string(rec.loss_dlm)
                                            + ", learning_rate=" + std::to_string(rec.learning_rate) + ")");
        }
        tape.backward(loss.total);
    }
    rec.grad_norm = m_adam.step();
    ++m_step;
    return rec;
}

std::vector<StepRecord> Pretrainer::run(const std::function<void(const StepRecord&)>& on_step)
{
    std::vector<StepRecord> out;
    out.reserve(m_config.steps);
    for (std::size_t i = 0; i < m_config.steps; ++i) {
        out.push_back(step());
        if (on_step) {
            on_step(out.back());
        }
    }
    return out;
}

}  // namespace lexmae::pretrain
