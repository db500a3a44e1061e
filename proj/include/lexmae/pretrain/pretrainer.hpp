#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lexmae/model/optimizer.hpp"
#include "lexmae/model/transformer.hpp"
#include "lexmae/pretrain/bottleneck.hpp"
#include "lexmae/pretrain/masking.hpp"

namespace lexmae::pretrain {

struct PretrainConfig {
    double alpha = 0.30;
    double beta = 0.20;
    BottleneckVariant bottleneck = BottleneckVariant::softmax_cbow;
    MaskingStrategy strategy = MaskingStrategy::inclusive;
    bool embedding_grad_through_bottleneck = false;
    std::size_t batch_size = 8;
    std::size_t steps = 500;
    std::uint64_t seed = 42;
    model::AdamConfig optimizer{.learning_rate = 2e-3, .warmup_steps = 50};

    void validate() const;
    friend bool operator==(const PretrainConfig&, const PretrainConfig&) = default;
};

struct PretrainLoss {
    ad::Var total;
    ad::Var elm;
    ad::Var dlm;
};

/// Joint loss on one sample: encoder MLM at m_enc plus decoder MLM at m_dec,
/// with the decoder's [CLS] slot fed by the configured bottleneck.
PretrainLoss pretrain_loss(const model::ModelGraph& graph, const MaskedSample& sample, const PretrainConfig& config);

/// Mean of the per-sample losses.
PretrainLoss batch_loss(const model::ModelGraph& graph, std::span<const MaskedSample> batch,
                        const PretrainConfig& config);

struct StepRecord {
    std::size_t step = 0;
    double loss_total = 0.0;
    double loss_elm = 0.0;
    double loss_dlm = 0.0;
    double grad_norm = 0.0;
    double learning_rate = 0.0;
};

/// One JSON object per line: {"step":…,"loss_elm":…,"loss_dlm":…,…}.
std::string to_log_line(const StepRecord& record);

/// Owns the optimization loop over a tokenized corpus. Sequences are expected
/// to carry their [CLS]/[SEP] framing; sequences with nothing to mask are skipped.
class Pretrainer {
  public:
    Pretrainer(model::TransformerWeights& weights, std::vector<std::vector<std::int32_t>> corpus,
               PretrainConfig config);

    /// Draws a batch, applies one optimizer step. Throws training_divergence_error on a non-finite loss.
    StepRecord step();

    /// Runs `config.steps` steps, reporting each to `on_step` when given.
    std::vector<StepRecord> run(const std::function<void(const StepRecord&)>& on_step = {});

    std::vector<MaskedSample> next_batch();

  private:
    model::TransformerWeights& m_weights;
    std::vector<std::vector<std::int32_t>> m_corpus;
    PretrainConfig m_config;
    model::Adam m_adam;
    std::mt19937_64 m_rng;
    std::vector<std::size_t> m_order;
    std::size_t m_cursor = 0;
    std::size_t m_step = 0;
};

}  // namespace lexmae::pretrain
