#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexmae/model/optimizer.hpp"
#include "lexmae/model/transformer.hpp"

namespace lexmae::finetune {

using TokenIds = std::vector<std::int32_t>;

/// One contrastive example: a query, its positive, and its negatives, all as
/// indices into a shared document table.
struct QueryGroup {
    TokenIds query;
    std::uint32_t positive = 0;
    std::vector<std::uint32_t> negatives;
    /// Aligned to {positive} ∪ negatives when present.
    std::optional<std::vector<double>> teacher_scores;

    /// Throws contract_error when the positive is among the negatives, there
    /// are no negatives, or teacher scores have the wrong length.
    void validate() const;
};

struct StageConfig {
    int stage = 1;
    double lambda = 0.002;
    /// Optional separate weights for the query and document FLOPS terms;
    /// both default to `lambda`.
    std::optional<double> lambda_query;
    std::optional<double> lambda_doc;
    double gamma = 0.2;
    std::size_t negatives_per_query = 7;
    std::size_t mining_depth = 200;
    std::size_t epochs = 2;
    std::size_t batch_size = 4;
    std::uint64_t seed = 42;
    model::AdamConfig optimizer{.learning_rate = 1e-4, .warmup_steps = 20};

    /// λ1 = 0.002, λ2 = λ3 = 0.008, γ = 0.2, depth K1 = min(1000, N/2), K2 = K3 = 200.
    static StageConfig defaults(int stage, std::size_t corpus_size);
    void validate() const;
    [[nodiscard]] double query_lambda() const { return lambda_query.value_or(lambda); }
    [[nodiscard]] double doc_lambda() const { return lambda_doc.value_or(lambda); }

    friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

/// total = distillation + w·contrastive + λ_q·flops_query + λ_d·flops_doc,
/// with w = γ in stage 3 and 1 otherwise, and distillation = 0 outside stage 3.
struct StageLoss {
    ad::Var total;
    ad::Var distillation;
    ad::Var contrastive;
    ad::Var flops_query;
    ad::Var flops_doc;
};

/// Dot products v(q)·v(d) for d ∈ {positive} ∪ negatives, as a [1+|N|] vector.
ad::Var group_scores(const model::ModelGraph& graph, const QueryGroup& group, std::span<const TokenIds> docs,
                     std::vector<ad::Var>* query_reps = nullptr, std::vector<ad::Var>* doc_reps = nullptr);

/// softmax of group_scores.
ad::Var contrastive_distribution(const model::ModelGraph& graph, const QueryGroup& group,
                                 std::span<const TokenIds> docs);

/// KL(p ‖ softmax(logits)) with p a fixed distribution.
ad::Var kl_to_fixed(const std::vector<double>& p, ad::Var logits);

/// Mean over the batch of the per-group terms, plus FLOPS over the batch's
/// query representations and over its document representations.
StageLoss stage_loss(const model::ModelGraph& graph, std::span<const QueryGroup> batch, std::span<const TokenIds> docs,
                     const StageConfig& config);

/// Negative pools for one round of training.
struct NegativePools {
    std::vector<std::vector<std::uint32_t>> pools;
    /// Queries whose filtered candidates fell short and were topped up with random documents.
    std::size_t backfilled = 0;
};

/// For each query: take the first `depth` ranked candidates, drop every
/// positive, then sample `per_query` uniformly without replacement. Short
/// pools are filled with random non-positive corpus documents.
NegativePools mine_hard_negatives(std::span<const std::vector<std::uint32_t>> ranked,
                                  std::span<const std::vector<std::uint32_t>> positives, std::size_t depth,
                                  std::size_t per_query, std::size_t num_docs, std::mt19937_64& rng);

struct TrainingQuery {
    std::string id;
    TokenIds tokens;
    std::vector<std::uint32_t> positives;
    /// Retrieval candidates in rank order, used for mining.
    std::vector<std::uint32_t> ranked;
};

/// query id → doc index → teacher score.
using TeacherScores = std::unordered_map<std::string, std::unordered_map<std::uint32_t, double>>;

struct StageStep {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double total = 0.0;
    double distillation = 0.0;
    double contrastive = 0.0;
    double flops_query = 0.0;
    double flops_doc = 0.0;
    double learning_rate = 0.0;
};

std::string to_log_line(const StageStep& step);

struct StageSummary {
    std::vector<StageStep> steps;
    std::size_t backfilled_queries = 0;
};

/// Trains `weights` in place over every training query for `config.epochs`
/// epochs, re-mining negatives from the fixed candidate lists each epoch.
/// Stage 3 needs a teacher score for every group document (contract_error otherwise).
StageSummary run_stage(model::TransformerWeights& weights, std::span<const TokenIds> docs,
                       std::span<const TrainingQuery> queries, const StageConfig& config,
                       const TeacherScores* teacher = nullptr,
                       const std::function<void(const StageStep&)>& on_step = {});

}  // namespace lexmae::finetune
