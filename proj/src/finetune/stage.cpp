#include "lexmae/finetune/stage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "lexmae/sparse/encoder.hpp"
#include "lexmae/util/errors.hpp"

namespace lexmae::finetune {

using ad::Var;

void QueryGroup::validate() const
{
    if (negatives.empty()) {
        throw contract_error("query group needs at least one negative");
    }
    if (std::find(negatives.begin(), negatives.end(), positive) != negatives.end()) {
        throw contract_error("query group lists its positive among the negatives");
    }
    if (teacher_scores && teacher_scores->size() != negatives.size() + 1) {
        throw contract_error("teacher scores must cover the positive and every negative");
    }
}

StageConfig StageConfig::defaults(int stage, std::size_t corpus_size)
{
    StageConfig c;
    c.stage = stage;
    c.lambda = stage == 1 ? 0.002 : 0.008;
    c.mining_depth = stage == 1 ? std::max<std::size_t>(1, std::min<std::size_t>(1000, corpus_size / 2)) : 200;
    return c;
}

void StageConfig::validate() const
{
    if (stage < 1 || stage > 3) {
        throw config_error("stage must be 1, 2 or 3");
    }
    if (lambda < 0.0 || query_lambda() < 0.0 || doc_lambda() < 0.0 || gamma < 0.0) {
        throw config_error("lambda and gamma must be non-negative");
    }
    if (negatives_per_query == 0 || mining_depth < negatives_per_query) {
        throw config_error("need 1 <= negatives_per_query <= mining_depth");
    }
    if (batch_size == 0) {
        throw config_error("batch_size must be positive");
    }
}

Var group_scores(const model::ModelGraph& graph, const QueryGroup& group, std::span<const TokenIds> docs,
                 std::vector<Var>* query_reps, std::vector<Var>* doc_reps)
{
    group.validate();
    Var q = sparse::lexicon_representation(graph, group.query);
    if (query_reps != nullptr) {
        query_reps->push_back(q);
    }
    std::vector<Var> scores;
    auto score_doc = [&](std::uint32_t d) {
        if (d >= docs.size()) {
            throw contract_error("document index " + std::to_string(d) + " outside the corpus");
        }
        Var v = sparse::lexicon_representation(graph, docs[d]);
        if (doc_reps != nullptr) {
            doc_reps->push_back(v);
        }
        scores.push_back(ad::reshape(ad::dot(q, v), {1}));
    };
    score_doc(group.positive);
    for (auto n : group.negatives) {
        score_doc(n);
    }
    return ad::concat(scores);
}

Var contrastive_distribution(const model::ModelGraph& graph, const QueryGroup& group, std::span<const TokenIds> docs)
{
    return ad::softmax(group_scores(graph, group, docs), 0);
}

Var kl_to_fixed(const std::vector<double>& p, Var logits)
{
    if (p.size() != logits.value().size()) {
        throw dimension_error("KL: distribution lengths differ");
    }
    ad::Tensor weights({p.size()});
    double entropy_term = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        weights[i] = p[i];
        if (p[i] > 0.0) {
            entropy_term += p[i] * std::log(p[i]);
        }
    }
    auto& tape = logits.tape();
    Var cross = ad::dot(tape.constant(std::move(weights)), ad::log_softmax(logits, 0));
    return ad::sub(tape.constant(ad::Tensor({1}, entropy_term)), ad::reshape(cross, {1}));
}

namespace {

std::vector<double> softmax(const std::vector<double>& x)
{
    const double mx = *std::max_element(x.begin(), x.end());
    std::vector<double> out(x.size());
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - mx);
        total += out[i];
    }
    for (auto& v : out) {
        v /= total;
    }
    return out;
}

}  // namespace

StageLoss stage_loss(const model::ModelGraph& graph, std::span<const QueryGroup> batch, std::span<const TokenIds> docs,
                     const StageConfig& config)
{
    if (batch.empty()) {
        throw input_error("empty fine-tuning batch");
    }
    auto& tape = graph.tape();
    std::vector<Var> query_reps;
    std::vector<Var> doc_reps;
    std::vector<Var> contrastive;
    std::vector<Var> distill;
    for (const auto& group : batch) {
        Var scores = group_scores(graph, group, docs, &query_reps, &doc_reps);
        Var log_p = ad::log_softmax(scores, 0);
        contrastive.push_back(ad::scale(ad::select(log_p, 0), -1.0));
        if (config.stage == 3) {
            if (!group.teacher_scores) {
                throw contract_error("stage 3 needs teacher scores for every query group");
            }
            distill.push_back(kl_to_fixed(softmax(*group.teacher_scores), scores));
        }
    }
    StageLoss out;
    out.contrastive = ad::mean(ad::concat(contrastive));
    out.distillation = distill.empty() ? tape.constant(ad::Tensor({1})) : ad::mean(ad::concat(distill));
    out.flops_query = ad::reshape(sparse::flops_regularizer(query_reps), {1});
    out.flops_doc = ad::reshape(sparse::flops_regularizer(doc_reps), {1});
    const double w = config.stage == 3 ? config.gamma : 1.0;
    out.total = ad::add(ad::add(out.distillation, ad::scale(out.contrastive, w)),
                        ad::add(ad::scale(out.flops_query, config.query_lambda()),
                                ad::scale(out.flops_doc, config.doc_lambda())));
    return out;
}

NegativePools mine_hard_negatives(std::span<const std::vector<std::uint32_t>> ranked,
                                  std::span<const std::vector<std::uint32_t>> positives, std::size_t depth,
                                  std::size_t per_query, std::size_t num_docs, std::mt19937_64& rng)
{
    if (ranked.size() != positives.size()) {
        throw dimension_error("ranked lists and positive sets differ in length");
    }
    NegativePools out;
    out.pools.resize(ranked.size());
    for (std::size_t q = 0; q < ranked.size(); ++q) {
        const std::unordered_set<std::uint32_t> pos(positives[q].begin(), positives[q].end());
        if (pos.size() + per_query > num_docs) {
            throw input_error("corpus too small to draw " + std::to_string(per_query) + " negatives");
        }
        std::vector<std::uint32_t> candidates;
        std::unordered_set<std::uint32_t> taken;
        for (std::size_t i = 0; i < std::min(depth, ranked[q].size()); ++i) {
            const auto d = ranked[q][i];
            if (!pos.contains(d) && taken.insert(d).second) {
                candidates.push_back(d);
            }
        }
        auto& pool = out.pools[q];
        for (std::size_t i = 0; i < std::min(per_query, candidates.size()); ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
            std::swap(candidates[i], candidates[pick(rng)]);
            pool.push_back(candidates[i]);
        }
        if (pool.size() < per_query) {
            ++out.backfilled;
            std::unordered_set<std::uint32_t> in_pool(pool.begin(), pool.end());
            std::uniform_int_distribution<std::uint32_t> any(0, static_cast<std::uint32_t>(num_docs - 1));
            while (pool.size() < per_query) {
                const auto d = any(rng);
                if (!pos.contains(d) && in_pool.insert(d).second) {
                    pool.push_back(d);
                }
            }
        }
    }
    return out;
}

std::string to_log_line(const StageStep& s)
{
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["epoch"] = s.epoch;
    j["loss_total"] = s.total;
    j["loss_distillation"] = s.distillation;
    j["loss_contrastive"] = s.contrastive;
    j["flops_query"] = s.flops_query;
    j["flops_doc"] = s.flops_doc;
    j["learning_rate"] = s.learning_rate;
    return j.dump();
}

StageSummary run_stage(model::TransformerWeights& weights, std::span<const TokenIds> docs,
                       std::span<const TrainingQuery> queries, const StageConfig& config,
                       const TeacherScores* teacher, const std::function<void(const StageStep&)>& on_step)
{
    config.validate();
    if (queries.empty()) {
        throw input_error("no training queries for stage " + std::to_string(config.stage));
    }
    if (config.stage == 3 && teacher == nullptr) {
        throw pipeline_order_error("stage 3 needs teacher scores");
    }
    std::vector<std::vector<std::uint32_t>> ranked;
    std::vector<std::vector<std::uint32_t>> positives;
    for (const auto& q : queries) {
        if (q.positives.empty()) {
            throw input_error("training query '" + q.id + "' has no positive document");
        }
        ranked.push_back(q.ranked);
        positives.push_back(q.positives);
    }
    const std::size_t steps_per_epoch = (queries.size() + config.batch_size - 1) / config.batch_size;
    auto adam_config = config.optimizer;
    if (adam_config.total_steps == 0) {
        adam_config.total_steps = steps_per_epoch * config.epochs;
    }
    model::Adam adam(weights, adam_config);
    std::mt19937_64 rng(config.seed + static_cast<std::uint64_t>(config.stage));
    StageSummary summary;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        auto mined = mine_hard_negatives(ranked, positives, config.mining_depth, config.negatives_per_query,
                                         docs.size(), rng);
        summary.backfilled_queries += mined.backfilled;
        std::vector<std::size_t> order(queries.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::vector<QueryGroup> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
                const auto& q = queries[order[i]];
                QueryGroup g;
                g.query = q.tokens;
                std::uniform_int_distribution<std::size_t> pick(0, q.positives.size() - 1);
                g.positive = q.positives[pick(rng)];
                g.negatives = mined.pools[order[i]];
                if (config.stage == 3) {
                    auto it = teacher->find(q.id);
                    if (it == teacher->end()) {
                        throw contract_error("no teacher scores for query '" + q.id + "'");
                    }
                    std::vector<double> scores;
                    auto lookup = [&](std::uint32_t d) {
                        auto s = it->second.find(d);
                        if (s == it->second.end()) {
                            throw contract_error("no teacher score for query '" + q.id + "' and document index "
                                                 + std::to_string(d));
                        }
                        scores.push_back(s->second);
                    };
                    lookup(g.positive);
                    for (auto n : g.negatives) {
                        lookup(n);
                    }
                    g.teacher_scores = std::move(scores);
                }
                batch.push_back(std::move(g));
            }
            StageStep rec;
            rec.step = step;
            rec.epoch = epoch;
            rec.learning_rate = adam.learning_rate_at(step);
            {
                ad::Tape tape;
                model::ModelGraph graph(tape, weights);
                auto loss = stage_loss(graph, batch, docs, config);
                rec.total = loss.total.value()[0];
                rec.distillation = loss.distillation.value()[0];
                rec.contrastive = loss.contrastive.value()[0];
                rec.flops_query = loss.flops_query.value()[0];
                rec.flops_doc = loss.flops_doc.value()[0];
                if (!std::isfinite(rec.total)) {
                    throw training_divergence_error("non-finite stage-" + std::to_string(config.stage)
                                                    + " loss at step " + std::to_string(step));
                }
                tape.backward(loss.total);
            }
            adam.step();
            summary.steps.push_back(rec);
            if (on_step) {
                on_step(rec);
            }
            ++step;
        }
    }
    return summary;
}

}  // namespace lexmae::finetune
