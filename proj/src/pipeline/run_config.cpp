#include "lexmae/pipeline/run_config.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "lexmae/util/binary_io.hpp"
#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"

namespace lexmae::pipeline {

using json = nlohmann::json;

namespace {

/// Reads keys out of one JSON object, remembering which ones were consumed
/// so leftovers can be reported as unknown.
class Section {
  public:
    Section(const json& object, std::string where) : m_object(object), m_where(std::move(where))
    {
        if (!m_object.is_object()) {
            throw config_error(m_where + ": expected an object");
        }
    }

    template <typename T>
    void get(const char* key, T& out)
    {
        auto it = m_object.find(key);
        if (it == m_object.end()) {
            return;
        }
        m_seen.insert(key);
        try {
            out = it->template get<T>();
        }
        catch (const json::exception&) {
            throw config_error(m_where + "." + key + ": wrong type");
        }
    }

    void get(const char* key, std::filesystem::path& out)
    {
        std::string s = out.string();
        get(key, s);
        out = s;
    }

    void get(const char* key, std::optional<double>& out)
    {
        auto it = m_object.find(key);
        if (it == m_object.end() || it->is_null()) {
            m_seen.insert(key);
            return;
        }
        double v = 0.0;
        get(key, v);
        out = v;
    }

    template <typename Fn>
    void section(const char* key, Fn&& fn)
    {
        auto it = m_object.find(key);
        if (it == m_object.end()) {
            return;
        }
        m_seen.insert(key);
        Section inner(*it, m_where + "." + key);
        fn(inner);
        inner.finish();
    }

    [[nodiscard]] const json* raw(const char* key)
    {
        auto it = m_object.find(key);
        if (it == m_object.end()) {
            return nullptr;
        }
        m_seen.insert(key);
        return &*it;
    }

    [[nodiscard]] const std::string& where() const { return m_where; }

    void finish() const
    {
        for (const auto& [key, value] : m_object.items()) {
            if (!m_seen.contains(key)) {
                throw config_error(m_where + ": unknown key '" + key + "'");
            }
        }
    }

  private:
    const json& m_object;
    std::string m_where;
    std::set<std::string> m_seen;
};

json adam_to_json(const model::AdamConfig& c)
{
    return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},       {"beta2", c.beta2},
            {"epsilon", c.epsilon},             {"weight_decay", c.weight_decay}, {"clip_norm", c.clip_norm},
            {"warmup_steps", c.warmup_steps},   {"total_steps", c.total_steps}};
}

void adam_from(Section& s, model::AdamConfig& c)
{
    s.get("learning_rate", c.learning_rate);
    s.get("beta1", c.beta1);
    s.get("beta2", c.beta2);
    s.get("epsilon", c.epsilon);
    s.get("weight_decay", c.weight_decay);
    s.get("clip_norm", c.clip_norm);
    s.get("warmup_steps", c.warmup_steps);
    s.get("total_steps", c.total_steps);
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json stage_to_json(const finetune::StageConfig& c)
{
    return {{"stage", c.stage},
            {"lambda", c.lambda},
            {"lambda_query", optional_to_json(c.lambda_query)},
            {"lambda_doc", optional_to_json(c.lambda_doc)},
            {"gamma", c.gamma},
            {"negatives_per_query", c.negatives_per_query},
            {"mining_depth", c.mining_depth},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"optimizer", adam_to_json(c.optimizer)}};
}

json to_json(const RunConfig& c, bool with_environment)
{
    json j;
    j["seed"] = c.seed;
    if (with_environment) {
        j["paths"] = {{"corpus", c.paths.corpus.string()},
                      {"train_queries", c.paths.train_queries.string()},
                      {"heldout_queries", c.paths.heldout_queries.string()},
                      {"qrels", c.paths.qrels.string()},
                      {"teacher", c.paths.teacher.string()},
                      {"output", c.paths.output.string()}};
        j["threads"] = c.threads;
    }
    j["tokenizer"] = {{"max_vocab", c.tokenizer.max_vocab}, {"max_length", c.tokenizer.max_length}};
    j["model"] = {{"vocab_size", c.model.vocab_size},
                  {"hidden_size", c.model.hidden_size},
                  {"encoder_layers", c.model.encoder_layers},
                  {"decoder_layers", c.model.decoder_layers},
                  {"attention_heads", c.model.attention_heads},
                  {"max_sequence_length", c.model.max_sequence_length},
                  {"ffn_multiplier", c.model.ffn_multiplier},
                  {"init_std", c.model.init_std},
                  {"layer_norm_epsilon", c.model.layer_norm_epsilon},
                  {"lm_head_layout", model::to_string(c.layout)}};
    const auto& p = c.pretrain;
    j["pretrain"] = {{"alpha", p.alpha},
                     {"beta", p.beta},
                     {"bottleneck", pretrain::to_string(p.bottleneck)},
                     {"strategy", pretrain::to_string(p.strategy)},
                     {"embedding_grad_through_bottleneck", p.embedding_grad_through_bottleneck},
                     {"batch_size", p.batch_size},
                     {"steps", p.steps},
                     {"optimizer", adam_to_json(p.optimizer)}};
    j["stages"] = json::array();
    for (const auto& s : c.stages) {
        j["stages"].push_back(stage_to_json(s));
    }
    j["topk_sweep"] = c.topk_sweep;
    j["search_depth"] = c.search_depth;
    const auto& y = c.synthetic;
    j["synthetic"] = {{"num_docs", y.num_docs},
                      {"num_queries", y.num_queries},
                      {"num_topics", y.num_topics},
                      {"concepts_per_topic", y.concepts_per_topic},
                      {"background_words", y.background_words},
                      {"doc_length_min", y.doc_length_min},
                      {"doc_length_max", y.doc_length_max},
                      {"primary_share", y.primary_share},
                      {"secondary_share", y.secondary_share},
                      {"doc_synonym_rate", y.doc_synonym_rate},
                      {"query_keywords_min", y.query_keywords_min},
                      {"query_keywords_max", y.query_keywords_max},
                      {"query_synonym_rate", y.query_synonym_rate},
                      {"query_noise_rate", y.query_noise_rate},
                      {"heldout_fraction", y.heldout_fraction},
                      {"teacher_scale", y.teacher_scale}};
    return j;
}

template <typename E, typename Parse>
void enum_from(Section& s, const char* key, E& out, Parse parse)
{
    std::string name;
    s.get(key, name);
    if (!name.empty()) {
        try {
            out = parse(name);
        }
        catch (const error& e) {
            throw config_error(s.where() + "." + key + ": " + e.what());
        }
    }
}

}  // namespace

RunConfig RunConfig::defaults(const std::filesystem::path& data_dir, const std::filesystem::path& output_dir)
{
    RunConfig c;
    const auto files = data::dataset_paths(data_dir);
    c.paths = {files.corpus, files.train_queries, files.heldout_queries, files.qrels, files.teacher, output_dir};
    // Training from scratch: a wider init and a shorter second-moment horizon
    // leave the unigram plateau several hundred steps earlier.
    c.model.init_std = 0.05;
    c.pretrain.optimizer.beta2 = 0.98;
    c.pretrain.optimizer.warmup_steps = 20;
    c.pretrain.steps = 1000;
    for (int s = 1; s <= 3; ++s) {
        auto stage = finetune::StageConfig::defaults(s, 0);
        if (s == 1) {
            stage.mining_depth = 0;
        }
        c.stages.push_back(stage);
    }
    c.resolve(0);
    return c;
}

void RunConfig::resolve(std::size_t corpus_size)
{
    pretrain.seed = seed;
    synthetic.seed = seed;
    for (auto& s : stages) {
        s.seed = seed;
        if (s.stage == 1 && s.mining_depth == 0 && corpus_size > 0) {
            s.mining_depth = finetune::StageConfig::defaults(1, corpus_size).mining_depth;
        }
    }
}

void RunConfig::validate() const
{
    model.validate();
    pretrain.validate();
    synthetic.validate();
    if (stages.size() != 3) {
        throw config_error("stages: expected exactly three stage sections");
    }
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i].stage != static_cast<int>(i + 1)) {
            throw config_error("stages[" + std::to_string(i) + "].stage must be " + std::to_string(i + 1));
        }
        if (stages[i].mining_depth != 0) {
            stages[i].validate();
        }
    }
    if (tokenizer.max_vocab != model.vocab_size) {
        throw config_error("tokenizer.max_vocab (" + std::to_string(tokenizer.max_vocab)
                           + ") must equal model.vocab_size (" + std::to_string(model.vocab_size) + ")");
    }
    if (tokenizer.max_length < 3 || tokenizer.max_length > model.max_sequence_length) {
        throw config_error("tokenizer.max_length must lie in [3, model.max_sequence_length]");
    }
    if (topk_sweep.empty() || std::find(topk_sweep.begin(), topk_sweep.end(), 0) != topk_sweep.end()) {
        throw config_error("topk_sweep must be a non-empty list of positive K values");
    }
    if (search_depth == 0) {
        throw config_error("search_depth must be positive");
    }
}

const finetune::StageConfig& RunConfig::stage(int s) const
{
    if (s < 1 || s > static_cast<int>(stages.size())) {
        throw config_error("no configuration for stage " + std::to_string(s));
    }
    return stages[static_cast<std::size_t>(s - 1)];
}

std::string serialize(const RunConfig& config) { return to_json(config, true).dump(2) + "\n"; }

RunConfig parse_run_config(const std::string& contents, const std::string& source)
{
    json j;
    try {
        j = json::parse(contents);
    }
    catch (const json::parse_error& e) {
        throw config_error(source + ": " + e.what());
    }
    RunConfig c = RunConfig::defaults();
    Section root(j, source);
    root.get("seed", c.seed);
    root.get("threads", c.threads);
    root.section("paths", [&](Section& s) {
        s.get("corpus", c.paths.corpus);
        s.get("train_queries", c.paths.train_queries);
        s.get("heldout_queries", c.paths.heldout_queries);
        s.get("qrels", c.paths.qrels);
        s.get("teacher", c.paths.teacher);
        s.get("output", c.paths.output);
    });
    root.section("tokenizer", [&](Section& s) {
        s.get("max_vocab", c.tokenizer.max_vocab);
        s.get("max_length", c.tokenizer.max_length);
    });
    root.section("model", [&](Section& s) {
        s.get("vocab_size", c.model.vocab_size);
        s.get("hidden_size", c.model.hidden_size);
        s.get("encoder_layers", c.model.encoder_layers);
        s.get("decoder_layers", c.model.decoder_layers);
        s.get("attention_heads", c.model.attention_heads);
        s.get("max_sequence_length", c.model.max_sequence_length);
        s.get("ffn_multiplier", c.model.ffn_multiplier);
        s.get("init_std", c.model.init_std);
        s.get("layer_norm_epsilon", c.model.layer_norm_epsilon);
        enum_from(s, "lm_head_layout", c.layout, model::lm_head_layout_from_string);
    });
    root.section("pretrain", [&](Section& s) {
        auto& p = c.pretrain;
        s.get("alpha", p.alpha);
        s.get("beta", p.beta);
        enum_from(s, "bottleneck", p.bottleneck, pretrain::bottleneck_variant_from_string);
        enum_from(s, "strategy", p.strategy, pretrain::masking_strategy_from_string);
        s.get("embedding_grad_through_bottleneck", p.embedding_grad_through_bottleneck);
        s.get("batch_size", p.batch_size);
        s.get("steps", p.steps);
        s.section("optimizer", [&](Section& o) { adam_from(o, p.optimizer); });
    });
    if (const json* stages = root.raw("stages")) {
        if (!stages->is_array()) {
            throw config_error(source + ".stages: expected an array");
        }
        c.stages.clear();
        for (std::size_t i = 0; i < stages->size(); ++i) {
            Section s((*stages)[i], source + ".stages[" + std::to_string(i) + "]");
            int number = static_cast<int>(i + 1);
            s.get("stage", number);
            auto stage = finetune::StageConfig::defaults(std::clamp(number, 1, 3), 0);
            if (number == 1) {
                stage.mining_depth = 0;
            }
            stage.stage = number;
            s.get("lambda", stage.lambda);
            s.get("lambda_query", stage.lambda_query);
            s.get("lambda_doc", stage.lambda_doc);
            s.get("gamma", stage.gamma);
            s.get("negatives_per_query", stage.negatives_per_query);
            s.get("mining_depth", stage.mining_depth);
            s.get("epochs", stage.epochs);
            s.get("batch_size", stage.batch_size);
            s.section("optimizer", [&](Section& o) { adam_from(o, stage.optimizer); });
            s.finish();
            c.stages.push_back(stage);
        }
    }
    root.get("topk_sweep", c.topk_sweep);
    root.get("search_depth", c.search_depth);
    root.section("synthetic", [&](Section& s) {
        auto& y = c.synthetic;
        s.get("num_docs", y.num_docs);
        s.get("num_queries", y.num_queries);
        s.get("num_topics", y.num_topics);
        s.get("concepts_per_topic", y.concepts_per_topic);
        s.get("background_words", y.background_words);
        s.get("doc_length_min", y.doc_length_min);
        s.get("doc_length_max", y.doc_length_max);
        s.get("primary_share", y.primary_share);
        s.get("secondary_share", y.secondary_share);
        s.get("doc_synonym_rate", y.doc_synonym_rate);
        s.get("query_keywords_min", y.query_keywords_min);
        s.get("query_keywords_max", y.query_keywords_max);
        s.get("query_synonym_rate", y.query_synonym_rate);
        s.get("query_noise_rate", y.query_noise_rate);
        s.get("heldout_fraction", y.heldout_fraction);
        s.get("teacher_scale", y.teacher_scale);
    });
    root.finish();
    c.resolve(0);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    return parse_run_config(util::read_file(path), path.string());
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config)
{
    util::write_file_atomic(path, serialize(config));
}

std::uint64_t config_hash(const RunConfig& config) { return util::fnv1a64(to_json(config, false).dump()); }

}  // namespace lexmae::pipeline
