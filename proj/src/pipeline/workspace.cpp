#include "lexmae/pipeline/workspace.hpp"

#include <algorithm>
#include <unordered_map>

#include "lexmae/data/synthetic.hpp"
#include "lexmae/finetune/stage.hpp"
#include "lexmae/index/bm25.hpp"
#include "lexmae/model/checkpoint.hpp"
#include "lexmae/pretrain/pretrainer.hpp"
#include "lexmae/sparse/encoder.hpp"
#include "lexmae/sparse/vector_file.hpp"
#include "lexmae/text/tokenizer.hpp"
#include "lexmae/util/binary_io.hpp"
#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"
#include "lexmae/util/parallel.hpp"

namespace lexmae::pipeline {

namespace fs = std::filesystem;

fs::path Layout::checkpoint(const std::string& model) const { return m_root / "checkpoints" / (model + ".ckpt"); }
fs::path Layout::log(const std::string& name) const { return m_root / "logs" / (name + ".jsonl"); }
fs::path Layout::vectors(const std::string& model) const { return m_root / "vectors" / (model + ".vec"); }

fs::path Layout::quantized(const std::string& model, std::size_t k) const
{
    return m_root / "vectors" / (model + ".top" + std::to_string(k) + ".qvec");
}

fs::path Layout::index(const std::string& model, std::size_t k) const
{
    return m_root / "index" / (model + ".top" + std::to_string(k) + ".idx");
}

fs::path Layout::run(const std::string& system, const std::string& split) const
{
    return m_root / "runs" / (system + "." + split + ".trec");
}

fs::path Layout::metrics(const std::string& system, const std::string& split) const
{
    return m_root / "metrics" / (system + "." + split);
}

std::string model_name(int stage) { return stage == 0 ? "pretrained" : "stage" + std::to_string(stage); }

std::string system_name(const std::string& model, std::size_t k)
{
    return k == 0 ? model : model + ".top" + std::to_string(k);
}

std::string to_string(Split split) { return split == Split::train ? "train" : "heldout"; }

Split split_from_string(const std::string& name)
{
    if (name == "train") {
        return Split::train;
    }
    if (name == "heldout") {
        return Split::heldout;
    }
    throw config_error("unknown split '" + name + "' (expected train or heldout)");
}

eval::Qrels Dataset::qrels_for(Split split) const
{
    eval::Qrels out;
    for (const auto& q : queries(split).records) {
        auto it = qrels.find(q.id);
        if (it != qrels.end()) {
            out.insert(*it);
        }
    }
    return out;
}

namespace {

std::string producer(int stage)
{
    return stage == 0 ? "lexmae pretrain" : "lexmae finetune --stage " + std::to_string(stage);
}

std::string producer(const std::string& model)
{
    for (int s = 0; s <= 3; ++s) {
        if (model == model_name(s)) {
            return producer(s);
        }
    }
    throw config_error("unknown model '" + model + "' (expected pretrained, stage1, stage2 or stage3)");
}

QuerySet tokenize_queries(std::vector<text::TextRecord> records, const text::Vocabulary& vocab, std::size_t max_len)
{
    QuerySet out;
    for (const auto& r : records) {
        out.tokens.push_back(vocab.encode(r.text, max_len));
    }
    out.records = std::move(records);
    return out;
}

std::string join_lines(const std::vector<std::string>& lines)
{
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

}  // namespace

Workspace::Workspace(RunConfig config) : m_config(std::move(config)), m_layout(m_config.paths.output)
{
    m_config.resolve(0);
    m_config.validate();
    m_hash = pipeline::config_hash(m_config);
}

void Workspace::save_config() const { save_run_config(m_layout.config(), m_config); }

void Workspace::synthesize()
{
    auto dataset = data::generate(m_config.synthetic);
    data::write_dataset(dataset, {m_config.paths.corpus, m_config.paths.train_queries, m_config.paths.heldout_queries,
                                  m_config.paths.qrels, m_config.paths.teacher});
    m_dataset.reset();
    save_config();
}

text::Vocabulary Workspace::build_vocab()
{
    util::require_artifact(m_config.paths.corpus, "corpus", "lexmae synth");
    const auto corpus = text::read_tsv(m_config.paths.corpus);
    std::vector<std::string> texts;
    for (const auto& r : corpus) {
        texts.push_back(r.text);
    }
    auto vocab = text::Vocabulary::build(texts, m_config.tokenizer.max_vocab);
    vocab.save(m_layout.vocab());
    m_dataset.reset();
    save_config();
    return vocab;
}

const Dataset& Workspace::dataset()
{
    if (m_dataset) {
        return *m_dataset;
    }
    const auto& p = m_config.paths;
    util::require_artifact(p.corpus, "corpus", "lexmae synth");
    util::require_artifact(p.train_queries, "training queries", "lexmae synth");
    util::require_artifact(p.heldout_queries, "held-out queries", "lexmae synth");
    util::require_artifact(p.qrels, "qrels", "lexmae synth");
    util::require_artifact(m_layout.vocab(), "vocabulary", "lexmae build-vocab");
    auto ds = std::make_unique<Dataset>();
    ds->vocab = text::Vocabulary::load(m_layout.vocab());
    if (ds->vocab.size() > m_config.model.vocab_size) {
        throw config_error("vocabulary has " + std::to_string(ds->vocab.size()) + " entries but model.vocab_size is "
                           + std::to_string(m_config.model.vocab_size));
    }
    const auto corpus_bytes = util::read_file(p.corpus);
    ds->corpus_hash = util::fnv1a64(corpus_bytes);
    ds->corpus = text::parse_tsv(corpus_bytes, p.corpus.string());
    if (ds->corpus.empty()) {
        throw input_error("corpus '" + p.corpus.string() + "' is empty");
    }
    for (const auto& r : ds->corpus) {
        ds->docs.push_back(ds->vocab.encode(r.text, m_config.tokenizer.max_length));
    }
    ds->train = tokenize_queries(text::read_tsv(p.train_queries), ds->vocab, m_config.tokenizer.max_length);
    ds->heldout = tokenize_queries(text::read_tsv(p.heldout_queries), ds->vocab, m_config.tokenizer.max_length);
    ds->qrels = eval::read_qrels(p.qrels);
    m_config.resolve(ds->corpus.size());
    m_dataset = std::move(ds);
    return *m_dataset;
}

model::TransformerWeights Workspace::load_model(const std::string& model)
{
    const auto path = m_layout.checkpoint(model);
    util::require_artifact(path, model + " checkpoint", producer(model));
    auto ckpt = model::load_checkpoint(path);
    if (ckpt.weights.config() != m_config.model || ckpt.weights.layout() != m_config.layout) {
        throw config_error("checkpoint '" + path.string() + "' was trained with a different model configuration");
    }
    return std::move(ckpt.weights);
}

void Workspace::pretrain()
{
    const auto& ds = dataset();
    model::TransformerWeights weights(m_config.model, m_config.layout, m_config.seed);
    pretrain::Pretrainer trainer(weights, ds.docs, m_config.pretrain);
    std::vector<std::string> log;
    trainer.run([&](const pretrain::StepRecord& r) { log.push_back(pretrain::to_log_line(r)); });
    util::write_file_atomic(m_layout.log("pretrain"), join_lines(log));
    model::save_checkpoint(m_layout.checkpoint(model_name(0)), weights, m_hash);
    save_config();
}

std::vector<sparse::SparseLexiconVector> Workspace::encode_all(const model::TransformerWeights& weights,
                                                               const std::vector<TokenIds>& texts) const
{
    std::vector<sparse::SparseLexiconVector> out(texts.size());
    util::parallel_for(
        texts.size(), [&](std::size_t i) { out[i] = sparse::encode_lexicon(weights, texts[i]); }, m_config.threads);
    return out;
}

std::vector<std::vector<std::uint32_t>> Workspace::retrieve_training_candidates(int stage, std::size_t depth)
{
    const auto& ds = dataset();
    const auto& queries = ds.train;
    std::vector<std::vector<std::uint32_t>> ranked(queries.records.size());
    if (stage == 1) {
        std::vector<std::vector<std::string>> docs;
        for (const auto& r : ds.corpus) {
            docs.push_back(text::tokenize(r.text));
        }
        index::Bm25Index bm25(docs);
        util::parallel_for(
            ranked.size(),
            [&](std::size_t q) {
                for (const auto& hit : bm25.search(text::tokenize(queries.records[q].text), depth)) {
                    ranked[q].push_back(hit.doc);
                }
            },
            m_config.threads);
        return ranked;
    }
    // Hard negatives come from the previous stage's retriever.
    const auto weights = load_model(model_name(stage - 1));
    const auto doc_vectors = encode_all(weights, ds.docs);
    std::vector<sparse::VectorRecord<sparse::QuantizedVector>> records;
    for (std::size_t d = 0; d < doc_vectors.size(); ++d) {
        records.push_back({ds.corpus[d].id, sparse::quantize(doc_vectors[d])});
    }
    const auto idx = index::ImpactIndex::build(records, m_config.model.vocab_size, m_hash, ds.corpus_hash);
    const auto query_vectors = encode_all(weights, queries.tokens);
    util::parallel_for(
        ranked.size(),
        [&](std::size_t q) {
            for (const auto& hit : idx.search(sparse::quantize(query_vectors[q]), depth)) {
                ranked[q].push_back(hit.doc);
            }
        },
        m_config.threads);
    return ranked;
}

void Workspace::finetune(int stage)
{
    const auto& cfg = m_config.stage(stage);
    const auto previous = m_layout.checkpoint(model_name(stage - 1));
    util::require_artifact(previous, model_name(stage - 1) + " checkpoint", producer(stage - 1));
    if (stage == 3) {
        util::require_artifact(m_config.paths.teacher, "teacher scores", "lexmae synth");
    }
    const auto& ds = dataset();
    cfg.validate();
    auto weights = load_model(model_name(stage - 1));

    std::unordered_map<std::string, std::uint32_t> doc_index;
    for (std::uint32_t d = 0; d < ds.corpus.size(); ++d) {
        doc_index.emplace(ds.corpus[d].id, d);
    }
    const auto ranked = retrieve_training_candidates(stage, cfg.mining_depth);
    std::vector<finetune::TrainingQuery> queries;
    for (std::size_t q = 0; q < ds.train.records.size(); ++q) {
        finetune::TrainingQuery tq;
        tq.id = ds.train.records[q].id;
        tq.tokens = ds.train.tokens[q];
        if (auto it = ds.qrels.find(tq.id); it != ds.qrels.end()) {
            for (const auto& [doc, grade] : it->second) {
                auto d = doc_index.find(doc);
                if (grade > 0 && d != doc_index.end()) {
                    tq.positives.push_back(d->second);
                }
            }
        }
        if (tq.positives.empty()) {
            continue;
        }
        std::sort(tq.positives.begin(), tq.positives.end());
        tq.ranked = ranked[q];
        queries.push_back(std::move(tq));
    }

    finetune::TeacherScores teacher;
    if (stage == 3) {
        for (const auto& r : data::read_teacher(m_config.paths.teacher)) {
            auto d = doc_index.find(r.doc);
            if (d == doc_index.end()) {
                throw input_error("teacher scores name unknown document '" + r.doc + "'");
            }
            teacher[r.query][d->second] = r.score;
        }
    }
    std::vector<std::string> log;
    finetune::run_stage(weights, ds.docs, queries, cfg, stage == 3 ? &teacher : nullptr,
                        [&](const finetune::StageStep& s) { log.push_back(finetune::to_log_line(s)); });
    util::write_file_atomic(m_layout.log(model_name(stage)), join_lines(log));
    model::save_checkpoint(m_layout.checkpoint(model_name(stage)), weights, m_hash);
    save_config();
}

EncodeReport Workspace::encode(const std::string& model, const std::vector<std::size_t>& topk)
{
    const auto& ds = dataset();
    const auto weights = load_model(model);
    const auto full = encode_all(weights, ds.docs);
    EncodeReport report;
    report.inference_calls = full.size();

    const sparse::VectorFileInfo info{m_config.model.vocab_size, m_hash};
    sparse::SparseFile sparse_file{info, {}};
    for (std::size_t d = 0; d < full.size(); ++d) {
        sparse_file.records.push_back({ds.corpus[d].id, full[d]});
    }
    sparse::save(m_layout.vectors(model), sparse_file);

    // Every K is derived from the same full representation.
    for (std::size_t k : topk) {
        sparse::QuantizedFile q{info, {}};
        double nnz = 0.0;
        for (std::size_t d = 0; d < full.size(); ++d) {
            auto v = sparse::quantize(k == 0 ? full[d] : sparse::topk_sparsify(full[d], k));
            nnz += static_cast<double>(v.nnz());
            q.records.push_back({ds.corpus[d].id, std::move(v)});
        }
        sparse::save(m_layout.quantized(model, k), q);
        report.mean_nnz.emplace_back(k, nnz / static_cast<double>(full.size()));
    }
    save_config();
    return report;
}

index::StorageReport Workspace::build_index(const std::string& model, std::size_t k)
{
    const auto path = m_layout.quantized(model, k);
    util::require_artifact(path, "quantized vectors",
                           "lexmae encode --model " + model + " --topk " + std::to_string(k));
    const auto& ds = dataset();
    const auto file = sparse::load_quantized_file(path);
    if (file.info.dimension != m_config.model.vocab_size) {
        throw config_error("vectors '" + path.string() + "' have dimension " + std::to_string(file.info.dimension)
                           + ", expected " + std::to_string(m_config.model.vocab_size));
    }
    const auto idx = index::ImpactIndex::build(file.records, file.info.dimension, m_hash, ds.corpus_hash);
    idx.save(m_layout.index(model, k));
    save_config();
    return idx.storage();
}

eval::Run Workspace::search(const std::string& model, std::size_t k, Split split, std::size_t depth)
{
    const auto path = m_layout.index(model, k);
    util::require_artifact(path, "index", "lexmae index --model " + model + " --topk " + std::to_string(k));
    const auto& ds = dataset();
    const auto idx = index::ImpactIndex::load(path);
    if (idx.corpus_hash() != ds.corpus_hash) {
        throw pipeline_order_error("index '" + path.string() + "' was built from a different corpus; re-run `lexmae index`");
    }
    const auto weights = load_model(model);
    const auto& queries = ds.queries(split);
    const auto vectors = encode_all(weights, queries.tokens);
    std::vector<index::SearchResult> results(vectors.size());
    util::parallel_for(
        vectors.size(), [&](std::size_t q) { results[q] = idx.search(sparse::quantize(vectors[q]), depth); },
        m_config.threads);
    const auto system = system_name(model, k);
    eval::Run run;
    run.tag = eval::make_run_tag(system, ds.corpus_hash, m_hash);
    for (std::size_t q = 0; q < results.size(); ++q) {
        auto& ranked = run.queries[queries.records[q].id];
        for (const auto& hit : results[q]) {
            ranked.push_back({idx.doc_name(hit.doc), static_cast<double>(hit.score)});
        }
    }
    eval::write_run(m_layout.run(system, to_string(split)), run);
    save_config();
    return run;
}

eval::Run Workspace::bm25(Split split, std::size_t depth)
{
    const auto& ds = dataset();
    std::vector<std::vector<std::string>> docs;
    for (const auto& r : ds.corpus) {
        docs.push_back(text::tokenize(r.text));
    }
    const index::Bm25Index bm25(docs);
    const auto& queries = ds.queries(split);
    std::vector<std::vector<index::ScoredDoc>> results(queries.records.size());
    util::parallel_for(
        results.size(),
        [&](std::size_t q) { results[q] = bm25.search(text::tokenize(queries.records[q].text), depth); },
        m_config.threads);
    eval::Run run;
    run.tag = eval::make_run_tag("bm25", ds.corpus_hash, m_hash);
    for (std::size_t q = 0; q < results.size(); ++q) {
        auto& ranked = run.queries[queries.records[q].id];
        for (const auto& hit : results[q]) {
            ranked.push_back({ds.corpus[hit.doc].id, hit.score});
        }
    }
    eval::write_run(m_layout.run("bm25", to_string(split)), run);
    save_config();
    return run;
}

std::vector<eval::MetricReport> Workspace::evaluate(const std::vector<fs::path>& runs, Split split)
{
    util::require_artifact(m_config.paths.qrels, "qrels", "lexmae synth");
    const auto& ds = dataset();
    const auto qrels = ds.qrels_for(split);
    std::vector<eval::MetricReport> reports;
    for (const auto& path : runs) {
        util::require_artifact(path, "run", "lexmae search");
        const auto run = eval::read_run(path);
        const auto tag = eval::parse_run_tag(run.tag);
        if (tag.corpus_hash != ds.corpus_hash) {
            throw evaluation_error("run '" + path.string() + "' was produced on a different corpus than '"
                                   + m_config.paths.corpus.string() + "'");
        }
        auto report = eval::evaluate(tag.system, run, qrels);
        eval::write_reports(m_layout.metrics(tag.system, to_string(split)), {report});
        reports.push_back(std::move(report));
    }
    save_config();
    return reports;
}

eval::MetricReport Workspace::retrieve_and_evaluate(const std::string& model, Split split)
{
    encode(model, {0});
    build_index(model, 0);
    search(model, 0, split, m_config.search_depth);
    return evaluate({m_layout.run(system_name(model, 0), to_string(split))}, split).front();
}

eval::MetricReport Workspace::zero_shot() { return retrieve_and_evaluate(model_name(0)); }

PipelineReport Workspace::run_all(const std::function<void(const std::string&)>& progress)
{
    auto note = [&](const std::string& what) {
        if (progress) {
            progress(what);
        }
    };
    PipelineReport report;
    note("build-vocab");
    build_vocab();
    note("bm25");
    bm25(Split::heldout, m_config.search_depth);
    report.heldout.push_back(evaluate({m_layout.run("bm25", "heldout")}, Split::heldout).front());
    note("pretrain");
    pretrain();
    note("zero-shot");
    report.heldout.push_back(zero_shot());
    for (int s = 1; s <= 3; ++s) {
        note("finetune --stage " + std::to_string(s));
        finetune(s);
        report.heldout.push_back(retrieve_and_evaluate(model_name(s)));
    }
    note("top-K sweep");
    const auto final_model = model_name(3);
    encode(final_model, m_config.topk_sweep);
    for (std::size_t k : m_config.topk_sweep) {
        report.storage.emplace_back(k, build_index(final_model, k));
        search(final_model, k, Split::heldout, m_config.search_depth);
        report.heldout.push_back(
            evaluate({m_layout.run(system_name(final_model, k), "heldout")}, Split::heldout).front());
    }
    eval::write_reports(m_layout.summary(), report.heldout);
    save_config();
    return report;
}

}  // namespace lexmae::pipeline
