#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lexmae/eval/metrics.hpp"
#include "lexmae/eval/trec.hpp"
#include "lexmae/index/impact_index.hpp"
#include "lexmae/model/weights.hpp"
#include "lexmae/pipeline/run_config.hpp"
#include "lexmae/sparse/vectors.hpp"
#include "lexmae/text/collection.hpp"
#include "lexmae/text/vocabulary.hpp"

namespace lexmae::pipeline {

using TokenIds = std::vector<std::int32_t>;

/// Artifact locations under the output directory:
///
///   config.json                       resolved configuration of the last command
///   vocab.txt                         vocabulary, one token per line
///   checkpoints/<model>.ckpt          model ∈ {pretrained, stage1, stage2, stage3}
///   logs/<name>.jsonl                 training logs
///   vectors/<model>.vec               full sparse document vectors
///   vectors/<model>.top<K>.qvec       quantized vectors (K = 0: no sparsification)
///   index/<model>.top<K>.idx          impact index
///   runs/<system>.<split>.trec        TREC run; system = bm25 | <model> | <model>.top<K>
///   metrics/<system>.<split>.{tsv,json}
///   metrics/summary.{tsv,json}        written by the full pipeline
class Layout {
  public:
    explicit Layout(std::filesystem::path root) : m_root(std::move(root)) {}

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return m_root; }
    [[nodiscard]] std::filesystem::path config() const { return m_root / "config.json"; }
    [[nodiscard]] std::filesystem::path vocab() const { return m_root / "vocab.txt"; }
    [[nodiscard]] std::filesystem::path checkpoint(const std::string& model) const;
    [[nodiscard]] std::filesystem::path log(const std::string& name) const;
    [[nodiscard]] std::filesystem::path vectors(const std::string& model) const;
    [[nodiscard]] std::filesystem::path quantized(const std::string& model, std::size_t k) const;
    [[nodiscard]] std::filesystem::path index(const std::string& model, std::size_t k) const;
    [[nodiscard]] std::filesystem::path run(const std::string& system, const std::string& split) const;
    [[nodiscard]] std::filesystem::path metrics(const std::string& system, const std::string& split) const;
    [[nodiscard]] std::filesystem::path summary() const { return m_root / "metrics" / "summary"; }

  private:
    std::filesystem::path m_root;
};

/// "pretrained" for 0, "stage<s>" otherwise.
std::string model_name(int stage);
/// "<model>" for K = 0, "<model>.top<K>" otherwise.
std::string system_name(const std::string& model, std::size_t k);

enum class Split { train, heldout };
std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct QuerySet {
    std::vector<text::TextRecord> records;
    std::vector<TokenIds> tokens;
};

/// Tokenized inputs of a run, loaded once per command.
struct Dataset {
    text::Vocabulary vocab;
    std::vector<text::TextRecord> corpus;
    std::vector<TokenIds> docs;
    QuerySet train;
    QuerySet heldout;
    eval::Qrels qrels;
    /// FNV-1a of the corpus file bytes; embedded in indexes and run tags.
    std::uint64_t corpus_hash = 0;

    [[nodiscard]] const QuerySet& queries(Split split) const { return split == Split::train ? train : heldout; }
    /// The qrels restricted to one split's queries.
    [[nodiscard]] eval::Qrels qrels_for(Split split) const;
};

struct EncodeReport {
    /// Model forward passes; one per document however many K values are derived.
    std::size_t inference_calls = 0;
    /// Per K (0 = full): mean non-zero impacts per document.
    std::vector<std::pair<std::size_t, double>> mean_nnz;
};

struct PipelineReport {
    std::vector<eval::MetricReport> heldout;
    /// Per K of the sweep, for the final model: index storage.
    std::vector<std::pair<std::size_t, index::StorageReport>> storage;
};

/// One output directory plus the configuration that drives it. Every
/// command checks its prerequisite artifacts (pipeline_order_error naming the
/// command that produces them), writes atomically, and saves the resolved
/// configuration as config.json.
class Workspace {
  public:
    explicit Workspace(RunConfig config);

    [[nodiscard]] const RunConfig& config() const noexcept { return m_config; }
    [[nodiscard]] const Layout& layout() const noexcept { return m_layout; }
    [[nodiscard]] std::uint64_t config_hash() const noexcept { return m_hash; }

    /// Writes the synthetic dataset to the configured input paths.
    void synthesize();
    text::Vocabulary build_vocab();
    /// Trains from scratch and writes checkpoints/pretrained.ckpt.
    void pretrain();
    /// Stage s starts from the stage s−1 checkpoint (the pre-trained one for s = 1).
    /// Stage 1 mines from BM25; stages 2 and 3 from the previous stage's retriever.
    void finetune(int stage);
    /// Encodes the corpus once and writes the full vectors plus one quantized
    /// file per K (0 meaning no sparsification).
    EncodeReport encode(const std::string& model, const std::vector<std::size_t>& topk);
    index::StorageReport build_index(const std::string& model, std::size_t k);
    /// Queries are encoded in full, never sparsified.
    eval::Run search(const std::string& model, std::size_t k, Split split, std::size_t depth);
    eval::Run bm25(Split split, std::size_t depth);
    /// Scores runs against the split's qrels; refuses runs built on another corpus.
    std::vector<eval::MetricReport> evaluate(const std::vector<std::filesystem::path>& runs, Split split);
    /// encode → index → search → evaluate for one model at K = 0.
    eval::MetricReport retrieve_and_evaluate(const std::string& model, Split split = Split::heldout);
    /// Pre-trained model, no fine-tuning.
    eval::MetricReport zero_shot();
    /// vocab → BM25 → pretrain → zero-shot → stages 1–3 (each evaluated) → K sweep.
    PipelineReport run_all(const std::function<void(const std::string&)>& progress = {});

    model::TransformerWeights load_model(const std::string& model);
    const Dataset& dataset();

  private:
    void save_config() const;
    /// Full-representation encodings of `texts` on a frozen snapshot.
    std::vector<sparse::SparseLexiconVector> encode_all(const model::TransformerWeights& weights,
                                                        const std::vector<TokenIds>& texts) const;
    std::vector<std::vector<std::uint32_t>> retrieve_training_candidates(int stage, std::size_t depth);

    RunConfig m_config;
    Layout m_layout;
    std::uint64_t m_hash = 0;
    std::unique_ptr<Dataset> m_dataset;
};

}  // namespace lexmae::pipeline
