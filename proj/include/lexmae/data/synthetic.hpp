#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lexmae/eval/trec.hpp"
#include "lexmae/text/collection.hpp"

namespace lexmae::data {

/// Topic-mixture corpus with paraphrased keyword queries.
///
/// Every topic owns `concepts_per_topic` concepts; each concept has a primary
/// surface form (used in most documents) and a synonym (used sparingly in
/// documents, often in queries). Lexical matching therefore misses part of
/// the relevant documents, while co-occurrence statistics recover them.
struct SyntheticConfig {
    std::size_t num_docs = 1000;
    std::size_t num_queries = 1000;
    std::size_t num_topics = 8;
    std::size_t concepts_per_topic = 30;
    std::size_t background_words = 60;
    std::size_t doc_length_min = 20;
    std::size_t doc_length_max = 40;
    /// Token mixture: primary topic, secondary topic, background.
    double primary_share = 0.70;
    double secondary_share = 0.12;
    /// Probability that a document occurrence of a concept uses the synonym.
    double doc_synonym_rate = 0.15;
    std::size_t query_keywords_min = 3;
    std::size_t query_keywords_max = 5;
    /// Probability that a query keyword is replaced by its synonym.
    double query_synonym_rate = 0.5;
    /// Probability of adding one background word to a query.
    double query_noise_rate = 0.3;
    /// Fraction of queries held out for evaluation.
    double heldout_fraction = 0.25;
    /// Teacher scores are this multiple of the smoothed overlap.
    double teacher_scale = 20.0;
    std::uint64_t seed = 42;

    void validate() const;
    friend bool operator==(const SyntheticConfig&, const SyntheticConfig&) = default;
};

struct TeacherRecord {
    std::string query;
    std::string doc;
    double score = 0.0;
};

struct SyntheticDataset {
    std::vector<text::TextRecord> corpus;
    std::vector<text::TextRecord> train_queries;
    std::vector<text::TextRecord> heldout_queries;
    /// Grade 2 for the source document, 1 for other documents containing
    /// every query concept in either surface form.
    eval::Qrels qrels;
    /// One score per (training query, document) pair.
    std::vector<TeacherRecord> teacher;
};

SyntheticDataset generate(const SyntheticConfig& config);

/// Teacher file: "qid \t docid \t score" lines, scores printed with %.17g.
std::string format_teacher(const std::vector<TeacherRecord>& records);
std::vector<TeacherRecord> parse_teacher(const std::string& contents, const std::string& source = "<memory>");
std::vector<TeacherRecord> read_teacher(const std::filesystem::path& path);

struct DatasetPaths {
    std::filesystem::path corpus;
    std::filesystem::path train_queries;
    std::filesystem::path heldout_queries;
    std::filesystem::path qrels;
    std::filesystem::path teacher;
};

/// Standard file names under `dir`.
DatasetPaths dataset_paths(const std::filesystem::path& dir);

/// Writes all five files atomically.
void write_dataset(const SyntheticDataset& dataset, const DatasetPaths& paths);

}  // namespace lexmae::data
