#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lexmae::eval {

/// query id → doc id → grade (≥ 0; positives have grade ≥ 1).
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct RankedDoc {
    std::string doc;
    double score = 0.0;
};

struct Run {
    /// query id → documents in rank order.
    std::map<std::string, std::vector<RankedDoc>> queries;
    std::string tag;
};

/// `qid 0 docid grade` per line, whitespace separated.
Qrels parse_qrels(const std::string& contents, const std::string& source = "<memory>");
Qrels read_qrels(const std::filesystem::path& path);
std::string format_qrels(const Qrels& qrels);
void write_qrels(const std::filesystem::path& path, const Qrels& qrels);

/// `qid Q0 docid rank score tag` per line. Within a query, lines are ordered
/// by their rank field. A repeated doc id within a query is a format_error.
Run parse_run(const std::string& contents, const std::string& source = "<memory>");
Run read_run(const std::filesystem::path& path);
/// Ranks are written 1-based in list order; scores with 17 significant digits.
std::string format_run(const Run& run);
void write_run(const std::filesystem::path& path, const Run& run);

/// Run tags have the form `<system>.c<corpus hash>.p<provenance hash>`
/// (hashes as 16 hex digits) so that evaluation can detect runs produced
/// against a different corpus.
std::string make_run_tag(const std::string& system, std::uint64_t corpus_hash, std::uint64_t provenance);
struct RunTag {
    std::string system;
    std::uint64_t corpus_hash = 0;
    std::uint64_t provenance = 0;
};
/// Throws format_error when the tag does not follow the scheme.
RunTag parse_run_tag(const std::string& tag);

}  // namespace lexmae::eval
