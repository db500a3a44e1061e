#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace lexmae::index {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

struct ScoredDoc {
    std::uint32_t doc = 0;
    double score = 0.0;
};

/// Okapi BM25 over tokenized documents:
///   Σ_t IDF(t) · tf·(k1+1) / (tf + k1·(1 − b + b·len/avglen)),
///   IDF(t) = ln((N − df + 0.5)/(df + 0.5) + 1).
/// Each distinct query term counts once.
class Bm25Index {
  public:
    Bm25Index(std::span<const std::vector<std::string>> docs, Bm25Params params = {});

    [[nodiscard]] std::size_t num_docs() const noexcept { return m_lengths.size(); }
    [[nodiscard]] double average_length() const noexcept { return m_avg_length; }
    [[nodiscard]] std::uint32_t document_frequency(const std::string& term) const;
    [[nodiscard]] double idf(const std::string& term) const;

    /// Exact top-k; ties by ascending doc id; documents sharing no term are omitted.
    [[nodiscard]] std::vector<ScoredDoc> search(std::span<const std::string> query, std::size_t k) const;

  private:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };
    Bm25Params m_params;
    std::unordered_map<std::string, std::vector<Posting>> m_postings;
    std::vector<std::uint32_t> m_lengths;
    double m_avg_length = 0.0;
};

}  // namespace lexmae::index
