#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lexmae/sparse/vector_file.hpp"

namespace lexmae::index {

struct Hit {
    std::uint32_t doc = 0;
    std::uint64_t score = 0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

/// Ranked by score descending, ties by ascending doc id.
using SearchResult = std::vector<Hit>;

struct StorageReport {
    std::uint64_t postings = 0;
    /// 3 bytes per posting: a 2-byte doc-id delta and a 1-byte impact.
    std::uint64_t posting_bytes = 0;
    /// Header, document-name table, term dictionary, delta escapes, checksum.
    std::uint64_t overhead_bytes = 0;
    [[nodiscard]] std::uint64_t total() const noexcept { return posting_bytes + overhead_bytes; }
};

/// Immutable term → (doc, impact) posting lists. Documents are numbered in
/// the order they were given to build().
class ImpactIndex {
  public:
    ImpactIndex() = default;

    /// Throws input_error on a duplicate document name and dimension_error
    /// on a term id ≥ `dimension`.
    static ImpactIndex build(std::span<const sparse::VectorRecord<sparse::QuantizedVector>> docs,
                             std::size_t dimension, std::uint64_t provenance = 0, std::uint64_t corpus_hash = 0);

    [[nodiscard]] std::size_t num_docs() const noexcept { return m_names.size(); }
    [[nodiscard]] std::size_t dimension() const noexcept { return m_offsets.empty() ? 0 : m_offsets.size() - 1; }
    [[nodiscard]] std::uint64_t num_postings() const noexcept { return m_docs.size(); }
    [[nodiscard]] const std::string& doc_name(std::uint32_t doc) const { return m_names.at(doc); }
    [[nodiscard]] const std::vector<std::string>& doc_names() const noexcept { return m_names; }
    [[nodiscard]] std::uint64_t provenance() const noexcept { return m_provenance; }
    [[nodiscard]] std::uint64_t corpus_hash() const noexcept { return m_corpus_hash; }

    struct PostingList {
        std::span<const std::uint32_t> docs;
        std::span<const std::uint8_t> impacts;
    };
    [[nodiscard]] PostingList postings(std::uint32_t term) const;

    /// Exact top-k by Σ query_impact × doc_impact, term-at-a-time. Safe to call concurrently.
    [[nodiscard]] SearchResult search(const sparse::QuantizedVector& query, std::size_t k) const;

    /// The per-document vectors the index was built from.
    [[nodiscard]] std::vector<sparse::QuantizedVector> reconstruct() const;

    [[nodiscard]] StorageReport storage() const;

    [[nodiscard]] std::string serialize() const;
    static ImpactIndex deserialize(std::string_view bytes);
    void save(const std::filesystem::path& path) const;
    static ImpactIndex load(const std::filesystem::path& path);

    friend bool operator==(const ImpactIndex&, const ImpactIndex&) = default;

  private:
    std::vector<std::string> m_names;
    std::vector<std::uint64_t> m_offsets;
    std::vector<std::uint32_t> m_docs;
    std::vector<std::uint8_t> m_impacts;
    std::uint64_t m_provenance = 0;
    std::uint64_t m_corpus_hash = 0;
};

/// Scores every document directly; the correctness reference for search().
SearchResult brute_force_search(std::span<const sparse::QuantizedVector> docs, const sparse::QuantizedVector& query,
                                std::size_t k);

/// Index file layout, version 1 (little-endian):
///
///   bytes  "LXIMPIDX"          magic
///   u32    version (= 1)
///   u32    num_docs
///   u32    dimension (term universe size)
///   u32    num_lists (terms with a non-empty posting list)
///   u64    num_postings
///   u64    provenance hash
///   u64    corpus hash                                  (48-byte header)
///   per doc:  u16 name length, name bytes
///   per list: u32 term id, u32 posting count            (8 bytes each)
///   per posting, lists in term order:
///          u16 doc-id delta from the previous posting in the list (the
///              first posting's delta is from 0); the value 0xFFFF is an
///              escape followed by a u32 holding the full delta
///          u8  impact
///   u32    CRC-32 of every preceding byte
inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr std::size_t kIndexHeaderBytes = 48;

}  // namespace lexmae::index
