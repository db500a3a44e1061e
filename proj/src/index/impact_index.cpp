#include "lexmae/index/impact_index.hpp"

#include <algorithm>
#include <unordered_set>

#include "lexmae/util/binary_io.hpp"
#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"

namespace lexmae::index {

namespace {

constexpr std::string_view kMagic = "LXIMPIDX";
constexpr std::uint16_t kDeltaEscape = 0xFFFF;

bool ranks_before(const Hit& a, const Hit& b) { return a.score > b.score || (a.score == b.score && a.doc < b.doc); }

SearchResult top_k(std::vector<Hit> hits, std::size_t k)
{
    if (hits.size() > k) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), ranks_before);
        hits.resize(k);
    }
    else {
        std::sort(hits.begin(), hits.end(), ranks_before);
    }
    return hits;
}

void require_k(std::size_t k)
{
    if (k == 0) {
        throw config_error("search depth k must be at least 1");
    }
}

}  // namespace

ImpactIndex ImpactIndex::build(std::span<const sparse::VectorRecord<sparse::QuantizedVector>> docs,
                               std::size_t dimension, std::uint64_t provenance, std::uint64_t corpus_hash)
{
    ImpactIndex idx;
    idx.m_provenance = provenance;
    idx.m_corpus_hash = corpus_hash;
    std::unordered_set<std::string> seen;
    std::vector<std::uint64_t> counts(dimension + 1, 0);
    for (const auto& d : docs) {
        if (!seen.insert(d.id).second) {
            throw input_error("duplicate document id '" + d.id + "' in index build");
        }
        if (d.id.size() > 0xFFFF) {
            throw input_error("document id longer than 65535 bytes");
        }
        std::uint32_t prev = 0;
        bool first = true;
        for (auto [term, impact] : d.vector.entries) {
            if (term >= dimension) {
                throw dimension_error("term id " + std::to_string(term) + " outside index dimension "
                                      + std::to_string(dimension));
            }
            if (impact == 0 || impact > sparse::kMaxImpact) {
                throw input_error("impact " + std::to_string(impact) + " outside [1, 255]");
            }
            if (!first && term <= prev) {
                throw input_error("document '" + d.id + "' has unsorted or repeated terms");
            }
            first = false;
            prev = term;
            ++counts[term + 1];
        }
        idx.m_names.push_back(d.id);
    }
    if (idx.m_names.size() > 0xFFFFFFFFULL) {
        throw input_error("too many documents for 32-bit ids");
    }
    for (std::size_t t = 1; t <= dimension; ++t) {
        counts[t] += counts[t - 1];
    }
    idx.m_offsets = counts;
    idx.m_docs.resize(counts[dimension]);
    idx.m_impacts.resize(counts[dimension]);
    auto cursor = counts;
    for (std::uint32_t doc = 0; doc < docs.size(); ++doc) {
        for (auto [term, impact] : docs[doc].vector.entries) {
            const auto at = cursor[term]++;
            idx.m_docs[at] = doc;
            idx.m_impacts[at] = static_cast<std::uint8_t>(impact);
        }
    }
    return idx;
}

ImpactIndex::PostingList ImpactIndex::postings(std::uint32_t term) const
{
    if (term >= dimension()) {
        return {};
    }
    const auto begin = m_offsets[term];
    const auto len = m_offsets[term + 1] - begin;
    return {std::span(m_docs).subspan(begin, len), std::span(m_impacts).subspan(begin, len)};
}

SearchResult ImpactIndex::search(const sparse::QuantizedVector& query, std::size_t k) const
{
    require_k(k);
    std::vector<std::uint64_t> acc(num_docs(), 0);
    std::vector<std::uint32_t> touched;
    for (auto [term, q] : query.entries) {
        auto list = postings(term);
        for (std::size_t i = 0; i < list.docs.size(); ++i) {
            const auto doc = list.docs[i];
            if (acc[doc] == 0) {
                touched.push_back(doc);
            }
            acc[doc] += static_cast<std::uint64_t>(q) * list.impacts[i];
        }
    }
    std::vector<Hit> hits;
    hits.reserve(touched.size());
    for (auto doc : touched) {
        hits.push_back({doc, acc[doc]});
    }
    return top_k(std::move(hits), k);
}

std::vector<sparse::QuantizedVector> ImpactIndex::reconstruct() const
{
    std::vector<sparse::QuantizedVector> out(num_docs());
    for (std::uint32_t t = 0; t < dimension(); ++t) {
        auto list = postings(t);
        for (std::size_t i = 0; i < list.docs.size(); ++i) {
            out[list.docs[i]].entries.emplace_back(t, list.impacts[i]);
        }
    }
    return out;
}

StorageReport ImpactIndex::storage() const
{
    StorageReport r;
    r.postings = num_postings();
    r.posting_bytes = 3 * r.postings;
    r.overhead_bytes = kIndexHeaderBytes + 4;
    for (const auto& n : m_names) {
        r.overhead_bytes += 2 + n.size();
    }
    for (std::uint32_t t = 0; t < dimension(); ++t) {
        auto list = postings(t);
        if (list.docs.empty()) {
            continue;
        }
        r.overhead_bytes += 8;
        std::uint32_t prev = 0;
        for (auto doc : list.docs) {
            if (doc - prev >= kDeltaEscape) {
                r.overhead_bytes += 4;
            }
            prev = doc;
        }
    }
    return r;
}

std::string ImpactIndex::serialize() const
{
    std::uint32_t lists = 0;
    for (std::uint32_t t = 0; t < dimension(); ++t) {
        lists += m_offsets[t + 1] > m_offsets[t] ? 1 : 0;
    }
    util::BinaryWriter w;
    w.put_bytes(kMagic);
    w.put(kIndexVersion);
    w.put(static_cast<std::uint32_t>(num_docs()));
    w.put(static_cast<std::uint32_t>(dimension()));
    w.put(lists);
    w.put(static_cast<std::uint64_t>(num_postings()));
    w.put(m_provenance);
    w.put(m_corpus_hash);
    for (const auto& n : m_names) {
        w.put(static_cast<std::uint16_t>(n.size()));
        w.put_bytes(n);
    }
    for (std::uint32_t t = 0; t < dimension(); ++t) {
        if (auto len = m_offsets[t + 1] - m_offsets[t]; len > 0) {
            w.put(t);
            w.put(static_cast<std::uint32_t>(len));
        }
    }
    for (std::uint32_t t = 0; t < dimension(); ++t) {
        auto list = postings(t);
        std::uint32_t prev = 0;
        for (std::size_t i = 0; i < list.docs.size(); ++i) {
            const std::uint32_t delta = list.docs[i] - prev;
            prev = list.docs[i];
            if (delta >= kDeltaEscape) {
                w.put(kDeltaEscape);
                w.put(delta);
            }
            else {
                w.put(static_cast<std::uint16_t>(delta));
            }
            w.put(list.impacts[i]);
        }
    }
    w.seal();
    return w.bytes();
}

ImpactIndex ImpactIndex::deserialize(std::string_view bytes)
{
    util::BinaryReader header(bytes);
    if (header.get_bytes(kMagic.size()) != kMagic) {
        throw format_error("not a lexmae impact index (bad magic)");
    }
    if (auto v = header.get<std::uint32_t>(); v != kIndexVersion) {
        throw unsupported_version_error("unsupported index version " + std::to_string(v) + " (expected "
                                        + std::to_string(kIndexVersion) + ")");
    }
    util::BinaryReader r(util::verify_sealed(bytes));
    r.get_bytes(kMagic.size() + 4);
    const auto docs = r.get<std::uint32_t>();
    const auto dim = r.get<std::uint32_t>();
    const auto lists = r.get<std::uint32_t>();
    const auto total = r.get<std::uint64_t>();
    ImpactIndex idx;
    idx.m_provenance = r.get<std::uint64_t>();
    idx.m_corpus_hash = r.get<std::uint64_t>();
    if (lists > dim || total > r.remaining()) {
        throw format_error("index header counts are inconsistent with the file size");
    }
    idx.m_names.reserve(std::min<std::size_t>(docs, r.remaining()));
    for (std::uint32_t i = 0; i < docs; ++i) {
        const auto len = r.get<std::uint16_t>();
        idx.m_names.emplace_back(r.get_bytes(len));
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dictionary(lists);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < dictionary.size(); ++i) {
        auto& [term, len] = dictionary[i];
        term = r.get<std::uint32_t>();
        len = r.get<std::uint32_t>();
        if (term >= dim || len == 0 || (i > 0 && term <= dictionary[i - 1].first)) {
            throw format_error("corrupt term dictionary entry " + std::to_string(i));
        }
        sum += len;
    }
    if (sum != total) {
        throw format_error("term dictionary lengths do not add up to the posting count");
    }
    idx.m_offsets.assign(static_cast<std::size_t>(dim) + 1, 0);
    for (const auto& [term, len] : dictionary) {
        idx.m_offsets[term + 1] = len;
    }
    for (std::size_t t = 1; t <= dim; ++t) {
        idx.m_offsets[t] += idx.m_offsets[t - 1];
    }
    idx.m_docs.reserve(total);
    idx.m_impacts.reserve(total);
    for (const auto& [term, len] : dictionary) {
        std::uint64_t prev = 0;
        for (std::uint32_t i = 0; i < len; ++i) {
            std::uint64_t delta = r.get<std::uint16_t>();
            if (delta == kDeltaEscape) {
                delta = r.get<std::uint32_t>();
            }
            const std::uint64_t doc = prev + delta;
            if (doc >= docs || (i > 0 && delta == 0)) {
                throw format_error("posting for term " + std::to_string(term) + " has an invalid document id");
            }
            prev = doc;
            const auto impact = r.get<std::uint8_t>();
            if (impact == 0) {
                throw format_error("zero impact in posting list");
            }
            idx.m_docs.push_back(static_cast<std::uint32_t>(doc));
            idx.m_impacts.push_back(impact);
        }
    }
    if (r.remaining() != 0) {
        throw format_error("trailing bytes after the last posting");
    }
    return idx;
}

void ImpactIndex::save(const std::filesystem::path& path) const { util::write_file_atomic(path, serialize()); }

ImpactIndex ImpactIndex::load(const std::filesystem::path& path) { return deserialize(util::read_file(path)); }

SearchResult brute_force_search(std::span<const sparse::QuantizedVector> docs, const sparse::QuantizedVector& query,
                                std::size_t k)
{
    require_k(k);
    std::vector<Hit> hits;
    for (std::uint32_t d = 0; d < docs.size(); ++d) {
        std::uint64_t score = 0;
        auto a = query.entries.begin();
        auto b = docs[d].entries.begin();
        while (a != query.entries.end() && b != docs[d].entries.end()) {
            if (a->first < b->first) {
                ++a;
            }
            else if (b->first < a->first) {
                ++b;
            }
            else {
                score += static_cast<std::uint64_t>(a->second) * b->second;
                ++a;
                ++b;
            }
        }
        if (score > 0) {
            hits.push_back({d, score});
        }
    }
    return top_k(std::move(hits), k);
}

}  // namespace lexmae::index
