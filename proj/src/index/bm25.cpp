#include "lexmae/index/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lexmae/util/errors.hpp"

namespace lexmae::index {

Bm25Index::Bm25Index(std::span<const std::vector<std::string>> docs, Bm25Params params) : m_params(params)
{
    if (params.k1 < 0.0 || params.b < 0.0 || params.b > 1.0) {
        throw config_error("BM25 needs k1 >= 0 and b in [0, 1]");
    }
    double total = 0.0;
    for (std::uint32_t d = 0; d < docs.size(); ++d) {
        std::map<std::string, std::uint32_t> tf;
        for (const auto& t : docs[d]) {
            ++tf[t];
        }
        for (const auto& [term, count] : tf) {
            m_postings[term].push_back({d, count});
        }
        m_lengths.push_back(static_cast<std::uint32_t>(docs[d].size()));
        total += static_cast<double>(docs[d].size());
    }
    m_avg_length = docs.empty() ? 0.0 : total / static_cast<double>(docs.size());
}

std::uint32_t Bm25Index::document_frequency(const std::string& term) const
{
    auto it = m_postings.find(term);
    return it == m_postings.end() ? 0 : static_cast<std::uint32_t>(it->second.size());
}

double Bm25Index::idf(const std::string& term) const
{
    const double n = static_cast<double>(num_docs());
    const double df = document_frequency(term);
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

std::vector<ScoredDoc> Bm25Index::search(std::span<const std::string> query, std::size_t k) const
{
    if (k == 0) {
        throw config_error("search depth k must be at least 1");
    }
    std::vector<double> acc(num_docs(), 0.0);
    std::vector<bool> hit(num_docs(), false);
    const std::set<std::string> terms(query.begin(), query.end());
    for (const auto& term : terms) {
        auto it = m_postings.find(term);
        if (it == m_postings.end()) {
            continue;
        }
        const double w = idf(term);
        for (const auto& p : it->second) {
            const double tf = p.tf;
            const double norm = m_avg_length > 0.0 ? m_lengths[p.doc] / m_avg_length : 0.0;
            acc[p.doc] += w * tf * (m_params.k1 + 1.0) / (tf + m_params.k1 * (1.0 - m_params.b + m_params.b * norm));
            hit[p.doc] = true;
        }
    }
    std::vector<ScoredDoc> out;
    for (std::uint32_t d = 0; d < acc.size(); ++d) {
        if (hit[d]) {
            out.push_back({d, acc[d]});
        }
    }
    auto before = [](const ScoredDoc& a, const ScoredDoc& b) {
        return a.score > b.score || (a.score == b.score && a.doc < b.doc);
    };
    if (out.size() > k) {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), before);
        out.resize(k);
    }
    else {
        std::sort(out.begin(), out.end(), before);
    }
    return out;
}

}  // namespace lexmae::index
