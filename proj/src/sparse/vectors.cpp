#include "lexmae/sparse/vectors.hpp"

#include <algorithm>
#include <cmath>

#include "lexmae/util/errors.hpp"

namespace lexmae::sparse {

SparseLexiconVector from_dense(std::span<const double> dense)
{
    SparseLexiconVector out;
    for (std::size_t j = 0; j < dense.size(); ++j) {
        const double w = dense[j];
        if (!std::isfinite(w) || w < 0.0) {
            throw input_error("lexicon weight at term " + std::to_string(j) + " is negative or non-finite");
        }
        if (w > 0.0) {
            out.entries.emplace_back(static_cast<std::uint32_t>(j), w);
        }
    }
    return out;
}

std::vector<double> to_dense(const SparseLexiconVector& v, std::size_t dimension)
{
    std::vector<double> out(dimension, 0.0);
    for (auto [term, w] : v.entries) {
        if (term >= dimension) {
            throw dimension_error("term id " + std::to_string(term) + " outside dimension " + std::to_string(dimension));
        }
        out[term] = w;
    }
    return out;
}

SparseLexiconVector topk_sparsify(const SparseLexiconVector& v, std::size_t k)
{
    if (k == 0) {
        throw config_error("top-K sparsification needs K >= 1");
    }
    if (k >= v.nnz()) {
        return v;
    }
    auto ranked = v.entries;
    std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k - 1), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second || (a.second == b.second && a.first < b.first); });
    ranked.resize(k);
    std::sort(ranked.begin(), ranked.end());
    return {std::move(ranked)};
}

std::uint32_t quantize_weight(double weight)
{
    const double scaled = std::floor(100.0 * weight);
    if (!(scaled > 0.0)) {
        return 0;
    }
    return scaled >= kMaxImpact ? kMaxImpact : static_cast<std::uint32_t>(scaled);
}

QuantizedVector quantize(const SparseLexiconVector& v)
{
    QuantizedVector out;
    for (auto [term, w] : v.entries) {
        if (auto impact = quantize_weight(w); impact > 0) {
            out.entries.emplace_back(term, impact);
        }
    }
    return out;
}

}  // namespace lexmae::sparse
