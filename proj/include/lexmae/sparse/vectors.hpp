#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lexmae::sparse {

/// Term weights over the vocabulary; term ids strictly increasing, every weight > 0.
struct SparseLexiconVector {
    std::vector<std::pair<std::uint32_t, double>> entries;

    [[nodiscard]] std::size_t nnz() const noexcept { return entries.size(); }
    friend bool operator==(const SparseLexiconVector&, const SparseLexiconVector&) = default;
};

/// Integer impacts in [1, 255]; term ids strictly increasing.
struct QuantizedVector {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;

    [[nodiscard]] std::size_t nnz() const noexcept { return entries.size(); }
    friend bool operator==(const QuantizedVector&, const QuantizedVector&) = default;
};

inline constexpr std::uint32_t kMaxImpact = 255;

/// Drops zeros; throws input_error on negative or non-finite entries.
SparseLexiconVector from_dense(std::span<const double> dense);
std::vector<double> to_dense(const SparseLexiconVector& v, std::size_t dimension);

/// Keeps the K largest weights; among equal weights the smaller term id wins,
/// so exactly min(K, nnz) entries survive. Throws config_error for K = 0.
SparseLexiconVector topk_sparsify(const SparseLexiconVector& v, std::size_t k);

/// impact = min(floor(100·w), 255); zero impacts are dropped.
std::uint32_t quantize_weight(double weight);
QuantizedVector quantize(const SparseLexiconVector& v);

}  // namespace lexmae::sparse
