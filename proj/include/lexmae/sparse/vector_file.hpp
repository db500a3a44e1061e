#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lexmae/sparse/vectors.hpp"

namespace lexmae::sparse {

/// Line-oriented vector files, version 1.
///
///   #lexmae-sparse-vectors version=1 dimension=<|V|> provenance=<16 hex digits>
///   <doc_id>\t<term>:<weight> <term>:<weight> …
///
/// Weights are printed with 17 significant digits, so a file round-trips
/// bit-exactly. The quantized form uses the magic `#lexmae-quantized-vectors`
/// and integer impacts. Terms appear in increasing order; a document with no
/// terms has nothing after the tab.
inline constexpr std::uint32_t kVectorFileVersion = 1;

struct VectorFileInfo {
    std::size_t dimension = 0;
    std::uint64_t provenance = 0;
};

template <typename Vector>
struct VectorRecord {
    std::string id;
    Vector vector;
};

template <typename Vector>
struct VectorFile {
    VectorFileInfo info;
    std::vector<VectorRecord<Vector>> records;
};

using SparseFile = VectorFile<SparseLexiconVector>;
using QuantizedFile = VectorFile<QuantizedVector>;

std::string serialize(const SparseFile& file);
std::string serialize(const QuantizedFile& file);
SparseFile parse_sparse_file(const std::string& contents);
QuantizedFile parse_quantized_file(const std::string& contents);

void save(const std::filesystem::path& path, const SparseFile& file);
void save(const std::filesystem::path& path, const QuantizedFile& file);
SparseFile load_sparse_file(const std::filesystem::path& path);
QuantizedFile load_quantized_file(const std::filesystem::path& path);

}  // namespace lexmae::sparse
