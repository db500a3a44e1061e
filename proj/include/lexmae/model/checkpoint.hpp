#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lexmae/model/weights.hpp"

namespace lexmae::model {

/// Checkpoint container, version 1 (all integers little-endian):
///
///   bytes  "LXMAECKP"                       magic
///   u32    version (= 1)
///   u32    vocab_size, hidden_size, encoder_layers, decoder_layers,
///          attention_heads, max_sequence_length, ffn_multiplier
///   f64    init_std, layer_norm_epsilon
///   u32    LM-head layout (0 separate, 1 shared, 2 extra-bottleneck)
///   u64    provenance hash (config that produced the weights)
///   u32    tensor count
///   per tensor: u32 name length, name bytes, u32 rank, u32 extents…,
///               f64 values (row-major)
///   u32    CRC-32 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    TransformerWeights weights;
    std::uint64_t provenance = 0;
};

std::string serialize_checkpoint(const TransformerWeights& weights, std::uint64_t provenance);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const TransformerWeights& weights, std::uint64_t provenance);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lexmae::model
