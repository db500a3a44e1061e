#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lexmae::pretrain {

/// How the decoder's mask set relates to the encoder's.
///   inclusive:    m_dec = m_enc ∪ (beta-rate fresh positions outside m_enc)
///   exclusive:    m_dec drawn only from positions outside m_enc, at rate alpha+beta
///   fully_random: m_dec drawn independently of m_enc, at rate alpha+beta
enum class MaskingStrategy { inclusive, exclusive, fully_random };

std::string to_string(MaskingStrategy strategy);
MaskingStrategy masking_strategy_from_string(const std::string& name);

struct MaskedSample {
    std::vector<std::int32_t> x;
    std::vector<std::int32_t> x_enc;
    std::vector<std::int32_t> x_dec;
    /// Sorted positions.
    std::vector<std::size_t> m_enc;
    std::vector<std::size_t> m_dec;
    /// Subsets of m_enc that received a random token or were left unchanged.
    std::vector<std::size_t> randomized;
    std::vector<std::size_t> kept;
};

/// Positions whose token is not [PAD]/[CLS]/[SEP]/[MASK].
std::vector<std::size_t> maskable_positions(std::span<const std::int32_t> x);

/// round-half-up(rate × maskable), at least 1 when rate > 0 and maskable > 0.
std::size_t mask_count(double rate, std::size_t maskable);

struct EncoderMasking {
    std::vector<std::int32_t> x_enc;
    std::vector<std::size_t> m_enc;
    std::vector<std::size_t> randomized;
    std::vector<std::size_t> kept;
};

/// Each selected position independently becomes [MASK] with probability
/// 0.8, a uniformly drawn non-special token with 0.1, or stays with 0.1.
EncoderMasking mask_for_encoder(std::span<const std::int32_t> x, double alpha, std::size_t vocab_size,
                                std::mt19937_64& rng);

struct DecoderMasking {
    std::vector<std::int32_t> x_dec;
    std::vector<std::size_t> m_dec;
};

/// Every decoder-masked position becomes [MASK].
DecoderMasking mask_for_decoder(std::span<const std::int32_t> x, std::span<const std::size_t> m_enc, double alpha,
                                double beta, MaskingStrategy strategy, std::mt19937_64& rng);

MaskedSample make_masked_sample(std::span<const std::int32_t> x, double alpha, double beta, MaskingStrategy strategy,
                                std::size_t vocab_size, std::mt19937_64& rng);

}  // namespace lexmae::pretrain
