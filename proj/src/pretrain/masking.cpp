#include "lexmae/pretrain/masking.hpp"

#include <algorithm>
#include <cmath>

#include "lexmae/text/special_tokens.hpp"
#include "lexmae/util/errors.hpp"

namespace lexmae::pretrain {

std::string to_string(MaskingStrategy strategy)
{
    switch (strategy) {
    case MaskingStrategy::inclusive: return "inclusive";
    case MaskingStrategy::exclusive: return "exclusive";
    case MaskingStrategy::fully_random: return "fully-random";
    }
    return "unknown";
}

MaskingStrategy masking_strategy_from_string(const std::string& name)
{
    if (name == "inclusive") {
        return MaskingStrategy::inclusive;
    }
    if (name == "exclusive") {
        return MaskingStrategy::exclusive;
    }
    if (name == "fully-random" || name == "fully_random") {
        return MaskingStrategy::fully_random;
    }
    throw config_error("unknown masking strategy '" + name + "'");
}

std::vector<std::size_t> maskable_positions(std::span<const std::int32_t> x)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!text::is_special(x[i])) {
            out.push_back(i);
        }
    }
    return out;
}

std::size_t mask_count(double rate, std::size_t maskable)
{
    if (!(rate >= 0.0) || rate > 1.0) {
        throw config_error("mask rate " + std::to_string(rate) + " outside [0, 1]");
    }
    if (rate == 0.0 || maskable == 0) {
        return 0;
    }
    const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(maskable) + 0.5));
    return std::clamp<std::size_t>(count, 1, maskable);
}

namespace {

/// `count` distinct elements of `pool`, uniformly, returned sorted.
std::vector<std::size_t> draw(std::vector<std::size_t> pool, std::size_t count, std::mt19937_64& rng)
{
    if (count > pool.size()) {
        throw masking_error("cannot mask " + std::to_string(count) + " positions out of "
                            + std::to_string(pool.size()) + " available");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<std::size_t> outside(const std::vector<std::size_t>& all, std::span<const std::size_t> excluded)
{
    std::vector<std::size_t> out;
    std::set_difference(all.begin(), all.end(), excluded.begin(), excluded.end(), std::back_inserter(out));
    return out;
}

}  // namespace

EncoderMasking mask_for_encoder(std::span<const std::int32_t> x, double alpha, std::size_t vocab_size,
                                std::mt19937_64& rng)
{
    if (alpha > 1.0 || alpha < 0.0) {
        throw config_error("encoder mask rate alpha=" + std::to_string(alpha) + " outside [0, 1]");
    }
    if (vocab_size <= static_cast<std::size_t>(text::kUnkId)) {
        throw config_error("vocabulary has no regular tokens to draw replacements from");
    }
    const auto maskable = maskable_positions(x);
    if (alpha > 0.0 && maskable.empty()) {
        throw masking_error("sequence has no maskable positions");
    }
    EncoderMasking out;
    out.x_enc.assign(x.begin(), x.end());
    out.m_enc = draw(maskable, mask_count(alpha, maskable.size()), rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::int32_t> token(text::kUnkId, static_cast<std::int32_t>(vocab_size) - 1);
    for (auto pos : out.m_enc) {
        const double u = unit(rng);
        if (u < 0.8) {
            out.x_enc[pos] = text::kMaskId;
        }
        else if (u < 0.9) {
            out.x_enc[pos] = token(rng);
            out.randomized.push_back(pos);
        }
        else {
            out.kept.push_back(pos);
        }
    }
    return out;
}

DecoderMasking mask_for_decoder(std::span<const std::int32_t> x, std::span<const std::size_t> m_enc, double alpha,
                                double beta, MaskingStrategy strategy, std::mt19937_64& rng)
{
    if (alpha < 0.0 || beta < 0.0 || alpha + beta > 1.0) {
        throw config_error("mask rates must satisfy 0 <= alpha, 0 <= beta, alpha + beta <= 1");
    }
    const auto maskable = maskable_positions(x);
    DecoderMasking out;
    switch (strategy) {
    case MaskingStrategy::inclusive: {
        auto fresh = draw(outside(maskable, m_enc), mask_count(beta, maskable.size()), rng);
        std::set_union(m_enc.begin(), m_enc.end(), fresh.begin(), fresh.end(), std::back_inserter(out.m_dec));
        break;
    }
    case MaskingStrategy::exclusive:
        out.m_dec = draw(outside(maskable, m_enc), mask_count(alpha + beta, maskable.size()), rng);
        break;
    case MaskingStrategy::fully_random:
        out.m_dec = draw(maskable, mask_count(alpha + beta, maskable.size()), rng);
        break;
    }
    out.x_dec.assign(x.begin(), x.end());
    for (auto pos : out.m_dec) {
        out.x_dec[pos] = text::kMaskId;
    }
    return out;
}

MaskedSample make_masked_sample(std::span<const std::int32_t> x, double alpha, double beta, MaskingStrategy strategy,
                                std::size_t vocab_size, std::mt19937_64& rng)
{
    auto enc = mask_for_encoder(x, alpha, vocab_size, rng);
    auto dec = mask_for_decoder(x, enc.m_enc, alpha, beta, strategy, rng);
    MaskedSample s;
    s.x.assign(x.begin(), x.end());
    s.x_enc = std::move(enc.x_enc);
    s.m_enc = std::move(enc.m_enc);
    s.randomized = std::move(enc.randomized);
    s.kept = std::move(enc.kept);
    s.x_dec = std::move(dec.x_dec);
    s.m_dec = std::move(dec.m_dec);
    return s;
}

}  // namespace lexmae::pretrain
