#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace lexmae::text {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kClsId = 1;
inline constexpr std::int32_t kSepId = 2;
inline constexpr std::int32_t kMaskId = 3;
inline constexpr std::int32_t kUnkId = 4;
inline constexpr std::int32_t kFirstRegularId = 5;

inline constexpr std::array<std::string_view, 5> kSpecialTokens{"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};

/// Ids that are never masked and never pooled over.
constexpr bool is_special(std::int32_t id) { return id >= 0 && id < kFirstRegularId && id != kUnkId; }

}  // namespace lexmae::text
