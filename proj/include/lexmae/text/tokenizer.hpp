#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lexmae::text {

/// Lowercases ASCII letters, splits on whitespace, and emits every ASCII
/// punctuation character as its own token. Bytes ≥ 0x80 are kept verbatim,
/// so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace lexmae::text
