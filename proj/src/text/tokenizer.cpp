#include "lexmae/text/tokenizer.hpp"

#include <cctype>

namespace lexmae::text {

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    };
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (c < 0x80 && std::isspace(c)) {
            flush();
        }
        else if (c < 0x80 && std::ispunct(c)) {
            flush();
            out.emplace_back(1, raw);
        }
        else {
            current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : raw);
        }
    }
    flush();
    return out;
}

}  // namespace lexmae::text
