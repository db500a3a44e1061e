#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexmae::text {

/// Ids 0..4 are [PAD], [CLS], [SEP], [MASK], [UNK]; regular tokens follow.
class Vocabulary {
  public:
    Vocabulary();
    explicit Vocabulary(std::vector<std::string> regular_tokens);

    /// Keeps the most frequent tokens (ties broken lexicographically) so the
    /// vocabulary, specials included, holds at most `max_size` entries.
    static Vocabulary build(std::span<const std::string> texts, std::size_t max_size);

    [[nodiscard]] std::size_t size() const noexcept { return m_tokens.size(); }
    [[nodiscard]] std::int32_t id(std::string_view token) const;
    [[nodiscard]] const std::string& token(std::int32_t id) const;
    [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return m_tokens; }

    /// Token ids without framing; unknown tokens map to [UNK].
    [[nodiscard]] std::vector<std::int32_t> ids(std::string_view text) const;
    /// [CLS] ids… [SEP], truncated so the whole sequence fits in `max_length`.
    [[nodiscard]] std::vector<std::int32_t> encode(std::string_view text, std::size_t max_length) const;

    /// One token per line, in id order, specials included.
    [[nodiscard]] std::string serialize() const;
    static Vocabulary parse(std::string_view contents);
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.m_tokens == b.m_tokens; }

  private:
    std::vector<std::string> m_tokens;
    std::unordered_map<std::string, std::int32_t> m_index;
};

}  // namespace lexmae::text
