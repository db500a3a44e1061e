#include "lexmae/text/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "lexmae/text/special_tokens.hpp"
#include "lexmae/text/tokenizer.hpp"
#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"

namespace lexmae::text {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> regular_tokens)
{
    for (auto s : kSpecialTokens) {
        m_tokens.emplace_back(s);
    }
    for (auto& t : regular_tokens) {
        m_tokens.push_back(std::move(t));
    }
    for (std::size_t i = 0; i < m_tokens.size(); ++i) {
        if (m_tokens[i].empty()) {
            throw format_error("empty token at vocabulary id " + std::to_string(i));
        }
        if (!m_index.emplace(m_tokens[i], static_cast<std::int32_t>(i)).second) {
            throw format_error("duplicate vocabulary token '" + m_tokens[i] + "'");
        }
    }
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t max_size)
{
    if (max_size < kSpecialTokens.size()) {
        throw config_error("vocabulary size must leave room for the " + std::to_string(kSpecialTokens.size())
                           + " special tokens");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& t : texts) {
        for (auto& tok : tokenize(t)) {
            ++counts[std::move(tok)];
        }
    }
    for (auto s : kSpecialTokens) {
        counts.erase(std::string(s));
    }
    if (counts.empty()) {
        throw input_error("cannot build a vocabulary from an empty corpus");
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    ranked.resize(std::min(ranked.size(), max_size - kSpecialTokens.size()));
    std::vector<std::string> tokens;
    tokens.reserve(ranked.size());
    for (auto& [tok, count] : ranked) {
        tokens.push_back(std::move(tok));
    }
    return Vocabulary(std::move(tokens));
}

std::int32_t Vocabulary::id(std::string_view token) const
{
    auto it = m_index.find(std::string(token));
    return it == m_index.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const
{
    if (id < 0 || static_cast<std::size_t>(id) >= m_tokens.size()) {
        throw vocab_error("token id " + std::to_string(id) + " outside vocabulary of size "
                          + std::to_string(m_tokens.size()));
    }
    return m_tokens[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocabulary::ids(std::string_view text) const
{
    std::vector<std::int32_t> out;
    for (const auto& tok : tokenize(text)) {
        out.push_back(id(tok));
    }
    return out;
}

std::vector<std::int32_t> Vocabulary::encode(std::string_view text, std::size_t max_length) const
{
    if (max_length < 2) {
        throw config_error("max_length must fit [CLS] and [SEP]");
    }
    auto body = ids(text);
    if (body.size() > max_length - 2) {
        body.resize(max_length - 2);
    }
    std::vector<std::int32_t> out;
    out.reserve(body.size() + 2);
    out.push_back(kClsId);
    out.insert(out.end(), body.begin(), body.end());
    out.push_back(kSepId);
    return out;
}

std::string Vocabulary::serialize() const
{
    std::string out;
    for (const auto& t : m_tokens) {
        out += t;
        out += '\n';
    }
    return out;
}

Vocabulary Vocabulary::parse(std::string_view contents)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < contents.size()) {
        auto end = contents.find('\n', start);
        if (end == std::string_view::npos) {
            end = contents.size();
        }
        lines.emplace_back(contents.substr(start, end - start));
        start = end + 1;
    }
    if (lines.size() < kSpecialTokens.size()) {
        throw format_error("vocabulary file lists fewer than the " + std::to_string(kSpecialTokens.size())
                           + " reserved tokens");
    }
    for (std::size_t i = 0; i < kSpecialTokens.size(); ++i) {
        if (lines[i] != kSpecialTokens[i]) {
            throw format_error("vocabulary line " + std::to_string(i + 1) + " must be " + std::string(kSpecialTokens[i])
                               + ", found '" + lines[i] + "'");
        }
    }
    return Vocabulary(std::vector<std::string>(lines.begin() + kSpecialTokens.size(), lines.end()));
}

void Vocabulary::save(const std::filesystem::path& path) const { util::write_file_atomic(path, serialize()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return parse(util::read_file(path)); }

}  // namespace lexmae::text
