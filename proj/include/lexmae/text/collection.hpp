#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lexmae::text {

struct TextRecord {
    std::string id;
    std::string text;

    friend bool operator==(const TextRecord&, const TextRecord&) = default;
};

/// Reads `id<TAB>text` lines. Blank lines are skipped; a line without a tab
/// or with an empty id is a format_error naming the line; duplicate ids are
/// an input_error.
std::vector<TextRecord> read_tsv(const std::filesystem::path& path);
std::vector<TextRecord> parse_tsv(const std::string& contents, const std::string& source = "<memory>");
void write_tsv(const std::filesystem::path& path, const std::vector<TextRecord>& records);

}  // namespace lexmae::text
