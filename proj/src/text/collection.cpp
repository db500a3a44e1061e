#include "lexmae/text/collection.hpp"

#include <unordered_set>

#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"

namespace lexmae::text {

std::vector<TextRecord> parse_tsv(const std::string& contents, const std::string& source)
{
    std::vector<TextRecord> out;
    std::unordered_set<std::string> seen;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < contents.size()) {
        auto end = contents.find('\n', start);
        if (end == std::string::npos) {
            end = contents.size();
        }
        ++line_no;
        std::string_view line(contents.data() + start, end - start);
        start = end + 1;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab == 0) {
            throw format_error(source + ":" + std::to_string(line_no) + ": expected 'id<TAB>text'");
        }
        TextRecord r{std::string(line.substr(0, tab)), std::string(line.substr(tab + 1))};
        if (!seen.insert(r.id).second) {
            throw input_error(source + ":" + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TextRecord> read_tsv(const std::filesystem::path& path)
{
    return parse_tsv(util::read_file(path), path.string());
}

void write_tsv(const std::filesystem::path& path, const std::vector<TextRecord>& records)
{
    std::string out;
    for (const auto& r : records) {
        out += r.id;
        out += '\t';
        out += r.text;
        out += '\n';
    }
    util::write_file_atomic(path, out);
}

}  // namespace lexmae::text
