#include "lexmae/sparse/vector_file.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lexmae/util/binary_io.hpp"
#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"

namespace lexmae::sparse {

namespace {

constexpr std::string_view kSparseMagic = "#lexmae-sparse-vectors";
constexpr std::string_view kQuantizedMagic = "#lexmae-quantized-vectors";

std::string header(std::string_view magic, const VectorFileInfo& info)
{
    return std::string(magic) + " version=" + std::to_string(kVectorFileVersion)
           + " dimension=" + std::to_string(info.dimension) + " provenance=" + util::hex64(info.provenance) + "\n";
}

void append(std::string& out, double w)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", w);
    out += buf;
}

void append(std::string& out, std::uint32_t impact) { out += std::to_string(impact); }

template <typename Vector>
std::string serialize_impl(std::string_view magic, const VectorFile<Vector>& file)
{
    std::string out = header(magic, file.info);
    for (const auto& r : file.records) {
        out += r.id;
        out += '\t';
        bool first = true;
        for (const auto& [term, value] : r.vector.entries) {
            if (!first) {
                out += ' ';
            }
            first = false;
            out += std::to_string(term);
            out += ':';
            append(out, value);
        }
        out += '\n';
    }
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what)
{
    throw format_error("vector file line " + std::to_string(line) + ": " + what);
}

std::uint64_t parse_u64(std::string_view s, int base, std::size_t line)
{
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        fail(line, "malformed number '" + std::string(s) + "'");
    }
    return v;
}

void parse_value(std::string_view s, double& out, std::size_t line)
{
    const std::string buf(s);
    char* end = nullptr;
    out = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(out) || out <= 0.0) {
        fail(line, "weight '" + buf + "' must be a positive finite number");
    }
}

void parse_value(std::string_view s, std::uint32_t& out, std::size_t line)
{
    const auto v = parse_u64(s, 10, line);
    if (v == 0 || v > kMaxImpact) {
        fail(line, "impact " + std::string(s) + " outside [1, 255]");
    }
    out = static_cast<std::uint32_t>(v);
}

template <typename Vector>
VectorFile<Vector> parse_impl(std::string_view magic, const std::string& contents)
{
    std::istringstream in(contents);
    std::string line;
    if (!std::getline(in, line)) {
        throw format_error("empty vector file");
    }
    std::istringstream head(line);
    std::string word;
    head >> word;
    if (word != magic) {
        throw format_error("expected a '" + std::string(magic) + "' header, found '" + word + "'");
    }
    VectorFile<Vector> file;
    bool have_version = false;
    while (head >> word) {
        const auto eq = word.find('=');
        if (eq == std::string::npos) {
            fail(1, "malformed header field '" + word + "'");
        }
        const auto key = word.substr(0, eq);
        const std::string_view value = std::string_view(word).substr(eq + 1);
        if (key == "version") {
            if (auto v = parse_u64(value, 10, 1); v != kVectorFileVersion) {
                throw unsupported_version_error("unsupported vector file version " + std::to_string(v));
            }
            have_version = true;
        }
        else if (key == "dimension") {
            file.info.dimension = parse_u64(value, 10, 1);
        }
        else if (key == "provenance") {
            file.info.provenance = parse_u64(value, 16, 1);
        }
    }
    if (!have_version || file.info.dimension == 0) {
        fail(1, "header lacks version or dimension");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            fail(line_no, "expected '<doc_id>\\t<entries>'");
        }
        VectorRecord<Vector> rec;
        rec.id = line.substr(0, tab);
        std::istringstream entries(line.substr(tab + 1));
        std::string entry;
        while (entries >> entry) {
            const auto colon = entry.find(':');
            if (colon == std::string::npos) {
                fail(line_no, "entry '" + entry + "' lacks ':'");
            }
            const auto term = parse_u64(std::string_view(entry).substr(0, colon), 10, line_no);
            if (term >= file.info.dimension) {
                fail(line_no, "term " + std::to_string(term) + " outside dimension");
            }
            if (!rec.vector.entries.empty() && term <= rec.vector.entries.back().first) {
                fail(line_no, "terms must be strictly increasing");
            }
            typename decltype(rec.vector.entries)::value_type e;
            e.first = static_cast<std::uint32_t>(term);
            parse_value(std::string_view(entry).substr(colon + 1), e.second, line_no);
            rec.vector.entries.push_back(e);
        }
        file.records.push_back(std::move(rec));
    }
    return file;
}

}  // namespace

std::string serialize(const SparseFile& file) { return serialize_impl(kSparseMagic, file); }
std::string serialize(const QuantizedFile& file) { return serialize_impl(kQuantizedMagic, file); }

SparseFile parse_sparse_file(const std::string& contents)
{
    return parse_impl<SparseLexiconVector>(kSparseMagic, contents);
}

QuantizedFile parse_quantized_file(const std::string& contents)
{
    return parse_impl<QuantizedVector>(kQuantizedMagic, contents);
}

void save(const std::filesystem::path& path, const SparseFile& file) { util::write_file_atomic(path, serialize(file)); }
void save(const std::filesystem::path& path, const QuantizedFile& file)
{
    util::write_file_atomic(path, serialize(file));
}

SparseFile load_sparse_file(const std::filesystem::path& path) { return parse_sparse_file(util::read_file(path)); }
QuantizedFile load_quantized_file(const std::filesystem::path& path)
{
    return parse_quantized_file(util::read_file(path));
}

}  // namespace lexmae::sparse
