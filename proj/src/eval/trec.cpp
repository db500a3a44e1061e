#include "lexmae/eval/trec.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "lexmae/util/binary_io.hpp"
#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"

namespace lexmae::eval {

namespace {

std::vector<std::string> fields(const std::string& line)
{
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string f;
    while (in >> f) {
        out.push_back(f);
    }
    return out;
}

template <typename Fn>
void for_each_line(const std::string& contents, Fn&& fn)
{
    std::istringstream in(contents);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        auto f = fields(line);
        if (!f.empty()) {
            fn(no, f);
        }
    }
}

long long parse_int(const std::string& s, const std::string& where)
{
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw format_error(where + ": expected an integer, found '" + s + "'");
    }
    return v;
}

}  // namespace

Qrels parse_qrels(const std::string& contents, const std::string& source)
{
    Qrels q;
    for_each_line(contents, [&](std::size_t no, const std::vector<std::string>& f) {
        const auto where = source + ":" + std::to_string(no);
        if (f.size() != 4) {
            throw format_error(where + ": expected 'qid 0 docid grade'");
        }
        const auto grade = parse_int(f[3], where);
        if (grade < 0) {
            throw format_error(where + ": negative relevance grade");
        }
        q[f[0]][f[2]] = static_cast<int>(grade);
    });
    return q;
}

Qrels read_qrels(const std::filesystem::path& path) { return parse_qrels(util::read_file(path), path.string()); }

std::string format_qrels(const Qrels& qrels)
{
    std::string out;
    for (const auto& [qid, docs] : qrels) {
        for (const auto& [doc, grade] : docs) {
            out += qid + " 0 " + doc + " " + std::to_string(grade) + "\n";
        }
    }
    return out;
}

void write_qrels(const std::filesystem::path& path, const Qrels& qrels)
{
    util::write_file_atomic(path, format_qrels(qrels));
}

Run parse_run(const std::string& contents, const std::string& source)
{
    struct Line {
        long long rank;
        std::size_t order;
        RankedDoc doc;
    };
    std::map<std::string, std::vector<Line>> lines;
    Run run;
    std::size_t order = 0;
    for_each_line(contents, [&](std::size_t no, const std::vector<std::string>& f) {
        const auto where = source + ":" + std::to_string(no);
        if (f.size() != 6) {
            throw format_error(where + ": expected 'qid Q0 docid rank score tag'");
        }
        char* end = nullptr;
        const double score = std::strtod(f[4].c_str(), &end);
        if (end != f[4].c_str() + f[4].size()) {
            throw format_error(where + ": malformed score '" + f[4] + "'");
        }
        if (run.tag.empty()) {
            run.tag = f[5];
        }
        lines[f[0]].push_back({parse_int(f[3], where), order++, {f[2], score}});
    });
    for (auto& [qid, list] : lines) {
        std::sort(list.begin(), list.end(),
                  [](const Line& a, const Line& b) { return a.rank < b.rank || (a.rank == b.rank && a.order < b.order); });
        std::set<std::string> seen;
        auto& out = run.queries[qid];
        for (auto& l : list) {
            if (!seen.insert(l.doc.doc).second) {
                throw format_error(source + ": document '" + l.doc.doc + "' listed twice for query '" + qid + "'");
            }
            out.push_back(std::move(l.doc));
        }
    }
    return run;
}

Run read_run(const std::filesystem::path& path) { return parse_run(util::read_file(path), path.string()); }

std::string format_run(const Run& run)
{
    const std::string tag = run.tag.empty() ? "lexmae" : run.tag;
    std::string out;
    char score[32];
    for (const auto& [qid, docs] : run.queries) {
        for (std::size_t i = 0; i < docs.size(); ++i) {
            std::snprintf(score, sizeof(score), "%.17g", docs[i].score);
            out += qid + " Q0 " + docs[i].doc + " " + std::to_string(i + 1) + " " + score + " " + tag + "\n";
        }
    }
    return out;
}

void write_run(const std::filesystem::path& path, const Run& run) { util::write_file_atomic(path, format_run(run)); }

std::string make_run_tag(const std::string& system, std::uint64_t corpus_hash, std::uint64_t provenance)
{
    return system + ".c" + util::hex64(corpus_hash) + ".p" + util::hex64(provenance);
}

RunTag parse_run_tag(const std::string& tag)
{
    const auto p = tag.rfind(".p");
    const auto c = p == std::string::npos ? std::string::npos : tag.rfind(".c", p);
    if (c == std::string::npos || p - c != 18 || tag.size() - p != 18) {
        throw format_error("run tag '" + tag + "' does not carry corpus and provenance hashes");
    }
    RunTag out;
    out.system = tag.substr(0, c);
    auto hex = [&](std::size_t at) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(tag.data() + at, tag.data() + at + 16, v, 16);
        if (ec != std::errc() || ptr != tag.data() + at + 16) {
            throw format_error("run tag '" + tag + "' has a malformed hash");
        }
        return v;
    };
    out.corpus_hash = hex(c + 2);
    out.provenance = hex(p + 2);
    return out;
}

}  // namespace lexmae::eval
