#include "lexmae/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"

namespace lexmae::data {

namespace {

constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "tr"};
constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};

/// Distinct pronounceable pseudo-words of two or three syllables.
std::vector<std::string> make_words(std::size_t count, std::mt19937_64& rng)
{
    std::uniform_int_distribution<std::size_t> onset(0, std::size(kOnsets) - 1);
    std::uniform_int_distribution<std::size_t> vowel(0, std::size(kVowels) - 1);
    std::uniform_int_distribution<int> syllables(2, 3);
    std::unordered_set<std::string> seen;
    std::vector<std::string> words;
    while (words.size() < count) {
        std::string w;
        for (int s = syllables(rng); s > 0; --s) {
            w += kOnsets[onset(rng)];
            w += kVowels[vowel(rng)];
        }
        if (seen.insert(w).second) {
            words.push_back(std::move(w));
        }
    }
    return words;
}

std::vector<double> zipf_weights(std::size_t n, double exponent)
{
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
    }
    return w;
}

std::string format_id(char prefix, std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%04zu", prefix, i);
    return buf;
}

struct Doc {
    std::string text;
    /// Global concept ids mentioned, in either surface form.
    std::set<std::size_t> concepts;
    /// Concepts of the primary topic, with multiplicity.
    std::vector<std::size_t> primary_concepts;
};

}  // namespace

void SyntheticConfig::validate() const
{
    if (num_docs == 0 || num_queries == 0 || num_topics < 2 || concepts_per_topic == 0 || background_words == 0) {
        throw config_error("synthetic: counts must be positive and num_topics ≥ 2");
    }
    if (num_queries > num_docs) {
        throw config_error("synthetic: num_queries must not exceed num_docs (each query has its own source document)");
    }
    if (doc_length_min == 0 || doc_length_min > doc_length_max) {
        throw config_error("synthetic: need 0 < doc_length_min ≤ doc_length_max");
    }
    if (query_keywords_min == 0 || query_keywords_min > query_keywords_max) {
        throw config_error("synthetic: need 0 < query_keywords_min ≤ query_keywords_max");
    }
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(primary_share) || !prob(secondary_share) || primary_share + secondary_share > 1.0
        || !prob(doc_synonym_rate) || !prob(query_synonym_rate) || !prob(query_noise_rate)) {
        throw config_error("synthetic: shares and rates must be probabilities");
    }
    if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) {
        throw config_error("synthetic: heldout_fraction must lie in (0, 1)");
    }
    if (!(teacher_scale > 0.0)) {
        throw config_error("synthetic: teacher_scale must be positive");
    }
}

SyntheticDataset generate(const SyntheticConfig& config)
{
    config.validate();
    std::mt19937_64 rng(config.seed);
    const std::size_t num_concepts = config.num_topics * config.concepts_per_topic;
    auto words = make_words(2 * num_concepts + config.background_words, rng);
    // Concept c has primary form words[2c] and synonym words[2c + 1].
    auto surface = [&](std::size_t concept_id, bool synonym) -> const std::string& {
        return words[2 * concept_id + (synonym ? 1 : 0)];
    };
    auto background = [&](std::size_t b) -> const std::string& { return words[2 * num_concepts + b]; };

    const auto concept_weights = zipf_weights(config.concepts_per_topic, 0.6);
    std::discrete_distribution<std::size_t> concept_dist(concept_weights.begin(), concept_weights.end());
    const auto background_weights = zipf_weights(config.background_words, 1.0);
    std::discrete_distribution<std::size_t> background_dist(background_weights.begin(), background_weights.end());
    std::uniform_int_distribution<std::size_t> topic_dist(0, config.num_topics - 1);
    std::uniform_int_distribution<std::size_t> length_dist(config.doc_length_min, config.doc_length_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SyntheticDataset out;
    std::vector<Doc> docs(config.num_docs);
    for (std::size_t i = 0; i < config.num_docs; ++i) {
        const std::size_t primary = topic_dist(rng);
        std::size_t secondary = topic_dist(rng);
        while (secondary == primary) {
            secondary = topic_dist(rng);
        }
        auto& doc = docs[i];
        const std::size_t length = length_dist(rng);
        for (std::size_t t = 0; t < length; ++t) {
            const double u = unit(rng);
            std::string_view word;
            if (u < config.primary_share + config.secondary_share) {
                const std::size_t topic = u < config.primary_share ? primary : secondary;
                const std::size_t c = topic * config.concepts_per_topic + concept_dist(rng);
                word = surface(c, unit(rng) < config.doc_synonym_rate);
                doc.concepts.insert(c);
                if (topic == primary) {
                    doc.primary_concepts.push_back(c);
                }
            }
            else {
                word = background(background_dist(rng));
            }
            if (!doc.text.empty()) {
                doc.text += ' ';
            }
            doc.text += word;
        }
        out.corpus.push_back({format_id('d', i), doc.text});
    }

    // Each query paraphrases a distinct source document.
    std::vector<std::size_t> sources(config.num_docs);
    std::iota(sources.begin(), sources.end(), 0);
    std::shuffle(sources.begin(), sources.end(), rng);
    const auto num_heldout = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.heldout_fraction * static_cast<double>(config.num_queries))));
    const std::size_t num_train = config.num_queries - std::min(num_heldout, config.num_queries - 1);
    std::uniform_int_distribution<std::size_t> keyword_count(config.query_keywords_min, config.query_keywords_max);
    std::vector<std::vector<std::size_t>> query_concepts;
    for (std::size_t q = 0; q < config.num_queries; ++q) {
        const auto& doc = docs[sources[q]];
        std::vector<std::size_t> candidates(doc.primary_concepts.begin(), doc.primary_concepts.end());
        if (candidates.empty()) {
            candidates.assign(doc.concepts.begin(), doc.concepts.end());
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
        // Rarer concepts are more distinctive, so they are more likely keywords.
        std::vector<double> salience;
        for (auto c : candidates) {
            salience.push_back(1.0 / concept_weights[c % config.concepts_per_topic]);
        }
        std::vector<std::size_t> chosen;
        const std::size_t k = std::min(keyword_count(rng), candidates.size());
        while (chosen.size() < k) {
            std::discrete_distribution<std::size_t> pick(salience.begin(), salience.end());
            const std::size_t j = pick(rng);
            chosen.push_back(candidates[j]);
            salience[j] = 0.0;
        }
        std::vector<std::string> terms;
        for (auto c : chosen) {
            terms.push_back(surface(c, unit(rng) < config.query_synonym_rate));
        }
        if (unit(rng) < config.query_noise_rate) {
            terms.push_back(background(background_dist(rng)));
        }
        std::shuffle(terms.begin(), terms.end(), rng);
        std::string text;
        for (const auto& t : terms) {
            text += (text.empty() ? "" : " ") + t;
        }
        const auto qid = format_id('q', q);
        (q < num_train ? out.train_queries : out.heldout_queries).push_back({qid, text});
        auto& judged = out.qrels[qid];
        for (std::size_t d = 0; d < config.num_docs; ++d) {
            if (d == sources[q]) {
                judged[out.corpus[d].id] = 2;
            }
            else if (std::all_of(chosen.begin(), chosen.end(), [&](auto c) { return docs[d].concepts.contains(c); })) {
                judged[out.corpus[d].id] = 1;
            }
        }
        query_concepts.push_back(std::move(chosen));
    }

    // Teacher: smoothed concept overlap with the source document, blind to
    // which surface form was used (as a cross-encoder would be).
    for (std::size_t q = 0; q < num_train; ++q) {
        const auto& positive = docs[sources[q]].concepts;
        const double denom = static_cast<double>(positive.size()) + 1.0;
        for (std::size_t d = 0; d < config.num_docs; ++d) {
            std::size_t overlap = 0;
            for (auto c : docs[d].concepts) {
                overlap += positive.contains(c) ? 1 : 0;
            }
            const double score = config.teacher_scale * (static_cast<double>(overlap) + 0.5) / denom;
            out.teacher.push_back({format_id('q', q), out.corpus[d].id, score});
        }
    }
    return out;
}

std::string format_teacher(const std::vector<TeacherRecord>& records)
{
    std::string out;
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.score);
        out += r.query + '\t' + r.doc + '\t' + buf + '\n';
    }
    return out;
}

std::vector<TeacherRecord> parse_teacher(const std::string& contents, const std::string& source)
{
    std::vector<TeacherRecord> out;
    std::istringstream in(contents);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto a = line.find('\t');
        const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
        if (b == std::string::npos) {
            throw format_error(source + ":" + std::to_string(lineno) + ": expected 'qid<TAB>docid<TAB>score'");
        }
        TeacherRecord r{line.substr(0, a), line.substr(a + 1, b - a - 1), 0.0};
        const auto score = line.substr(b + 1);
        std::size_t used = 0;
        try {
            r.score = std::stod(score, &used);
        }
        catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != score.size() || !std::isfinite(r.score)) {
            throw format_error(source + ":" + std::to_string(lineno) + ": bad score '" + score + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TeacherRecord> read_teacher(const std::filesystem::path& path)
{
    return parse_teacher(util::read_file(path), path.string());
}

DatasetPaths dataset_paths(const std::filesystem::path& dir)
{
    return {dir / "corpus.tsv", dir / "queries.train.tsv", dir / "queries.heldout.tsv", dir / "qrels.txt",
            dir / "teacher.tsv"};
}

void write_dataset(const SyntheticDataset& dataset, const DatasetPaths& paths)
{
    text::write_tsv(paths.corpus, dataset.corpus);
    text::write_tsv(paths.train_queries, dataset.train_queries);
    text::write_tsv(paths.heldout_queries, dataset.heldout_queries);
    eval::write_qrels(paths.qrels, dataset.qrels);
    util::write_file_atomic(paths.teacher, format_teacher(dataset.teacher));
}

}  // namespace lexmae::data
