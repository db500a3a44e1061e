#include "lexmae/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"

namespace lexmae::eval {

namespace {

using Grades = std::map<std::string, int>;
using PerQuery = std::function<double(const std::vector<RankedDoc>&, const Grades&)>;

double average(const Run& run, const Qrels& qrels, const PerQuery& fn)
{
    if (qrels.empty()) {
        throw evaluation_error("cannot evaluate against empty qrels");
    }
    for (const auto& [qid, docs] : run.queries) {
        if (!qrels.contains(qid)) {
            throw evaluation_error("run query '" + qid + "' has no relevance judgements");
        }
    }
    static const std::vector<RankedDoc> kEmpty;
    double total = 0.0;
    for (const auto& [qid, grades] : qrels) {
        auto it = run.queries.find(qid);
        total += fn(it == run.queries.end() ? kEmpty : it->second, grades);
    }
    return total / static_cast<double>(qrels.size());
}

int grade_of(const Grades& grades, const std::string& doc)
{
    auto it = grades.find(doc);
    return it == grades.end() ? 0 : it->second;
}

std::size_t positives(const Grades& grades)
{
    return static_cast<std::size_t>(std::count_if(grades.begin(), grades.end(), [](const auto& g) { return g.second >= 1; }));
}

std::size_t hits_at(const std::vector<RankedDoc>& docs, const Grades& grades, std::size_t n)
{
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(n, docs.size()); ++i) {
        hits += grade_of(grades, docs[i].doc) >= 1 ? 1 : 0;
    }
    return hits;
}

}  // namespace

double mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k)
{
    return average(run, qrels, [k](const auto& docs, const auto& grades) {
        for (std::size_t i = 0; i < std::min(k, docs.size()); ++i) {
            if (grade_of(grades, docs[i].doc) >= 1) {
                return 1.0 / static_cast<double>(i + 1);
            }
        }
        return 0.0;
    });
}

double marco_recall_at_n(const Run& run, const Qrels& qrels, std::size_t n)
{
    return average(run, qrels, [n](const auto& docs, const auto& grades) {
        const auto pos = positives(grades);
        if (pos == 0) {
            return 0.0;
        }
        return static_cast<double>(hits_at(docs, grades, n)) / static_cast<double>(std::min(n, pos));
    });
}

double dpr_recall_at_n(const Run& run, const Qrels& qrels, std::size_t n)
{
    return average(run, qrels, [n](const auto& docs, const auto& grades) {
        return hits_at(docs, grades, n) > 0 ? 1.0 : 0.0;
    });
}

double ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k)
{
    return average(run, qrels, [k](const auto& docs, const auto& grades) {
        auto gain = [](int g) { return std::exp2(static_cast<double>(g)) - 1.0; };
        auto discount = [](std::size_t i) { return 1.0 / std::log2(static_cast<double>(i) + 2.0); };
        double dcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, docs.size()); ++i) {
            dcg += gain(grade_of(grades, docs[i].doc)) * discount(i);
        }
        std::vector<int> ideal;
        for (const auto& [doc, g] : grades) {
            ideal.push_back(g);
        }
        std::sort(ideal.rbegin(), ideal.rend());
        double idcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
            idcg += gain(ideal[i]) * discount(i);
        }
        return idcg > 0.0 ? dcg / idcg : 0.0;
    });
}

double MetricReport::get(const std::string& name) const
{
    for (const auto& [n, v] : metrics) {
        if (n == name) {
            return v;
        }
    }
    throw contract_error("report for '" + system + "' has no metric '" + name + "'");
}

MetricReport evaluate(const std::string& system, const Run& run, const Qrels& qrels)
{
    MetricReport r;
    r.system = system;
    r.metrics = {
        {"mrr@10", mrr_at_k(run, qrels, 10)},
        {"ndcg@10", ndcg_at_k(run, qrels, 10)},
        {"marco_recall@50", marco_recall_at_n(run, qrels, 50)},
        {"marco_recall@1000", marco_recall_at_n(run, qrels, 1000)},
        {"dpr_recall@50", dpr_recall_at_n(run, qrels, 50)},
        {"dpr_recall@1000", dpr_recall_at_n(run, qrels, 1000)},
    };
    return r;
}

std::string format_report_text(const std::vector<MetricReport>& reports)
{
    std::string out;
    char value[32];
    for (const auto& r : reports) {
        for (const auto& [name, v] : r.metrics) {
            std::snprintf(value, sizeof(value), "%.6f", v);
            out += r.system + "\t" + name + "\t" + value + "\n";
        }
    }
    return out;
}

std::string format_report_json(const std::vector<MetricReport>& reports)
{
    nlohmann::ordered_json systems = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json metrics;
        for (const auto& [name, v] : r.metrics) {
            metrics[name] = v;
        }
        systems.push_back({{"system", r.system}, {"metrics", metrics}});
    }
    nlohmann::ordered_json root;
    root["systems"] = systems;
    return root.dump(2) + "\n";
}

void write_reports(const std::filesystem::path& stem, const std::vector<MetricReport>& reports)
{
    auto text = stem;
    text += ".tsv";
    auto json = stem;
    json += ".json";
    util::write_file_atomic(text, format_report_text(reports));
    util::write_file_atomic(json, format_report_json(reports));
}

}  // namespace lexmae::eval
