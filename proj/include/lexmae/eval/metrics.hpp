#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lexmae/eval/trec.hpp"

namespace lexmae::eval {

/// Every metric averages over the queries of `qrels`; a query missing from
/// the run contributes 0. A run query absent from `qrels` is an
/// evaluation_error, as is an empty `qrels`.
double mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k);
/// Hits among the top n divided by min(n, |positives|).
double marco_recall_at_n(const Run& run, const Qrels& qrels, std::size_t n);
/// 1 when any positive appears among the top n.
double dpr_recall_at_n(const Run& run, const Qrels& qrels, std::size_t n);
/// Gain 2^grade − 1, discount log2(rank + 1), ideal ordering from the qrels grades.
double ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k);

struct MetricReport {
    std::string system;
    std::vector<std::pair<std::string, double>> metrics;

    [[nodiscard]] double get(const std::string& name) const;
};

/// MRR@10, nDCG@10, and both recall definitions at 50 and 1000.
MetricReport evaluate(const std::string& system, const Run& run, const Qrels& qrels);

/// One `system<TAB>metric<TAB>value` line per metric.
std::string format_report_text(const std::vector<MetricReport>& reports);
/// {"systems": [{"system": …, "metrics": {name: value}}]}.
std::string format_report_json(const std::vector<MetricReport>& reports);
void write_reports(const std::filesystem::path& stem, const std::vector<MetricReport>& reports);

}  // namespace lexmae::eval
