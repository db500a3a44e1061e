#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lexmae/eval/metrics.hpp"
#include "lexmae/eval/trec.hpp"
#include "lexmae/index/impact_index.hpp"
#include "lexmae/pipeline/run_config.hpp"
#include "lexmae/pipeline/workspace.hpp"
#include "lexmae/sparse/encoder.hpp"
#include "lexmae/sparse/vectors.hpp"
#include "lexmae/util/errors.hpp"

namespace py = pybind11;
using namespace lexmae;

namespace {

using RankedIds = std::map<std::string, std::vector<std::string>>;

/// Python runs are plain {qid: [docid, …]} in rank order.
eval::Run to_run(const RankedIds& ranked)
{
    eval::Run run;
    for (const auto& [qid, docs] : ranked) {
        double score = static_cast<double>(docs.size());
        for (const auto& d : docs) {
            run.queries[qid].push_back({d, score--});
        }
    }
    return run;
}

py::dict to_dict(const eval::MetricReport& report)
{
    py::dict metrics;
    for (const auto& [name, value] : report.metrics) {
        metrics[py::str(name)] = value;
    }
    return metrics;
}

py::list to_list(const eval::Run& run)
{
    py::list out;
    for (const auto& [qid, docs] : run.queries) {
        for (std::size_t r = 0; r < docs.size(); ++r) {
            out.append(py::make_tuple(qid, docs[r].doc, r + 1, docs[r].score));
        }
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Learned sparse retrieval: sparse vectors, impact index, metrics, and the training pipeline.";

    static py::exception<error> base(m, "LexmaeError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        }
        catch (const error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(base)(py::str(e.what()));
            exc.attr("exit_code") = e.exit_code();
            PyErr_SetObject(base.ptr(), exc.ptr());
        }
    });

    // Sparse vectors are lists of (term, weight) pairs in increasing term order.
    m.def("from_dense", [](const std::vector<double>& dense) { return sparse::from_dense(dense).entries; },
          py::arg("dense"));
    m.def(
        "topk_sparsify",
        [](std::vector<std::pair<std::uint32_t, double>> entries, std::size_t k) {
            return sparse::topk_sparsify({std::move(entries)}, k).entries;
        },
        py::arg("vector"), py::arg("k"));
    m.def(
        "quantize",
        [](std::vector<std::pair<std::uint32_t, double>> entries) { return sparse::quantize({std::move(entries)}).entries; },
        py::arg("vector"));

    m.def(
        "mrr_at_k", [](const RankedIds& run, const eval::Qrels& qrels, std::size_t k) {
            return eval::mrr_at_k(to_run(run), qrels, k);
        },
        py::arg("run"), py::arg("qrels"), py::arg("k") = 10);
    m.def(
        "marco_recall_at_n", [](const RankedIds& run, const eval::Qrels& qrels, std::size_t n) {
            return eval::marco_recall_at_n(to_run(run), qrels, n);
        },
        py::arg("run"), py::arg("qrels"), py::arg("n"));
    m.def(
        "dpr_recall_at_n", [](const RankedIds& run, const eval::Qrels& qrels, std::size_t n) {
            return eval::dpr_recall_at_n(to_run(run), qrels, n);
        },
        py::arg("run"), py::arg("qrels"), py::arg("n"));
    m.def(
        "ndcg_at_k", [](const RankedIds& run, const eval::Qrels& qrels, std::size_t k) {
            return eval::ndcg_at_k(to_run(run), qrels, k);
        },
        py::arg("run"), py::arg("qrels"), py::arg("k") = 10);
    m.def("read_qrels", &eval::read_qrels, py::arg("path"));

    py::class_<index::StorageReport>(m, "StorageReport")
        .def_readonly("postings", &index::StorageReport::postings)
        .def_readonly("posting_bytes", &index::StorageReport::posting_bytes)
        .def_readonly("overhead_bytes", &index::StorageReport::overhead_bytes)
        .def_property_readonly("total", &index::StorageReport::total);

    py::class_<index::ImpactIndex>(m, "ImpactIndex")
        .def_static(
            "build",
            [](const std::vector<std::pair<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>>>& docs,
               std::size_t dimension) {
                std::vector<sparse::VectorRecord<sparse::QuantizedVector>> records;
                for (const auto& [name, entries] : docs) {
                    records.push_back({name, {entries}});
                }
                return index::ImpactIndex::build(records, dimension);
            },
            py::arg("docs"), py::arg("dimension"),
            "Builds from [(name, [(term, impact), …]), …]; impacts must lie in [1, 255].")
        .def_static("load", &index::ImpactIndex::load, py::arg("path"))
        .def("save", &index::ImpactIndex::save, py::arg("path"))
        .def_property_readonly("num_docs", &index::ImpactIndex::num_docs)
        .def_property_readonly("num_postings", &index::ImpactIndex::num_postings)
        .def_property_readonly("dimension", &index::ImpactIndex::dimension)
        .def("storage", &index::ImpactIndex::storage)
        .def(
            "search",
            [](const index::ImpactIndex& idx, std::vector<std::pair<std::uint32_t, std::uint32_t>> query,
               std::size_t k) {
                std::vector<std::pair<std::string, std::uint64_t>> out;
                for (const auto& hit : idx.search({std::move(query)}, k)) {
                    out.emplace_back(idx.doc_name(hit.doc), hit.score);
                }
                return out;
            },
            py::arg("query"), py::arg("k"), "Exact top-k as [(name, score), …].");

    m.def(
        "default_config",
        [](const std::filesystem::path& data, const std::filesystem::path& output) {
            return pipeline::serialize(pipeline::RunConfig::defaults(data, output));
        },
        py::arg("data_dir"), py::arg("output_dir"), "The default run configuration as JSON text.");

    py::class_<pipeline::Workspace>(m, "Workspace")
        .def(py::init([](const std::string& config_json) {
                 return pipeline::Workspace(pipeline::parse_run_config(config_json));
             }),
             py::arg("config_json"))
        .def_static(
            "from_file",
            [](const std::filesystem::path& path) { return pipeline::Workspace(pipeline::load_run_config(path)); },
            py::arg("path"))
        .def_property_readonly("config_json", [](const pipeline::Workspace& ws) { return pipeline::serialize(ws.config()); })
        .def_property_readonly("config_hash", &pipeline::Workspace::config_hash)
        .def_property_readonly("output_dir", [](const pipeline::Workspace& ws) { return ws.config().paths.output; })
        .def("synthesize", &pipeline::Workspace::synthesize, py::call_guard<py::gil_scoped_release>())
        .def("build_vocab", [](pipeline::Workspace& ws) { return ws.build_vocab().size(); },
             py::call_guard<py::gil_scoped_release>())
        .def("pretrain", &pipeline::Workspace::pretrain, py::call_guard<py::gil_scoped_release>())
        .def("finetune", &pipeline::Workspace::finetune, py::arg("stage"), py::call_guard<py::gil_scoped_release>())
        .def(
            "encode",
            [](pipeline::Workspace& ws, const std::string& model, const std::vector<std::size_t>& topk) {
                py::gil_scoped_release release;
                return ws.encode(model, topk).mean_nnz;
            },
            py::arg("model"), py::arg("topk") = std::vector<std::size_t>{0},
            "Returns [(K, mean nnz), …]; K = 0 is the full representation.")
        .def(
            "build_index",
            [](pipeline::Workspace& ws, const std::string& model, std::size_t k) {
                py::gil_scoped_release release;
                return ws.build_index(model, k);
            },
            py::arg("model"), py::arg("topk") = 0)
        .def(
            "search",
            [](pipeline::Workspace& ws, const std::string& model, std::size_t k, const std::string& split,
               std::size_t depth) {
                eval::Run run;
                {
                    py::gil_scoped_release release;
                    run = ws.search(model, k, pipeline::split_from_string(split), depth);
                }
                return to_list(run);
            },
            py::arg("model"), py::arg("topk") = 0, py::arg("split") = "heldout", py::arg("depth") = 1000,
            "Returns [(qid, docid, rank, score), …].")
        .def(
            "bm25",
            [](pipeline::Workspace& ws, const std::string& split, std::size_t depth) {
                eval::Run run;
                {
                    py::gil_scoped_release release;
                    run = ws.bm25(pipeline::split_from_string(split), depth);
                }
                return to_list(run);
            },
            py::arg("split") = "heldout", py::arg("depth") = 1000)
        .def(
            "evaluate",
            [](pipeline::Workspace& ws, const std::vector<std::filesystem::path>& runs, const std::string& split) {
                py::dict out;
                for (const auto& r : ws.evaluate(runs, pipeline::split_from_string(split))) {
                    out[py::str(r.system)] = to_dict(r);
                }
                return out;
            },
            py::arg("runs"), py::arg("split") = "heldout", "Returns {system: {metric: value}}.")
        .def("zero_shot", [](pipeline::Workspace& ws) { return to_dict(ws.zero_shot()); })
        .def(
            "run_all",
            [](pipeline::Workspace& ws) {
                pipeline::PipelineReport report;
                {
                    py::gil_scoped_release release;
                    report = ws.run_all();
                }
                py::dict out;
                for (const auto& r : report.heldout) {
                    out[py::str(r.system)] = to_dict(r);
                }
                return out;
            },
            "Runs every stage; returns held-out metrics per system.")
        .def(
            "encode_text",
            [](pipeline::Workspace& ws, const std::string& model, const std::string& text) {
                const auto weights = ws.load_model(model);
                const auto tokens = ws.dataset().vocab.encode(text, ws.config().tokenizer.max_length);
                std::vector<std::pair<std::string, double>> out;
                for (const auto& [term, weight] : sparse::encode_lexicon(weights, tokens).entries) {
                    // The model's output space may be larger than the built vocabulary.
                    const auto& vocab = ws.dataset().vocab;
                    out.emplace_back(term < vocab.size() ? vocab.token(static_cast<std::int32_t>(term))
                                                         : "[unused" + std::to_string(term) + "]",
                                     weight);
                }
                return out;
            },
            py::arg("model"), py::arg("text"), "Full lexicon representation as [(token, weight), …].");
}
