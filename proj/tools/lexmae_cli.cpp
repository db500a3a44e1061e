// Command-line front end: one subcommand per pipeline step, plus `pipeline`
// to chain them all.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lexmae/pipeline/workspace.hpp"
#include "lexmae/util/errors.hpp"

namespace {

using namespace lexmae;
using namespace lexmae::pipeline;

struct CommonOptions {
    std::string config;
    std::string data;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

RunConfig resolve_config(const CommonOptions& o)
{
    RunConfig c = o.config.empty() ? RunConfig::defaults() : load_run_config(o.config);
    if (!o.data.empty()) {
        const auto files = data::dataset_paths(o.data);
        c.paths.corpus = files.corpus;
        c.paths.train_queries = files.train_queries;
        c.paths.heldout_queries = files.heldout_queries;
        c.paths.qrels = files.qrels;
        c.paths.teacher = files.teacher;
    }
    if (!o.output.empty()) {
        c.paths.output = o.output;
    }
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.threads) {
        c.threads = *o.threads;
    }
    c.resolve(0);
    return c;
}

void print_report(const eval::MetricReport& r)
{
    std::cout << eval::format_report_text({r});
}

const std::vector<std::string> kModels{"pretrained", "stage1", "stage2", "stage3"};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"lexmae: lexicon-weighting retrieval — pre-training, fine-tuning, indexing, evaluation"};
    app.require_subcommand(1);
    CommonOptions common;
    app.add_option("-c,--config", common.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("-d,--data", common.data, "Dataset directory (corpus.tsv, queries.*.tsv, qrels.txt, teacher.tsv)");
    app.add_option("-o,--output", common.output, "Output directory");
    app.add_option("--seed", common.seed, "Override the run seed");
    app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");

    auto* config_cmd = app.add_subcommand("config", "Write the resolved configuration");
    std::string config_out;
    config_cmd->add_option("--write", config_out, "Destination (default: stdout)");

    auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
    std::optional<std::size_t> synth_docs;
    std::optional<std::size_t> synth_queries;
    synth->add_option("--docs", synth_docs, "Number of documents");
    synth->add_option("--queries", synth_queries, "Number of queries");

    auto* vocab = app.add_subcommand("build-vocab", "Build the vocabulary from the corpus");

    auto* pretrain_cmd = app.add_subcommand("pretrain", "Pre-train encoder and decoder");
    std::optional<std::size_t> steps;
    std::string bottleneck;
    std::string strategy;
    pretrain_cmd->add_option("--steps", steps, "Optimizer steps");
    pretrain_cmd->add_option("--bottleneck", bottleneck, "softmax-cbow | saturated-cbow | dense-cls | disabled");
    pretrain_cmd->add_option("--strategy", strategy, "inclusive | exclusive | fully-random");

    auto* finetune_cmd = app.add_subcommand("finetune", "Run one fine-tuning stage");
    int stage = 0;
    finetune_cmd->add_option("--stage", stage, "Stage 1, 2 or 3")->required()->check(CLI::Range(1, 3));

    std::string model = "pretrained";
    std::vector<std::size_t> topk{0};
    std::size_t single_k = 0;
    std::optional<std::size_t> depth;
    std::string split = "heldout";

    auto* encode_cmd = app.add_subcommand("encode", "Encode the corpus into sparse and quantized vectors");
    encode_cmd->add_option("--model", model, "pretrained | stage1 | stage2 | stage3")->check(CLI::IsMember(kModels));
    encode_cmd->add_option("--topk", topk, "K values to keep per document (0 = all); repeatable");

    auto* index_cmd = app.add_subcommand("index", "Build an impact index from quantized vectors");
    index_cmd->add_option("--model", model, "Model whose vectors to index")->check(CLI::IsMember(kModels));
    index_cmd->add_option("--topk", single_k, "Which sparsified vectors to index (0 = all terms)");

    auto* search_cmd = app.add_subcommand("search", "Retrieve for a query split and write a TREC run");
    search_cmd->add_option("--model", model, "Model encoding the queries")->check(CLI::IsMember(kModels));
    search_cmd->add_option("--topk", single_k, "Which index to search (0 = all terms)");
    search_cmd->add_option("--k", depth, "Results per query");
    search_cmd->add_option("--split", split, "train | heldout");

    auto* bm25_cmd = app.add_subcommand("bm25", "BM25 baseline run");
    bm25_cmd->add_option("--k", depth, "Results per query");
    bm25_cmd->add_option("--split", split, "train | heldout");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate TREC runs against the qrels");
    std::vector<std::string> runs;
    eval_cmd->add_option("--run", runs, "Run file; repeatable")->required();
    eval_cmd->add_option("--split", split, "train | heldout");

    auto* zero_cmd = app.add_subcommand("zero-shot", "Evaluate the pre-trained encoder without fine-tuning");

    auto* pipeline_cmd = app.add_subcommand("pipeline", "Run every step: BM25, pre-training, zero-shot, stages 1-3");
    bool synthesize = false;
    pipeline_cmd->add_flag("--synthesize", synthesize, "Generate the synthetic dataset first");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(error_category::usage);
    }

    try {
        RunConfig config = resolve_config(common);
        if (*config_cmd) {
            if (config_out.empty()) {
                std::cout << serialize(config);
            }
            else {
                save_run_config(config_out, config);
            }
            return 0;
        }
        if (*synth) {
            if (synth_docs) {
                config.synthetic.num_docs = *synth_docs;
            }
            if (synth_queries) {
                config.synthetic.num_queries = *synth_queries;
            }
        }
        if (*pretrain_cmd) {
            if (steps) {
                config.pretrain.steps = *steps;
            }
            if (!bottleneck.empty()) {
                config.pretrain.bottleneck = pretrain::bottleneck_variant_from_string(bottleneck);
            }
            if (!strategy.empty()) {
                config.pretrain.strategy = pretrain::masking_strategy_from_string(strategy);
            }
        }
        Workspace ws(config);
        const std::size_t k = depth.value_or(config.search_depth);

        if (*synth) {
            ws.synthesize();
        }
        else if (*vocab) {
            auto v = ws.build_vocab();
            std::cout << "vocabulary: " << v.size() << " entries -> " << ws.layout().vocab().string() << "\n";
        }
        else if (*pretrain_cmd) {
            ws.pretrain();
            std::cout << "checkpoint -> " << ws.layout().checkpoint("pretrained").string() << "\n";
        }
        else if (*finetune_cmd) {
            ws.finetune(stage);
            std::cout << "checkpoint -> " << ws.layout().checkpoint(model_name(stage)).string() << "\n";
        }
        else if (*encode_cmd) {
            auto report = ws.encode(model, topk);
            for (const auto& [kk, nnz] : report.mean_nnz) {
                std::printf("top%zu\tmean_nnz\t%.4f\n", kk, nnz);
            }
        }
        else if (*index_cmd) {
            auto s = ws.build_index(model, single_k);
            std::printf("postings\t%llu\nposting_bytes\t%llu\noverhead_bytes\t%llu\ntotal_bytes\t%llu\n",
                        static_cast<unsigned long long>(s.postings), static_cast<unsigned long long>(s.posting_bytes),
                        static_cast<unsigned long long>(s.overhead_bytes), static_cast<unsigned long long>(s.total()));
        }
        else if (*search_cmd) {
            ws.search(model, single_k, split_from_string(split), k);
            std::cout << "run -> " << ws.layout().run(system_name(model, single_k), split).string() << "\n";
        }
        else if (*bm25_cmd) {
            ws.bm25(split_from_string(split), k);
            std::cout << "run -> " << ws.layout().run("bm25", split).string() << "\n";
        }
        else if (*eval_cmd) {
            std::vector<std::filesystem::path> paths(runs.begin(), runs.end());
            std::cout << eval::format_report_text(ws.evaluate(paths, split_from_string(split)));
        }
        else if (*zero_cmd) {
            print_report(ws.zero_shot());
        }
        else if (*pipeline_cmd) {
            if (synthesize) {
                ws.synthesize();
            }
            auto report = ws.run_all([](const std::string& step) { std::cerr << "[pipeline] " << step << "\n"; });
            std::cout << eval::format_report_text(report.heldout);
        }
        return 0;
    }
    catch (const lexmae::error& e) {
        std::cerr << "lexmae: error: " << e.what() << "\n";
        return e.exit_code();
    }
    catch (const std::exception& e) {
        std::cerr << "lexmae: internal error: " << e.what() << "\n";
        return 1;
    }
}
