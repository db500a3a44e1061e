#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "lexmae/data/synthetic.hpp"
#include "lexmae/pipeline/workspace.hpp"
#include "lexmae/sparse/vector_file.hpp"
#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"
#include "support/small_run.hpp"

using namespace lexmae;
using namespace lexmae::pipeline;

TEST_CASE("run configuration round-trips")
{
    auto c = RunConfig::defaults("in", "out");
    CHECK(parse_run_config(serialize(c)) == c);

    c.seed = 7;
    c.resolve(0);
    c.model.hidden_size = 32;
    c.layout = model::LmHeadLayout::extra_bottleneck;
    c.pretrain.bottleneck = pretrain::BottleneckVariant::dense_cls;
    c.pretrain.strategy = pretrain::MaskingStrategy::fully_random;
    c.stages[2].lambda_query = 0.01;
    c.stages[1].optimizer.learning_rate = 3e-4;
    c.topk_sweep = {5, 3};
    c.synthetic.teacher_scale = 0.1 + 0.2;
    const auto back = parse_run_config(serialize(c));
    CHECK(back == c);
    CHECK(back.pretrain.seed == 7);
    CHECK(back.stages[0].seed == 7);
    CHECK(serialize(back) == serialize(c));

    auto dir = testing::scratch_dir("config");
    save_run_config(dir / "c.json", c);
    CHECK(load_run_config(dir / "c.json") == c);
}

TEST_CASE("run configuration errors")
{
    CHECK_THROWS_AS(parse_run_config("{\"sed\": 1}"), config_error);
    CHECK_THROWS_AS(parse_run_config("{\"model\": {\"hidden\": 3}}"), config_error);
    CHECK_THROWS_AS(parse_run_config("{\"seed\": \"x\"}"), config_error);
    CHECK_THROWS_AS(parse_run_config("{\"pretrain\": {\"bottleneck\": \"nope\"}}"), config_error);
    CHECK_THROWS_AS(parse_run_config("{not json"), config_error);
    auto c = parse_run_config("{\"model\": {\"hidden_size\": 30}}");
    CHECK_THROWS_AS(c.validate(), config_error);
    c = RunConfig::defaults();
    c.tokenizer.max_vocab = 100;
    CHECK_THROWS_AS(c.validate(), config_error);
    c = RunConfig::defaults();
    c.topk_sweep = {4, 0};
    CHECK_THROWS_AS(c.validate(), config_error);
}

TEST_CASE("config hash tracks content, not location")
{
    auto a = RunConfig::defaults("data-a", "out-a");
    auto b = RunConfig::defaults("data-b", "out-b");
    b.threads = 3;
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 43;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.pretrain.alpha = 0.31;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("stage-1 mining depth resolves from the corpus size")
{
    auto c = RunConfig::defaults();
    CHECK(c.stage(1).mining_depth == 0);
    c.resolve(1000);
    CHECK(c.stage(1).mining_depth == 500);
    auto d = RunConfig::defaults();
    d.resolve(5000);
    CHECK(d.stage(1).mining_depth == 1000);
    CHECK(d.stage(2).mining_depth == 200);
}

TEST_CASE("synthetic dataset")
{
    data::SyntheticConfig cfg;
    const auto a = data::generate(cfg);
    CHECK(a.corpus.size() == 1000);
    CHECK(a.train_queries.size() == 750);
    CHECK(a.heldout_queries.size() == 250);
    CHECK(a.teacher.size() == 750 * 1000);

    const auto b = data::generate(cfg);
    CHECK(a.corpus == b.corpus);
    CHECK(a.train_queries == b.train_queries);
    CHECK(a.qrels == b.qrels);
    CHECK(data::format_teacher(a.teacher) == data::format_teacher(b.teacher));
    cfg.seed = 43;
    CHECK(data::generate(cfg).corpus != a.corpus);

    std::set<std::string> sources;
    for (const auto& [q, judged] : a.qrels) {
        int top = 0;
        std::string source;
        for (const auto& [doc, grade] : judged) {
            CHECK((grade == 1 || grade == 2));
            if (grade == 2) {
                ++top;
                source = doc;
            }
        }
        CHECK(top == 1);
        sources.insert(source);
    }
    CHECK(a.qrels.size() == 1000);
    CHECK(sources.size() == 1000);

    // Each training query's source document gets the highest teacher score
    // (documents covering the same concepts may tie with it).
    std::map<std::string, double> best;
    std::map<std::string, double> source_score;
    for (const auto& r : a.teacher) {
        best[r.query] = std::max(best[r.query], r.score);
        const auto& judged = a.qrels.at(r.query);
        if (auto it = judged.find(r.doc); it != judged.end() && it->second == 2) {
            source_score[r.query] = r.score;
        }
    }
    CHECK(source_score.size() == a.train_queries.size());
    for (const auto& [q, score] : source_score) {
        CHECK(score == best.at(q));
    }

    const auto parsed = data::parse_teacher(data::format_teacher(a.teacher));
    REQUIRE(parsed.size() == a.teacher.size());
    CHECK(parsed[12345].score == a.teacher[12345].score);
    CHECK_THROWS_AS(data::parse_teacher("q1\td1\n"), format_error);
    CHECK_THROWS_AS(data::parse_teacher("q1\td1\tfoo\n"), format_error);

    cfg.num_queries = 2000;
    CHECK_THROWS_AS(data::generate(cfg), config_error);
}

TEST_CASE("commands enforce their order")
{
    const auto root = testing::scratch_dir("order");
    Workspace ws(testing::small_run(root));
    CHECK_THROWS_AS(ws.build_vocab(), pipeline_order_error);
    ws.synthesize();
    CHECK_THROWS_AS(ws.pretrain(), pipeline_order_error);
    ws.build_vocab();
    CHECK_THROWS_AS(ws.finetune(1), pipeline_order_error);
    CHECK_THROWS_AS(ws.encode("pretrained", {0}), pipeline_order_error);
    CHECK_THROWS_AS(ws.build_index("pretrained", 0), pipeline_order_error);
    CHECK_THROWS_AS((void)ws.search("pretrained", 0, Split::heldout, 10), pipeline_order_error);
    CHECK_THROWS_AS(ws.evaluate({ws.layout().run("pretrained", "heldout")}, Split::heldout), pipeline_order_error);
    ws.pretrain();
    CHECK_THROWS_AS(ws.finetune(2), pipeline_order_error);
    CHECK_NOTHROW(ws.finetune(1));
    CHECK(std::filesystem::exists(ws.layout().config()));
    CHECK(load_run_config(ws.layout().config()).stage(1).mining_depth == 30);

    std::filesystem::remove(testing::small_run(root).paths.teacher);
    ws.finetune(2);
    CHECK_THROWS_AS(ws.finetune(3), pipeline_order_error);
}

TEST_CASE("incompatible checkpoints are rejected")
{
    const auto root = testing::scratch_dir("incompatible");
    auto cfg = testing::small_run(root);
    {
        Workspace ws(cfg);
        ws.synthesize();
        ws.build_vocab();
        ws.pretrain();
    }
    cfg.model.hidden_size = 8;
    Workspace other(cfg);
    CHECK_THROWS_AS(other.encode("pretrained", {0}), config_error);
}

TEST_CASE("encode, index, search with a top-K cut")
{
    const auto root = testing::scratch_dir("topk");
    Workspace ws(testing::small_run(root));
    ws.synthesize();
    ws.build_vocab();
    ws.pretrain();
    const std::vector<std::size_t> ks{0, 16, 8, 4, 2, 1};
    const auto report = ws.encode("pretrained", ks);
    CHECK(report.inference_calls == ws.dataset().docs.size());
    for (std::size_t i = 1; i < report.mean_nnz.size(); ++i) {
        CHECK(report.mean_nnz[i].second <= report.mean_nnz[i - 1].second);
    }
    const auto full = sparse::load_sparse_file(ws.layout().vectors("pretrained"));
    CHECK(full.records.size() == ws.dataset().docs.size());
    CHECK(full.info.provenance == ws.config_hash());

    ws.build_index("pretrained", 8);
    const auto run = ws.search("pretrained", 8, Split::heldout, 20);
    const auto idx = index::ImpactIndex::load(ws.layout().index("pretrained", 8));
    const auto vectors = idx.reconstruct();
    std::map<std::string, std::size_t> nnz;
    for (std::uint32_t d = 0; d < idx.num_docs(); ++d) {
        nnz[idx.doc_name(d)] = vectors[d].nnz();
    }
    std::size_t returned = 0;
    for (const auto& [q, ranked] : run.queries) {
        for (const auto& r : ranked) {
            CHECK(nnz.at(r.doc) <= 8);
            ++returned;
        }
    }
    CHECK(returned > 0);
    CHECK(run.queries.size() == ws.dataset().heldout.records.size());

    const auto reports = ws.evaluate({ws.layout().run("pretrained.top8", "heldout")}, Split::heldout);
    CHECK(reports.front().system == "pretrained.top8");
    CHECK(std::filesystem::exists(ws.layout().metrics("pretrained.top8", "heldout").string() + ".json"));
}

TEST_CASE("evaluation refuses runs from another corpus")
{
    const auto root = testing::scratch_dir("mismatch");
    auto cfg = testing::small_run(root);
    Workspace ws(cfg);
    ws.synthesize();
    ws.build_vocab();
    ws.bm25(Split::heldout, 10);
    const auto run_path = ws.layout().run("bm25", "heldout");
    CHECK_NOTHROW(ws.evaluate({run_path}, Split::heldout));

    // Same queries and qrels, one document edited.
    auto corpus = text::read_tsv(cfg.paths.corpus);
    corpus[0].text += " extra";
    text::write_tsv(cfg.paths.corpus, corpus);
    Workspace changed(cfg);
    CHECK_THROWS_AS(changed.evaluate({run_path}, Split::heldout), evaluation_error);
}
