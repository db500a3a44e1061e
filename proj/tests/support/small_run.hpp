#pragma once

// A miniature run: a few dozen synthetic documents and a tiny model, so
// every pipeline command finishes in well under a second.

#include <filesystem>
#include <random>
#include <string>

#include "lexmae/pipeline/run_config.hpp"

namespace lexmae::testing {

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("lexmae-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline pipeline::RunConfig small_run(const std::filesystem::path& root)
{
    auto c = pipeline::RunConfig::defaults(root / "data", root / "out");
    c.synthetic.num_docs = 60;
    c.synthetic.num_queries = 16;
    c.synthetic.num_topics = 3;
    c.synthetic.concepts_per_topic = 20;
    c.synthetic.background_words = 20;
    c.synthetic.doc_length_min = 8;
    c.synthetic.doc_length_max = 14;
    c.model = model::ModelConfig::tiny();
    c.model.vocab_size = 200;
    c.model.max_sequence_length = 24;
    c.tokenizer.max_vocab = 200;
    c.tokenizer.max_length = 24;
    c.pretrain.steps = 6;
    c.pretrain.batch_size = 4;
    c.pretrain.optimizer.warmup_steps = 2;
    for (auto& s : c.stages) {
        s.epochs = 1;
        s.negatives_per_query = 3;
        s.batch_size = 4;
        if (s.stage != 1) {
            s.mining_depth = 10;
        }
    }
    c.topk_sweep = {16, 8, 4, 2, 1};
    c.search_depth = 20;
    c.threads = 2;
    return c;
}

}  // namespace lexmae::testing
