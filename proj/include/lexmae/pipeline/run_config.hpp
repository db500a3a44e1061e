#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lexmae/data/synthetic.hpp"
#include "lexmae/finetune/stage.hpp"
#include "lexmae/model/config.hpp"
#include "lexmae/pretrain/pretrainer.hpp"

namespace lexmae::pipeline {

struct RunPaths {
    std::filesystem::path corpus;
    std::filesystem::path train_queries;
    std::filesystem::path heldout_queries;
    std::filesystem::path qrels;
    std::filesystem::path teacher;
    std::filesystem::path output;

    friend bool operator==(const RunPaths&, const RunPaths&) = default;
};

struct TokenizerConfig {
    /// Upper bound on |V|, specials included.
    std::size_t max_vocab = 2000;
    /// Sequences are truncated to this many ids, [CLS]/[SEP] included.
    std::size_t max_length = 128;

    friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

/// Everything that determines a run. The single `seed` feeds every random
/// source (synthetic data, initialization, masking, mining); the per-module
/// seed fields are overwritten from it by resolve().
struct RunConfig {
    std::uint64_t seed = 42;
    RunPaths paths;
    TokenizerConfig tokenizer;
    model::ModelConfig model;
    model::LmHeadLayout layout = model::LmHeadLayout::separate;
    pretrain::PretrainConfig pretrain;
    /// Stage 1, 2, 3. A stage-1 mining depth of 0 means min(1000, |corpus|/2).
    std::vector<finetune::StageConfig> stages;
    std::vector<std::size_t> topk_sweep{256, 128, 64, 32, 16, 8, 4, 2, 1};
    /// Ranked-list depth of every run file.
    std::size_t search_depth = 1000;
    /// Worker threads for encoding and search; 0 uses every core.
    std::size_t threads = 0;
    data::SyntheticConfig synthetic;

    /// Desk-scale defaults with dataset paths under `data_dir` and outputs under `output_dir`.
    static RunConfig defaults(const std::filesystem::path& data_dir = "data",
                              const std::filesystem::path& output_dir = "runs");

    /// Propagates the seed and, when `corpus_size` > 0, fills corpus-size dependent defaults.
    void resolve(std::size_t corpus_size);
    /// Throws config_error on any invalid section.
    void validate() const;

    [[nodiscard]] const finetune::StageConfig& stage(int s) const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Pretty-printed JSON with sorted keys. Relative paths are kept as written.
std::string serialize(const RunConfig& config);
/// Missing keys take their defaults; unknown keys and ill-typed values are config errors.
RunConfig parse_run_config(const std::string& contents, const std::string& source = "<memory>");
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

/// 64-bit FNV-1a of the serialized form without `paths` and `threads`, which
/// do not affect any artifact's contents.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace lexmae::pipeline
