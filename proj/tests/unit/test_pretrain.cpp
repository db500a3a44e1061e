#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lexmae/model/transformer.hpp"
#include "lexmae/pretrain/pretrainer.hpp"
#include "lexmae/text/special_tokens.hpp"
#include "lexmae/util/errors.hpp"
#include "support/finite_difference.hpp"
#include "support/frozen_copy.hpp"

using namespace lexmae;
using namespace lexmae::pretrain;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

/// [CLS] w… [SEP] with `words` regular tokens.
std::vector<std::int32_t> framed(std::size_t words, std::mt19937_64& rng, std::int32_t vocab = 50)
{
    std::uniform_int_distribution<std::int32_t> dist(text::kUnkId, vocab - 1);
    std::vector<std::int32_t> x{text::kClsId};
    for (std::size_t i = 0; i < words; ++i) {
        x.push_back(dist(rng));
    }
    x.push_back(text::kSepId);
    return x;
}

model::ModelConfig tiny()
{
    auto c = model::ModelConfig::tiny();
    c.init_std = 0.2;
    return c;
}

// Plain-loop reference for the lexicon distribution.
std::vector<double> reference_lexicon(const Tensor& s, const std::vector<bool>& include, LexiconNorm norm)
{
    std::vector<double> pool(s.rows(), -INFINITY);
    for (std::size_t v = 0; v < s.rows(); ++v) {
        for (std::size_t j = 0; j < s.cols(); ++j) {
            if (include[j]) {
                pool[v] = std::max(pool[v], s(v, j));
            }
        }
    }
    std::vector<double> a(pool.size());
    double total = 0.0;
    if (norm == LexiconNorm::softmax) {
        const double mx = *std::max_element(pool.begin(), pool.end());
        for (std::size_t v = 0; v < a.size(); ++v) {
            a[v] = std::exp(pool[v] - mx);
            total += a[v];
        }
    }
    else {
        for (std::size_t v = 0; v < a.size(); ++v) {
            a[v] = std::log(1.0 + std::max(pool[v], 0.0));
            total += a[v];
        }
    }
    for (auto& x : a) {
        x /= total;
    }
    return a;
}

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> normal(0.0, scale);
    Tensor t({r, c});
    for (auto& v : t.values()) {
        v = normal(rng);
    }
    return t;
}

std::vector<MaskedSample> tiny_batch(std::uint64_t seed, MaskingStrategy strategy = MaskingStrategy::inclusive)
{
    std::mt19937_64 rng(seed);
    std::vector<MaskedSample> out;
    for (std::size_t words : {6U, 9U}) {
        out.push_back(make_masked_sample(framed(words, rng), 0.3, 0.2, strategy, 50, rng));
    }
    return out;
}

}  // namespace

TEST_CASE("mask counts round half up")
{
    CHECK(mask_count(0.3, 10) == 3);
    CHECK(mask_count(0.25, 10) == 3);
    CHECK(mask_count(0.24, 10) == 2);
    CHECK(mask_count(0.3, 1) == 1);
    CHECK(mask_count(0.01, 5) == 1);
    CHECK(mask_count(0.0, 10) == 0);
    CHECK(mask_count(1.0, 7) == 7);
    CHECK_THROWS_AS(mask_count(1.5, 7), config_error);
}

TEST_CASE("encoder masking")
{
    std::mt19937_64 rng(1);
    auto x = framed(10, rng);
    SUBCASE("alpha zero is the identity")
    {
        auto m = mask_for_encoder(x, 0.0, 50, rng);
        CHECK(m.x_enc == x);
        CHECK(m.m_enc.empty());
    }
    SUBCASE("ten maskable positions at 0.30 mask three")
    {
        auto m = mask_for_encoder(x, 0.30, 50, rng);
        CHECK(m.m_enc.size() == 3);
    }
    SUBCASE("alpha above one is rejected")
    {
        CHECK_THROWS_AS(mask_for_encoder(x, 1.2, 50, rng), config_error);
    }
    SUBCASE("special positions are never selected and unmasked positions are intact")
    {
        for (int trial = 0; trial < 200; ++trial) {
            auto m = mask_for_encoder(x, 0.5, 50, rng);
            for (auto p : m.m_enc) {
                CHECK(p != 0);
                CHECK(p != x.size() - 1);
            }
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (!std::binary_search(m.m_enc.begin(), m.m_enc.end(), i)) {
                    CHECK(m.x_enc[i] == x[i]);
                }
                else if (std::find(m.randomized.begin(), m.randomized.end(), i) == m.randomized.end()
                         && std::find(m.kept.begin(), m.kept.end(), i) == m.kept.end()) {
                    CHECK(m.x_enc[i] == text::kMaskId);
                }
            }
            for (auto p : m.kept) {
                CHECK(m.x_enc[p] == x[p]);
            }
            for (auto p : m.randomized) {
                CHECK_FALSE(text::is_special(m.x_enc[p]));
            }
        }
    }
    SUBCASE("no maskable positions")
    {
        std::vector<std::int32_t> only_frame{text::kClsId, text::kSepId};
        CHECK_THROWS_AS(mask_for_encoder(only_frame, 0.3, 50, rng), masking_error);
    }
}

TEST_CASE("encoder replacement proportions are 80/10/10")
{
    std::mt19937_64 rng(2);
    std::size_t mask = 0;
    std::size_t random = 0;
    std::size_t keep = 0;
    for (int i = 0; i < 10000; ++i) {
        auto x = framed(10, rng);
        auto m = mask_for_encoder(x, 0.3, 50, rng);
        random += m.randomized.size();
        keep += m.kept.size();
        mask += m.m_enc.size() - m.randomized.size() - m.kept.size();
    }
    const double total = static_cast<double>(mask + random + keep);
    CHECK(std::abs(mask / total - 0.8) < 0.02);
    CHECK(std::abs(random / total - 0.1) < 0.02);
    CHECK(std::abs(keep / total - 0.1) < 0.02);
}

TEST_CASE("decoder masking strategies")
{
    std::mt19937_64 rng(3);
    SUBCASE("inclusive with beta zero equals the encoder set")
    {
        auto x = framed(12, rng);
        auto enc = mask_for_encoder(x, 0.3, 50, rng);
        auto dec = mask_for_decoder(x, enc.m_enc, 0.3, 0.0, MaskingStrategy::inclusive, rng);
        CHECK(dec.m_dec == enc.m_enc);
    }
    SUBCASE("inclusive always contains the encoder set")
    {
        for (int i = 0; i < 1000; ++i) {
            auto x = framed(3 + i % 20, rng);
            auto s = make_masked_sample(x, 0.3, 0.2, MaskingStrategy::inclusive, 50, rng);
            CHECK(std::includes(s.m_dec.begin(), s.m_dec.end(), s.m_enc.begin(), s.m_enc.end()));
            for (auto p : s.m_dec) {
                CHECK(s.x_dec[p] == text::kMaskId);
            }
        }
    }
    SUBCASE("exclusive never overlaps the encoder set")
    {
        for (int i = 0; i < 500; ++i) {
            auto x = framed(10 + i % 7, rng);
            auto s = make_masked_sample(x, 0.3, 0.2, MaskingStrategy::exclusive, 50, rng);
            std::vector<std::size_t> both;
            std::set_intersection(s.m_enc.begin(), s.m_enc.end(), s.m_dec.begin(), s.m_dec.end(),
                                  std::back_inserter(both));
            CHECK(both.empty());
        }
        auto x = framed(10, rng);
        auto enc = mask_for_encoder(x, 0.6, 50, rng);
        CHECK_THROWS_AS(mask_for_decoder(x, enc.m_enc, 0.6, 0.3, MaskingStrategy::exclusive, rng), masking_error);
    }
    SUBCASE("fully random masks half on average")
    {
        double ratio = 0.0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            auto x = framed(5 + i % 30, rng);
            auto s = make_masked_sample(x, 0.3, 0.2, MaskingStrategy::fully_random, 50, rng);
            ratio += static_cast<double>(s.m_dec.size()) / static_cast<double>(x.size() - 2);
        }
        CHECK(std::abs(ratio / trials - 0.5) < 0.02);
    }
    SUBCASE("invalid rates")
    {
        auto x = framed(10, rng);
        CHECK_THROWS_AS(mask_for_decoder(x, {}, 0.7, 0.4, MaskingStrategy::inclusive, rng), config_error);
    }
}

TEST_CASE("lexicon importance")
{
    Tape tape(false);
    SUBCASE("uniform logits give a uniform distribution")
    {
        Var s = tape.constant(Tensor({4, 1}, 0.7));
        auto a = lexicon_importance(s, {true}, LexiconNorm::softmax).value();
        for (double v : a.values()) {
            CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
        }
    }
    SUBCASE("pooled logits [0, ln 2]")
    {
        Var s = tape.constant(Tensor::matrix({{0.0, -3.0}, {-1.0, std::log(2.0)}}));
        auto a = lexicon_importance(s, {true, true}, LexiconNorm::softmax).value();
        CHECK(a[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(a[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    }
    SUBCASE("random logits against a reference evaluation")
    {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 50; ++trial) {
            auto s = random_matrix(8, 5, rng, 2.0);
            std::vector<bool> include{true, trial % 2 == 0, true, false, true};
            for (auto norm : {LexiconNorm::softmax, LexiconNorm::saturated}) {
                auto got = lexicon_importance(tape.constant(s), include, norm).value();
                auto want = reference_lexicon(s, include, norm);
                double sum = 0.0;
                for (std::size_t v = 0; v < 8; ++v) {
                    CHECK(std::abs(got[v] - want[v]) < 1e-12);
                    sum += got[v];
                }
                CHECK(std::abs(sum - 1.0) < 1e-9);
            }
        }
    }
    SUBCASE("empty pool")
    {
        Var s = tape.constant(Tensor({4, 3}));
        CHECK_THROWS_AS(lexicon_importance(s, {false, false, false}, LexiconNorm::softmax), empty_pool_error);
    }
    SUBCASE("pooling mask skips framing tokens")
    {
        std::vector<std::int32_t> x{text::kClsId, 7, text::kMaskId, text::kUnkId, text::kSepId, text::kPadId};
        CHECK(pooling_mask(x) == std::vector<bool>{false, true, false, true, false, false});
    }
}

TEST_CASE("cbow bottleneck")
{
    std::mt19937_64 rng(5);
    Tape tape(false);
    auto w = random_matrix(6, 3, rng);
    SUBCASE("one-hot selects the embedding row")
    {
        Tensor a({6});
        a[4] = 1.0;
        auto b = cbow_bottleneck(tape.constant(a), tape.constant(w), false).value();
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(b[j] == w(4, j));
        }
    }
    SUBCASE("uniform over two words gives their midpoint")
    {
        Tensor a({6});
        a[1] = a[2] = 0.5;
        auto b = cbow_bottleneck(tape.constant(a), tape.constant(w), false).value();
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(b[j] == doctest::Approx(0.5 * (w(1, j) + w(2, j))).epsilon(1e-15));
        }
    }
    SUBCASE("random distribution against a matrix-vector reference")
    {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Tensor a({6});
        double total = 0.0;
        for (auto& v : a.values()) {
            v = unit(rng);
            total += v;
        }
        for (auto& v : a.values()) {
            v /= total;
        }
        auto b = cbow_bottleneck(tape.constant(a), tape.constant(w), true).value();
        for (std::size_t j = 0; j < 3; ++j) {
            double ref = 0.0;
            for (std::size_t i = 0; i < 6; ++i) {
                ref += w(i, j) * a[i];
            }
            CHECK(std::abs(b[j] - ref) < 1e-12);
        }
    }
    SUBCASE("dimension mismatch")
    {
        CHECK_THROWS_AS(cbow_bottleneck(tape.constant(Tensor({5})), tape.constant(w), false), dimension_error);
    }
}

TEST_CASE("loss decomposition and detached decoder")
{
    model::TransformerWeights w(tiny(), model::LmHeadLayout::separate, 6);
    auto batch = tiny_batch(6);
    for (auto variant : {BottleneckVariant::softmax_cbow, BottleneckVariant::saturated_cbow,
                         BottleneckVariant::dense_cls, BottleneckVariant::disabled}) {
        PretrainConfig cfg;
        cfg.bottleneck = variant;
        Tape tape(false);
        model::ModelGraph g(tape, std::as_const(w));
        auto loss = batch_loss(g, batch, cfg);
        const double total = loss.total.value()[0];
        CHECK(std::abs(total - loss.elm.value()[0] - loss.dlm.value()[0]) <= 4e-16 * total);
        CHECK(loss.elm.value()[0] > 0.0);
        CHECK(loss.dlm.value()[0] > 0.0);
    }
    PretrainConfig cfg;
    cfg.bottleneck = BottleneckVariant::disabled;
    auto sample = batch[0];
    sample.m_dec.clear();
    sample.x_dec = sample.x;
    Tape tape(false);
    model::ModelGraph g(tape, std::as_const(w));
    auto loss = pretrain_loss(g, sample, cfg);
    CHECK(loss.total.value()[0] == loss.elm.value()[0]);
}

TEST_CASE("elm loss is identical whichever head layout computes it")
{
    // The full-logit and position-restricted cross-entropy paths must agree.
    model::TransformerWeights w(tiny(), model::LmHeadLayout::separate, 7);
    auto batch = tiny_batch(7);
    PretrainConfig cbow;
    PretrainConfig dense;
    dense.bottleneck = BottleneckVariant::dense_cls;
    Tape tape(false);
    model::ModelGraph g(tape, std::as_const(w));
    CHECK(batch_loss(g, batch, cbow).elm.value()[0]
          == doctest::Approx(batch_loss(g, batch, dense).elm.value()[0]).epsilon(1e-13));
}

TEST_CASE("pre-training loss gradients match finite differences")
{
    for (auto variant : {BottleneckVariant::softmax_cbow, BottleneckVariant::saturated_cbow,
                         BottleneckVariant::dense_cls, BottleneckVariant::disabled}) {
        for (auto layout : {model::LmHeadLayout::separate, model::LmHeadLayout::extra_bottleneck}) {
            model::TransformerWeights w(tiny(), layout, 8);
            PretrainConfig cfg;
            cfg.bottleneck = variant;
            cfg.embedding_grad_through_bottleneck = layout == model::LmHeadLayout::extra_bottleneck;
            auto batch = tiny_batch(8);
            auto loss = [&](Tape& tape) {
                model::ModelGraph g(tape, w);
                return batch_loss(g, batch, cfg).total;
            };
            // With the stop-gradient in place the word embeddings are checked
            // separately against the frozen-copy loss below.
            std::vector<ad::Parameter*> params;
            for (auto& p : w.parameters()) {
                if (cfg.embedding_grad_through_bottleneck || &p != &w.word_embedding()) {
                    params.push_back(&p);
                }
            }
            auto check = testing::check_parameter_gradients(loss, params, 1e-5, 11);
            INFO("variant " << to_string(variant) << " layout " << model::to_string(layout) << " max rel error "
                            << check.max_relative_error);
            CHECK(check.max_relative_error < 1e-4);
        }
    }
}

TEST_CASE("bottleneck weighting edge passes no gradient to the embeddings")
{
    model::TransformerWeights w(tiny(), model::LmHeadLayout::separate, 9);
    auto batch = tiny_batch(9);
    const auto& sample = batch[1];
    auto library_grad = [&](bool through) {
        PretrainConfig cfg;
        cfg.embedding_grad_through_bottleneck = through;
        w.zero_grad();
        Tape tape;
        model::ModelGraph g(tape, w);
        tape.backward(pretrain_loss(g, sample, cfg).dlm);
        return w.word_embedding().grad;
    };
    // Oracle: rebuild the decoder loss with the weighting edge reading a frozen copy of W_we.
    auto frozen_grad = [&] {
        const Tensor frozen = w.word_embedding().value;
        w.zero_grad();
        Tape tape;
        model::ModelGraph g(tape, w);
        tape.backward(testing::frozen_copy_loss(g, sample, frozen, false));
        return w.word_embedding().grad;
    };
    const auto stopped = library_grad(false);
    const auto oracle = frozen_grad();
    const auto through = library_grad(true);
    double diff = 0.0;
    double ablation = 0.0;
    double magnitude = 0.0;
    for (std::size_t i = 0; i < stopped.size(); ++i) {
        diff = std::max(diff, std::abs(stopped[i] - oracle[i]));
        ablation = std::max(ablation, std::abs(through[i] - stopped[i]));
        magnitude = std::max(magnitude, std::abs(stopped[i]));
    }
    CHECK(diff == 0.0);
    CHECK(ablation > 1e-8);
    CHECK(magnitude > 1e-6);
}

TEST_CASE("stopped embedding gradient matches finite differences of the frozen-copy loss")
{
    model::TransformerWeights w(tiny(), model::LmHeadLayout::separate, 12);
    auto batch = tiny_batch(12);
    const Tensor frozen = w.word_embedding().value;
    PretrainConfig cfg;
    w.zero_grad();
    {
        Tape tape;
        model::ModelGraph g(tape, w);
        tape.backward(batch_loss(g, batch, cfg).total);
    }
    const Tensor analytic = w.word_embedding().grad;
    auto oracle = [&](Tape& tape) {
        model::ModelGraph g(tape, w);
        std::vector<Var> parts;
        for (const auto& s : batch) {
            parts.push_back(testing::frozen_copy_loss(g, s, frozen, true));
        }
        return ad::mean(ad::concat(parts));
    };
    auto check = testing::check_parameter_gradients(oracle, {&w.word_embedding()});
    // check_parameter_gradients compares against the oracle's own tape; compare the library's too.
    const Tensor& via_oracle = w.word_embedding().grad;
    double diff = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff = std::max(diff, testing::relative_error(analytic[i], via_oracle[i]));
    }
    INFO("fd error " << check.max_relative_error << " library vs oracle " << diff);
    CHECK(check.max_relative_error < 1e-4);
    CHECK(diff < 1e-10);
}

TEST_CASE("pretrainer is deterministic and logs records")
{
    std::mt19937_64 rng(10);
    std::vector<std::vector<std::int32_t>> corpus;
    for (int i = 0; i < 12; ++i) {
        corpus.push_back(framed(4 + i % 6, rng));
    }
    corpus.push_back({text::kClsId, text::kSepId});
    PretrainConfig cfg;
    cfg.batch_size = 3;
    cfg.steps = 6;
    cfg.optimizer.warmup_steps = 2;
    auto run = [&] {
        model::TransformerWeights w(tiny(), model::LmHeadLayout::separate, 10);
        Pretrainer trainer(w, corpus, cfg);
        return trainer.run();
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].loss_total == b[i].loss_total);
        CHECK(a[i].loss_dlm == b[i].loss_dlm);
        CHECK(a[i].step == i);
    }
    auto line = to_log_line(a[3]);
    CHECK(line.find("\"step\":3") != std::string::npos);
    CHECK(line.find("\"loss_elm\"") != std::string::npos);
    CHECK(line.find("\"loss_dlm\"") != std::string::npos);
}

TEST_CASE("non-finite weights surface as a divergence error")
{
    std::mt19937_64 rng(11);
    std::vector<std::vector<std::int32_t>> corpus{framed(6, rng), framed(7, rng)};
    model::TransformerWeights w(tiny(), model::LmHeadLayout::separate, 11);
    w.by_name("encoder.lm_head.bias").value[9] = NAN;
    PretrainConfig cfg;
    cfg.batch_size = 2;
    Pretrainer trainer(w, corpus, cfg);
    CHECK_THROWS_AS(trainer.step(), training_divergence_error);
    CHECK_THROWS_AS(Pretrainer(w, {{text::kClsId, text::kSepId}}, cfg), input_error);
}
