#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lexmae/autodiff/ops.hpp"
#include "lexmae/util/errors.hpp"
#include "support/finite_difference.hpp"

using namespace lexmae;
using namespace lexmae::ad;
using lexmae::testing::check_gradients;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) {
        v = dist(rng);
    }
    return t;
}

/// Reduces any tensor to a scalar with fixed random weights so every output
/// element receives a distinct upstream gradient.
Var weighted_sum(Var x, std::uint64_t seed = 99)
{
    std::mt19937_64 rng(seed);
    Tensor w = random_tensor(x.shape(), rng);
    return sum(multiply(x, x.tape().constant(std::move(w))));
}

}  // namespace

TEST_CASE("tensor shape invariants")
{
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), dimension_error);
    CHECK_THROWS_AS(Tensor({0, 2}), dimension_error);
}

TEST_CASE("matmul")
{
    SUBCASE("identity")
    {
        Tape tape;
        auto eye = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
        auto m = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
        CHECK(matmul(eye, m).value() == m.value());
    }
    SUBCASE("analytic product")
    {
        Tape tape;
        auto out = matmul(tape.constant(Tensor::matrix({{1, 2}, {3, 4}})), tape.constant(Tensor::matrix({{1}, {1}})));
        CHECK(out.value() == Tensor::matrix({{3}, {7}}));
    }
    SUBCASE("finite differences, 4x3 · 3x2")
    {
        std::mt19937_64 rng(1);
        auto res = check_gradients(
            [](Tape&, const std::vector<Var>& v) { return weighted_sum(matmul(v[0], v[1])); },
            {random_tensor({4, 3}, rng), random_tensor({3, 2}, rng)});
        CHECK(res.max_relative_error < 1e-6);
    }
    SUBCASE("shape mismatch")
    {
        Tape tape;
        CHECK_THROWS_AS(matmul(tape.constant(Tensor({2, 3})), tape.constant(Tensor({2, 3}))), dimension_error);
    }
}

TEST_CASE("softmax")
{
    Tape tape;
    auto half = softmax(tape.constant(Tensor::vector({0, 0})), 0);
    CHECK(half.value()[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(half.value()[1] == doctest::Approx(0.5).epsilon(1e-15));

    auto third = softmax(tape.constant(Tensor::vector({0, std::log(2.0)})), 0);
    CHECK(std::abs(third.value()[0] - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(third.value()[1] - 2.0 / 3.0) < 1e-15);

    std::mt19937_64 rng(2);
    auto res = check_gradients([](Tape&, const std::vector<Var>& v) { return weighted_sum(softmax(v[0], 0)); },
                               {random_tensor({5}, rng)});
    CHECK(res.max_relative_error < 1e-6);

    SUBCASE("large magnitudes stay normalised along either axis")
    {
        Tape t2;
        auto x = t2.constant(random_tensor({6, 7}, rng, -1e3, 1e3));
        for (std::size_t axis : {0u, 1u}) {
            auto y = softmax(x, axis);
            const auto& v = y.value();
            const std::size_t slices = axis == 0 ? 7 : 6;
            for (std::size_t s = 0; s < slices; ++s) {
                double total = 0.0;
                for (std::size_t i = 0; i < (axis == 0 ? 6u : 7u); ++i) {
                    total += axis == 0 ? v(i, s) : v(s, i);
                }
                CHECK(std::abs(total - 1.0) < 1e-9);
            }
            CHECK(v.all_finite());
        }
    }
    SUBCASE("matrix gradients along both axes")
    {
        for (std::size_t axis : {0u, 1u}) {
            auto r = check_gradients(
                [axis](Tape&, const std::vector<Var>& v) { return weighted_sum(softmax(v[0], axis)); },
                {random_tensor({3, 4}, rng)});
            CHECK(r.max_relative_error < 1e-6);
        }
    }
}

TEST_CASE("log_softmax")
{
    Tape tape;
    auto y = log_softmax(tape.constant(Tensor::vector({0, std::log(2.0)})), 0);
    CHECK(std::abs(y.value()[0] - std::log(1.0 / 3.0)) < 1e-15);
    auto z = log_softmax(tape.constant(Tensor::vector({1000, 1000})), 0);
    CHECK(std::abs(z.value()[0] - std::log(0.5)) < 1e-12);
    std::mt19937_64 rng(3);
    auto res = check_gradients([](Tape&, const std::vector<Var>& v) { return weighted_sum(log_softmax(v[0], 1)); },
                               {random_tensor({3, 5}, rng)});
    CHECK(res.max_relative_error < 1e-6);
}

TEST_CASE("max_pool_axis")
{
    Tape tape;
    SUBCASE("single unmasked position")
    {
        auto x = tape.constant(Tensor::matrix({{1, 5}, {3, 2}}));
        auto y = max_pool_axis(x, 0, {false, true});
        CHECK(y.value() == Tensor::vector({3, 2}));
    }
    SUBCASE("pooled over rows")
    {
        auto x = tape.constant(Tensor::matrix({{1, 5}, {3, 2}}));
        CHECK(max_pool_axis(x, 0, {true, true}).value() == Tensor::vector({3, 5}));
    }
    SUBCASE("ties route to the first occurrence")
    {
        auto x = tape.variable(Tensor::matrix({{2, 7}, {2, 7}}));
        auto y = max_pool_axis(x, 0, {true, true});
        tape.backward(sum(y));
        CHECK(x.grad() == Tensor::matrix({{1, 1}, {0, 0}}));
    }
    SUBCASE("all masked")
    {
        auto x = tape.constant(Tensor::matrix({{1, 5}, {3, 2}}));
        CHECK_THROWS_AS(max_pool_axis(x, 1, {false, false}), empty_pool_error);
    }
    SUBCASE("random 6x4 with random mask, subgradient check")
    {
        std::mt19937_64 rng(4);
        std::bernoulli_distribution coin(0.6);
        for (std::size_t axis : {0u, 1u}) {
            std::vector<bool> mask(axis == 0 ? 6 : 4);
            for (std::size_t i = 0; i < mask.size(); ++i) {
                mask[i] = coin(rng);
            }
            mask[0] = true;
            auto res = check_gradients(
                [&](Tape&, const std::vector<Var>& v) { return weighted_sum(max_pool_axis(v[0], axis, mask)); },
                {random_tensor({6, 4}, rng)});
            CHECK(res.max_relative_error < 1e-6);
        }
    }
}

TEST_CASE("stop_gradient")
{
    Tape tape;
    auto x = tape.variable(Tensor::vector({1.5, -2.0, 3.0}));
    auto y = tape.variable(Tensor::vector({0.5, 4.0, -1.0}));
    auto sx = stop_gradient(x);
    CHECK(sx.value() == x.value());
    tape.backward(sum(multiply(sx, y)));
    CHECK(x.grad() == Tensor({3}));
    CHECK(y.grad() == x.value());
}

TEST_CASE("add, sub, multiply, scale")
{
    Tape tape;
    auto a = tape.constant(Tensor::vector({1, 2}));
    auto b = tape.constant(Tensor::vector({3, -4}));
    CHECK(add(a, b).value() == Tensor::vector({4, -2}));
    CHECK(sub(a, b).value() == Tensor::vector({-2, 6}));
    CHECK(multiply(a, b).value() == Tensor::vector({3, -8}));
    CHECK(scale(a, 0.5).value() == Tensor::vector({0.5, 1}));
    CHECK_THROWS_AS(add(a, tape.constant(Tensor({3}))), dimension_error);

    std::mt19937_64 rng(5);
    auto res = check_gradients(
        [](Tape&, const std::vector<Var>& v) {
            return weighted_sum(scale(sub(multiply(add(v[0], v[1]), v[1]), v[0]), 1.7));
        },
        {random_tensor({3, 2}, rng), random_tensor({3, 2}, rng)});
    CHECK(res.max_relative_error < 1e-6);
}

TEST_CASE("add_bias along both axes")
{
    Tape tape;
    auto x = tape.constant(Tensor::matrix({{1, 2, 3}, {4, 5, 6}}));
    CHECK(add_bias(x, tape.constant(Tensor::vector({1, 0, -1})), 1).value() == Tensor::matrix({{2, 2, 2}, {5, 5, 5}}));
    CHECK(add_bias(x, tape.constant(Tensor::vector({10, 20})), 0).value()
          == Tensor::matrix({{11, 12, 13}, {24, 25, 26}}));
    CHECK_THROWS_AS(add_bias(x, tape.constant(Tensor::vector({1, 2})), 1), dimension_error);
    std::mt19937_64 rng(6);
    for (std::size_t axis : {0u, 1u}) {
        auto res = check_gradients(
            [axis](Tape&, const std::vector<Var>& v) { return weighted_sum(add_bias(v[0], v[1], axis)); },
            {random_tensor({2, 3}, rng), random_tensor({axis == 1 ? 3u : 2u}, rng)});
        CHECK(res.max_relative_error < 1e-6);
    }
}

TEST_CASE("layer_norm")
{
    Tape tape;
    auto x = tape.constant(Tensor::matrix({{1, 3}, {-2, 2}}));
    auto y = layer_norm(x, tape.constant(Tensor::vector({1, 1})), tape.constant(Tensor::vector({0, 0})));
    CHECK(std::abs(y.value()(0, 0) + 1.0) < 1e-9);
    CHECK(std::abs(y.value()(0, 1) - 1.0) < 1e-9);
    // Constant rows normalise to the shift.
    auto c = layer_norm(tape.constant(Tensor::matrix({{4, 4, 4}})), tape.constant(Tensor::vector({2, 2, 2})),
                        tape.constant(Tensor::vector({0.5, 0.5, 0.5})));
    CHECK(c.value() == Tensor::matrix({{0.5, 0.5, 0.5}}));
    std::mt19937_64 rng(7);
    auto res = check_gradients(
        [](Tape&, const std::vector<Var>& v) { return weighted_sum(layer_norm(v[0], v[1], v[2])); },
        {random_tensor({3, 5}, rng), random_tensor({5}, rng), random_tensor({5}, rng)});
    CHECK(res.max_relative_error < 1e-6);
}

TEST_CASE("gelu, relu, log1p, square")
{
    Tape tape;
    auto x = tape.constant(Tensor::vector({-1.0, 0.0, 2.0}));
    auto g = gelu(x).value();
    CHECK(g[1] == 0.0);
    CHECK(std::abs(g[2] - 2.0 * 0.5 * (1.0 + std::erf(2.0 / std::numbers::sqrt2))) < 1e-15);
    CHECK(relu(x).value() == Tensor::vector({0.0, 0.0, 2.0}));
    auto l = log1p(tape.constant(Tensor::vector({0.0, std::numbers::e - 1.0}))).value();
    CHECK(l[0] == 0.0);
    CHECK(std::abs(l[1] - 1.0) < 1e-15);
    CHECK(square(x).value() == Tensor::vector({1.0, 0.0, 4.0}));

    std::mt19937_64 rng(8);
    auto res = check_gradients(
        [](Tape&, const std::vector<Var>& v) { return weighted_sum(square(log1p(relu(gelu(v[0]))))); },
        {random_tensor({4, 3}, rng, 0.1, 2.0)});
    CHECK(res.max_relative_error < 1e-6);
    auto neg = check_gradients([](Tape&, const std::vector<Var>& v) { return weighted_sum(gelu(v[0])); },
                               {random_tensor({6}, rng, -3.0, 3.0)});
    CHECK(neg.max_relative_error < 1e-6);
}

TEST_CASE("embedding_lookup")
{
    Tape tape;
    auto table = tape.variable(Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
    std::vector<std::int32_t> ids{2, 0, 2};
    auto e = embedding_lookup(table, ids);
    CHECK(e.value() == Tensor::matrix({{5, 6}, {1, 2}, {5, 6}}));
    tape.backward(sum(e));
    // Repeated ids accumulate once per use.
    CHECK(table.grad() == Tensor::matrix({{1, 1}, {0, 0}, {2, 2}}));
    std::vector<std::int32_t> bad{3};
    CHECK_THROWS_AS(embedding_lookup(table, bad), vocab_error);

    std::mt19937_64 rng(9);
    auto res = check_gradients(
        [&](Tape&, const std::vector<Var>& v) { return weighted_sum(embedding_lookup(v[0], ids)); },
        {random_tensor({3, 2}, rng)});
    CHECK(res.max_relative_error < 1e-6);
}

TEST_CASE("masked_cross_entropy")
{
    Tape tape;
    // Uniform logits over 4 classes: loss ln 4 regardless of the target.
    auto logits = tape.constant(Tensor({4, 3}));
    std::vector<std::int32_t> targets{0, 3, 1};
    std::vector<std::size_t> positions{0, 2};
    CHECK(std::abs(masked_cross_entropy(logits, targets, positions).value()[0] - std::log(4.0)) < 1e-15);

    // Only scored positions matter.
    Tensor skewed({2, 2});
    skewed(0, 1) = 100.0;
    std::vector<std::int32_t> t2{1, 0};
    std::vector<std::size_t> p2{0};
    CHECK(std::abs(masked_cross_entropy(tape.constant(skewed), t2, p2).value()[0] - std::log(2.0)) < 1e-15);

    std::vector<std::size_t> none;
    CHECK(masked_cross_entropy(logits, targets, none).value()[0] == 0.0);

    std::mt19937_64 rng(10);
    auto res = check_gradients(
        [&](Tape&, const std::vector<Var>& v) { return masked_cross_entropy(v[0], targets, positions); },
        {random_tensor({4, 3}, rng, -2, 2)});
    CHECK(res.max_relative_error < 1e-6);
}

TEST_CASE("slicing, concatenation, reductions")
{
    Tape tape;
    auto x = tape.constant(Tensor::matrix({{1, 2, 3, 4}, {5, 6, 7, 8}}));
    auto left = slice_cols(x, 0, 2);
    auto right = slice_cols(x, 2, 2);
    CHECK(concat_cols({left, right}).value() == x.value());
    CHECK(sum(x).value()[0] == 36.0);
    CHECK(mean(x).value()[0] == 4.5);
    CHECK(mean_axis(x, 0).value() == Tensor::vector({3, 4, 5, 6}));
    CHECK(mean_axis(x, 1).value() == Tensor::vector({2.5, 6.5}));
    CHECK(transpose(x).value() == Tensor::matrix({{1, 5}, {2, 6}, {3, 7}, {4, 8}}));
    auto v = tape.constant(Tensor::vector({1, 2, 3}));
    CHECK(dot(v, v).value()[0] == 14.0);
    CHECK(select(v, 2).value()[0] == 3.0);
    CHECK(stack_rows({v, v}).value() == Tensor::matrix({{1, 2, 3}, {1, 2, 3}}));
    CHECK(concat({v, select(v, 0)}).value() == Tensor::vector({1, 2, 3, 1}));

    std::mt19937_64 rng(11);
    auto res = check_gradients(
        [](Tape&, const std::vector<Var>& p) {
            auto a = slice_cols(p[0], 1, 2);
            auto b = transpose(concat_cols({a, slice_cols(p[0], 0, 1)}));
            auto rows = stack_rows({mean_axis(b, 0), mean_axis(reshape(b, {3, 3}), 1)});
            auto c = concat({mean_axis(rows, 1), select(mean_axis(b, 1), 0)});
            return add(weighted_sum(rows), add(dot(c, c), weighted_sum(c, 5)));
        },
        {random_tensor({3, 3}, rng)});
    CHECK(res.max_relative_error < 1e-6);
}

TEST_CASE("l1_normalize")
{
    Tape tape;
    auto y = l1_normalize(tape.constant(Tensor::vector({1, 3})));
    CHECK(y.value() == Tensor::vector({0.25, 0.75}));
    auto z = l1_normalize(tape.constant(Tensor::vector({0, 0, 0, 0})));
    CHECK(z.value() == Tensor::vector({0.25, 0.25, 0.25, 0.25}));
    CHECK_THROWS_AS(l1_normalize(tape.constant(Tensor::vector({-1, 2}))), input_error);
    std::mt19937_64 rng(12);
    auto res = check_gradients([](Tape&, const std::vector<Var>& v) { return weighted_sum(l1_normalize(v[0])); },
                               {random_tensor({6}, rng, 0.1, 2.0)});
    CHECK(res.max_relative_error < 1e-6);
}

TEST_CASE("backward accumulates every use and is deterministic")
{
    auto run = [] {
        Tape tape;
        auto x = tape.variable(Tensor::vector({0.3, -0.7, 1.1}));
        auto y = add(multiply(x, x), scale(x, 3.0));
        tape.backward(sum(y));
        return x.grad();
    };
    auto g = run();
    CHECK(std::abs(g[0] - (2 * 0.3 + 3)) < 1e-15);
    CHECK(std::abs(g[1] - (2 * -0.7 + 3)) < 1e-15);
    CHECK(run() == g);

    Parameter p("w", Tensor::vector({2.0}));
    {
        Tape tape;
        auto a = tape.parameter(p);
        auto b = tape.parameter(p);
        CHECK(a.id() == b.id());
        tape.backward(sum(multiply(a, b)));
    }
    CHECK(p.grad[0] == 4.0);
    {
        Tape tape;
        tape.backward(sum(tape.parameter(p)));
    }
    CHECK(p.grad[0] == 5.0);

    Tape tape;
    CHECK_THROWS_AS(tape.backward(tape.variable(Tensor::vector({1, 2}))), dimension_error);
}
