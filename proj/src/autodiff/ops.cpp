#include "lexmae/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lexmae/util/errors.hpp"

namespace lexmae::ad {

namespace {

void require_same_tape(Var a, Var b)
{
    if (&a.tape() != &b.tape()) {
        throw contract_error("operands recorded on different tapes");
    }
}

void require_same_shape(Var a, Var b, const char* op)
{
    require_same_tape(a, b);
    if (a.shape() != b.shape()) {
        throw dimension_error(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs "
                              + shape_string(b.shape()));
    }
}

void require_rank(Var x, std::size_t rank, const char* op)
{
    if (x.value().rank() != rank) {
        throw dimension_error(std::string(op) + ": expected rank " + std::to_string(rank) + ", got "
                              + shape_string(x.shape()));
    }
}

/// Gradient buffer of `id` if it participates in differentiation, else null.
double* grad_target(Tape& tape, std::size_t id)
{
    return tape.requires_grad(id) ? tape.grad(id).data() : nullptr;
}

template <typename Fn>
Var unary_elementwise(Var x, Fn&& forward, Tape::BackwardFn backward)
{
    Tensor out(x.shape());
    const auto in = x.value().values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = forward(in[i]);
    }
    return x.tape().record(std::move(out), {x.id()}, std::move(backward));
}

}  // namespace

Var add(Var a, Var b)
{
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    const auto bv = b.value().values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += bv[i];
    }
    const auto ia = a.id();
    const auto ib = b.id();
    return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const auto g = t.grad(self).values();
        for (auto id : {ia, ib}) {
            if (double* dst = grad_target(t, id)) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                    dst[i] += g[i];
                }
            }
        }
    });
}

Var sub(Var a, Var b)
{
    require_same_shape(a, b, "sub");
    Tensor out = a.value();
    const auto bv = b.value().values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= bv[i];
    }
    const auto ia = a.id();
    const auto ib = b.id();
    return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const auto g = t.grad(self).values();
        if (double* da = grad_target(t, ia)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                da[i] += g[i];
            }
        }
        if (double* db = grad_target(t, ib)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                db[i] -= g[i];
            }
        }
    });
}

Var multiply(Var a, Var b)
{
    require_same_shape(a, b, "multiply");
    Tensor out = a.value();
    const auto bv = b.value().values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= bv[i];
    }
    const auto ia = a.id();
    const auto ib = b.id();
    return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const auto g = t.grad(self).values();
        const auto av = t.value(ia).values();
        const auto bv = t.value(ib).values();
        if (double* da = grad_target(t, ia)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                da[i] += g[i] * bv[i];
            }
        }
        if (double* db = grad_target(t, ib)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                db[i] += g[i] * av[i];
            }
        }
    });
}

Var scale(Var a, double factor)
{
    Tensor out = a.value();
    for (auto& v : out.values()) {
        v *= factor;
    }
    const auto ia = a.id();
    return a.tape().record(std::move(out), {ia}, [ia, factor](Tape& t, std::size_t self) {
        const auto g = t.grad(self).values();
        double* da = t.grad(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] += factor * g[i];
        }
    });
}

Var add_bias(Var x, Var bias, std::size_t axis)
{
    require_same_tape(x, bias);
    require_rank(x, 2, "add_bias");
    require_rank(bias, 1, "add_bias");
    const std::size_t rows = x.value().rows();
    const std::size_t cols = x.value().cols();
    if (axis > 1 || bias.value().size() != (axis == 1 ? cols : rows)) {
        throw dimension_error("add_bias: bias " + shape_string(bias.shape()) + " does not fit "
                              + shape_string(x.shape()) + " along axis " + std::to_string(axis));
    }
    Tensor out = x.value();
    const auto& b = bias.value();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out(r, c) += axis == 1 ? b[c] : b[r];
        }
    }
    const auto ix = x.id();
    const auto ib = bias.id();
    return x.tape().record(std::move(out), {ix, ib}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (double* dx = grad_target(t, ix)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                dx[i] += g[i];
            }
        }
        if (double* db = grad_target(t, ib)) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    db[axis == 1 ? c : r] += g(r, c);
                }
            }
        }
    });
}

Var matmul(Var a, Var b)
{
    require_same_tape(a, b);
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.value().rows();
    const std::size_t k = a.value().cols();
    const std::size_t n = b.value().cols();
    if (b.value().rows() != k) {
        throw dimension_error("matmul: inner extents disagree " + shape_string(a.shape()) + " · "
                              + shape_string(b.shape()));
    }
    Tensor out({m, n});
    gemm_nn(m, n, k, a.value().data(), b.value().data(), out.data());
    const auto ia = a.id();
    const auto ib = b.id();
    return a.tape().record(std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
        const double* g = t.grad(self).data();
        if (double* da = grad_target(t, ia)) {
            gemm_nt(m, k, n, g, t.value(ib).data(), da);  // g · bᵀ
        }
        if (double* db = grad_target(t, ib)) {
            gemm_tn(k, n, m, t.value(ia).data(), g, db);  // aᵀ · g
        }
    });
}

Var transpose(Var a)
{
    require_rank(a, 2, "transpose");
    const std::size_t m = a.value().rows();
    const std::size_t n = a.value().cols();
    Tensor out({n, m});
    const Tensor& in = a.value();
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            out(c, r) = in(r, c);
        }
    }
    const auto ia = a.id();
    return a.tape().record(std::move(out), {ia}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& da = t.grad(ia);
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                da(r, c) += g(c, r);
            }
        }
    });
}

Var reshape(Var a, Shape shape)
{
    Tensor out = a.value();
    out.reshape(std::move(shape));
    const auto ia = a.id();
    return a.tape().record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
        const auto g = t.grad(self).values();
        double* da = t.grad(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] += g[i];
        }
    });
}

namespace {

/// Iteration helper over the slices of a rank-1 or rank-2 tensor along `axis`.
struct SliceLayout {
    std::size_t count;   // number of independent slices
    std::size_t length;  // elements per slice
    std::size_t stride;  // distance between consecutive elements of a slice
    std::size_t step;    // distance between first elements of consecutive slices

    [[nodiscard]] std::size_t at(std::size_t slice, std::size_t i) const { return slice * step + i * stride; }
};

SliceLayout slice_layout(const Tensor& x, std::size_t axis, const char* op)
{
    if (x.rank() == 1 && axis == 0) {
        return {1, x.size(), 1, 0};
    }
    if (x.rank() == 2 && axis == 0) {
        return {x.cols(), x.rows(), x.cols(), 1};
    }
    if (x.rank() == 2 && axis == 1) {
        return {x.rows(), x.cols(), 1, x.cols()};
    }
    throw dimension_error(std::string(op) + ": unsupported axis " + std::to_string(axis) + " for shape "
                          + shape_string(x.shape()));
}

}  // namespace

Var softmax(Var x, std::size_t axis)
{
    const Tensor& in = x.value();
    const SliceLayout lay = slice_layout(in, axis, "softmax");
    Tensor out(in.shape());
    for (std::size_t s = 0; s < lay.count; ++s) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < lay.length; ++i) {
            mx = std::max(mx, in[lay.at(s, i)]);
        }
        double total = 0.0;
        for (std::size_t i = 0; i < lay.length; ++i) {
            const double e = std::exp(in[lay.at(s, i)] - mx);
            out[lay.at(s, i)] = e;
            total += e;
        }
        for (std::size_t i = 0; i < lay.length; ++i) {
            out[lay.at(s, i)] /= total;
        }
    }
    const auto ix = x.id();
    return x.tape().record(std::move(out), {ix}, [ix, lay](Tape& t, std::size_t self) {
        const Tensor& y = t.value(self);
        const Tensor& g = t.grad(self);
        Tensor& dx = t.grad(ix);
        for (std::size_t s = 0; s < lay.count; ++s) {
            double inner = 0.0;
            for (std::size_t i = 0; i < lay.length; ++i) {
                inner += g[lay.at(s, i)] * y[lay.at(s, i)];
            }
            for (std::size_t i = 0; i < lay.length; ++i) {
                const auto k = lay.at(s, i);
                dx[k] += y[k] * (g[k] - inner);
            }
        }
    });
}

Var log_softmax(Var x, std::size_t axis)
{
    const Tensor& in = x.value();
    const SliceLayout lay = slice_layout(in, axis, "log_softmax");
    Tensor out(in.shape());
    for (std::size_t s = 0; s < lay.count; ++s) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < lay.length; ++i) {
            mx = std::max(mx, in[lay.at(s, i)]);
        }
        double total = 0.0;
        for (std::size_t i = 0; i < lay.length; ++i) {
            total += std::exp(in[lay.at(s, i)] - mx);
        }
        const double log_z = mx + std::log(total);
        for (std::size_t i = 0; i < lay.length; ++i) {
            out[lay.at(s, i)] = in[lay.at(s, i)] - log_z;
        }
    }
    const auto ix = x.id();
    return x.tape().record(std::move(out), {ix}, [ix, lay](Tape& t, std::size_t self) {
        const Tensor& y = t.value(self);
        const Tensor& g = t.grad(self);
        Tensor& dx = t.grad(ix);
        for (std::size_t s = 0; s < lay.count; ++s) {
            double gsum = 0.0;
            for (std::size_t i = 0; i < lay.length; ++i) {
                gsum += g[lay.at(s, i)];
            }
            for (std::size_t i = 0; i < lay.length; ++i) {
                const auto k = lay.at(s, i);
                dx[k] += g[k] - std::exp(y[k]) * gsum;
            }
        }
    });
}

Var max_pool_axis(Var x, std::size_t axis, const std::vector<bool>& include)
{
    require_rank(x, 2, "max_pool_axis");
    const Tensor& in = x.value();
    const SliceLayout lay = slice_layout(in, axis, "max_pool_axis");
    if (include.size() != lay.length) {
        throw dimension_error("max_pool_axis: mask length " + std::to_string(include.size())
                              + " does not match extent " + std::to_string(lay.length));
    }
    if (std::none_of(include.begin(), include.end(), [](bool b) { return b; })) {
        throw empty_pool_error("max_pool_axis: every position is masked out");
    }
    Tensor out({lay.count});
    std::vector<std::size_t> argmax(lay.count);
    for (std::size_t s = 0; s < lay.count; ++s) {
        bool first = true;
        for (std::size_t i = 0; i < lay.length; ++i) {
            if (!include[i]) {
                continue;
            }
            const auto k = lay.at(s, i);
            if (first || in[k] > out[s]) {
                out[s] = in[k];
                argmax[s] = k;
                first = false;
            }
        }
    }
    const auto ix = x.id();
    return x.tape().record(std::move(out), {ix}, [ix, argmax = std::move(argmax)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& dx = t.grad(ix);
        for (std::size_t s = 0; s < argmax.size(); ++s) {
            dx[argmax[s]] += g[s];
        }
    });
}

Var stop_gradient(Var x)
{
    // Recorded with no inputs, so the node is a constant as far as backward is concerned.
    return x.tape().record(x.value(), {}, nullptr);
}

Var layer_norm(Var x, Var gamma, Var beta, double epsilon)
{
    require_same_tape(x, gamma);
    require_same_tape(x, beta);
    require_rank(x, 2, "layer_norm");
    const std::size_t rows = x.value().rows();
    const std::size_t cols = x.value().cols();
    if (gamma.value().size() != cols || beta.value().size() != cols) {
        throw dimension_error("layer_norm: scale/shift length must equal " + std::to_string(cols));
    }
    const Tensor& in = x.value();
    const Tensor& gm = gamma.value();
    const Tensor& bt = beta.value();
    Tensor out({rows, cols});
    Tensor normed({rows, cols});
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double mu = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            mu += in(r, c);
        }
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = in(r, c) - mu;
            var += d * d;
        }
        var /= static_cast<double>(cols);
        inv_std[r] = 1.0 / std::sqrt(var + epsilon);
        for (std::size_t c = 0; c < cols; ++c) {
            normed(r, c) = (in(r, c) - mu) * inv_std[r];
            out(r, c) = gm[c] * normed(r, c) + bt[c];
        }
    }
    const auto ix = x.id();
    const auto ig = gamma.id();
    const auto ib = beta.id();
    return x.tape().record(
        std::move(out), {ix, ig, ib},
        [=, normed = std::move(normed), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& gm = t.value(ig);
            if (double* dg = grad_target(t, ig)) {
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                        dg[c] += g(r, c) * normed(r, c);
                    }
                }
            }
            if (double* db = grad_target(t, ib)) {
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                        db[c] += g(r, c);
                    }
                }
            }
            if (double* dx = grad_target(t, ix)) {
                const auto n = static_cast<double>(cols);
                for (std::size_t r = 0; r < rows; ++r) {
                    double mean_dn = 0.0;
                    double mean_dn_n = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) {
                        const double dn = g(r, c) * gm[c];
                        mean_dn += dn;
                        mean_dn_n += dn * normed(r, c);
                    }
                    mean_dn /= n;
                    mean_dn_n /= n;
                    for (std::size_t c = 0; c < cols; ++c) {
                        const double dn = g(r, c) * gm[c];
                        dx[r * cols + c] += inv_std[r] * (dn - mean_dn - normed(r, c) * mean_dn_n);
                    }
                }
            }
        });
}

Var gelu(Var x)
{
    const auto ix = x.id();
    return unary_elementwise(
        x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); },
        [ix](Tape& t, std::size_t self) {
            const auto g = t.grad(self).values();
            const auto in = t.value(ix).values();
            double* dx = t.grad(ix).data();
            const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double v = in[i];
                const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
                const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
                dx[i] += g[i] * (cdf + v * pdf);
            }
        });
}

Var relu(Var x)
{
    const auto ix = x.id();
    return unary_elementwise(x, [](double v) { return v > 0.0 ? v : 0.0; }, [ix](Tape& t, std::size_t self) {
        const auto g = t.grad(self).values();
        const auto in = t.value(ix).values();
        double* dx = t.grad(ix).data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (in[i] > 0.0) {
                dx[i] += g[i];
            }
        }
    });
}

Var log1p(Var x)
{
    const auto ix = x.id();
    return unary_elementwise(x, [](double v) { return std::log1p(v); }, [ix](Tape& t, std::size_t self) {
        const auto g = t.grad(self).values();
        const auto in = t.value(ix).values();
        double* dx = t.grad(ix).data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            dx[i] += g[i] / (1.0 + in[i]);
        }
    });
}

Var square(Var x)
{
    const auto ix = x.id();
    return unary_elementwise(x, [](double v) { return v * v; }, [ix](Tape& t, std::size_t self) {
        const auto g = t.grad(self).values();
        const auto in = t.value(ix).values();
        double* dx = t.grad(ix).data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            dx[i] += 2.0 * in[i] * g[i];
        }
    });
}

Var embedding_lookup(Var table, std::span<const std::int32_t> ids)
{
    require_rank(table, 2, "embedding_lookup");
    const std::size_t vocab = table.value().rows();
    const std::size_t dim = table.value().cols();
    if (ids.empty()) {
        throw dimension_error("embedding_lookup: empty id sequence");
    }
    Tensor out({ids.size(), dim});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
            throw vocab_error("token id " + std::to_string(ids[i]) + " outside vocabulary of size "
                              + std::to_string(vocab));
        }
        std::copy_n(table.value().data() + static_cast<std::size_t>(ids[i]) * dim, dim, out.data() + i * dim);
    }
    const auto it = table.id();
    std::vector<std::int32_t> rows(ids.begin(), ids.end());
    return table.tape().record(std::move(out), {it}, [it, dim, rows = std::move(rows)](Tape& t, std::size_t self) {
        const double* g = t.grad(self).data();
        double* dt = t.grad(it).data();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double* dst = dt + static_cast<std::size_t>(rows[i]) * dim;
            for (std::size_t c = 0; c < dim; ++c) {
                dst[c] += g[i * dim + c];
            }
        }
    });
}

Var masked_cross_entropy(Var logits, std::span<const std::int32_t> targets, std::span<const std::size_t> positions)
{
    require_rank(logits, 2, "masked_cross_entropy");
    const Tensor& in = logits.value();
    const std::size_t vocab = in.rows();
    const std::size_t n = in.cols();
    if (targets.size() != n) {
        throw dimension_error("masked_cross_entropy: " + std::to_string(targets.size()) + " targets for "
                              + std::to_string(n) + " positions");
    }
    if (positions.empty()) {
        return logits.tape().constant(Tensor({1}));
    }
    // Column softmax at each scored position, kept for the backward rule.
    std::vector<std::vector<double>> probs(positions.size(), std::vector<double>(vocab));
    double loss = 0.0;
    for (std::size_t p = 0; p < positions.size(); ++p) {
        const std::size_t j = positions[p];
        if (j >= n) {
            throw dimension_error("masked_cross_entropy: position out of range");
        }
        const auto target = targets[j];
        if (target < 0 || static_cast<std::size_t>(target) >= vocab) {
            throw vocab_error("masked_cross_entropy: target id outside vocabulary");
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < vocab; ++v) {
            mx = std::max(mx, in(v, j));
        }
        double total = 0.0;
        for (std::size_t v = 0; v < vocab; ++v) {
            probs[p][v] = std::exp(in(v, j) - mx);
            total += probs[p][v];
        }
        for (auto& pv : probs[p]) {
            pv /= total;
        }
        loss -= in(static_cast<std::size_t>(target), j) - mx - std::log(total);
    }
    const double count = static_cast<double>(positions.size());
    Tensor out({1}, {loss / count});
    const auto il = logits.id();
    std::vector<std::size_t> pos(positions.begin(), positions.end());
    std::vector<std::int32_t> tgt;
    tgt.reserve(pos.size());
    for (auto j : pos) {
        tgt.push_back(targets[j]);
    }
    return logits.tape().record(
        std::move(out), {il},
        [=, probs = std::move(probs), pos = std::move(pos), tgt = std::move(tgt)](Tape& t, std::size_t self) {
            const double g = t.grad(self)[0] / count;
            Tensor& dl = t.grad(il);
            for (std::size_t p = 0; p < pos.size(); ++p) {
                const std::size_t j = pos[p];
                for (std::size_t v = 0; v < vocab; ++v) {
                    dl(v, j) += g * probs[p][v];
                }
                dl(static_cast<std::size_t>(tgt[p]), j) -= g;
            }
        });
}

Var slice_cols(Var x, std::size_t start, std::size_t count)
{
    require_rank(x, 2, "slice_cols");
    const std::size_t rows = x.value().rows();
    const std::size_t cols = x.value().cols();
    if (count == 0 || start + count > cols) {
        throw dimension_error("slice_cols: range out of bounds");
    }
    Tensor out({rows, count});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < count; ++c) {
            out(r, c) = x.value()(r, start + c);
        }
    }
    const auto ix = x.id();
    return x.tape().record(std::move(out), {ix}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& dx = t.grad(ix);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < count; ++c) {
                dx(r, start + c) += g(r, c);
            }
        }
    });
}

Var concat_cols(const std::vector<Var>& parts)
{
    if (parts.empty()) {
        throw dimension_error("concat_cols: no inputs");
    }
    const std::size_t rows = parts.front().value().rows();
    std::size_t cols = 0;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) {
        require_same_tape(parts.front(), p);
        require_rank(p, 2, "concat_cols");
        if (p.value().rows() != rows) {
            throw dimension_error("concat_cols: row counts differ");
        }
        cols += p.value().cols();
        ids.push_back(p.id());
        widths.push_back(p.value().cols());
    }
    Tensor out({rows, cols});
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(v.data() + r * v.cols(), v.cols(), out.data() + r * cols + offset);
        }
        offset += v.cols();
    }
    return parts.front().tape().record(std::move(out), ids, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (double* dst = grad_target(t, ids[k])) {
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < widths[k]; ++c) {
                        dst[r * widths[k] + c] += g(r, off + c);
                    }
                }
            }
            off += widths[k];
        }
    });
}

Var concat(const std::vector<Var>& parts)
{
    if (parts.empty()) {
        throw dimension_error("concat: no inputs");
    }
    std::vector<std::size_t> ids;
    std::vector<std::size_t> lengths;
    std::vector<double> flat;
    for (const auto& p : parts) {
        require_same_tape(parts.front(), p);
        require_rank(p, 1, "concat");
        ids.push_back(p.id());
        lengths.push_back(p.value().size());
        flat.insert(flat.end(), p.value().values().begin(), p.value().values().end());
    }
    const std::size_t total = flat.size();
    Tensor out({total}, std::move(flat));
    return parts.front().tape().record(std::move(out), ids, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (double* dst = grad_target(t, ids[k])) {
                for (std::size_t i = 0; i < lengths[k]; ++i) {
                    dst[i] += g[off + i];
                }
            }
            off += lengths[k];
        }
    });
}

Var stack_rows(const std::vector<Var>& parts)
{
    if (parts.empty()) {
        throw dimension_error("stack_rows: no inputs");
    }
    const std::size_t n = parts.front().value().size();
    for (const auto& p : parts) {
        require_same_tape(parts.front(), p);
        require_rank(p, 1, "stack_rows");
        if (p.value().size() != n) {
            throw dimension_error("stack_rows: lengths differ");
        }
    }
    Var flat = concat(parts);
    return reshape(flat, {parts.size(), n});
}

Var select(Var x, std::size_t index)
{
    require_rank(x, 1, "select");
    if (index >= x.value().size()) {
        throw dimension_error("select: index out of range");
    }
    Tensor out({1}, {x.value()[index]});
    const auto ix = x.id();
    return x.tape().record(std::move(out), {ix}, [ix, index](Tape& t, std::size_t self) {
        t.grad(ix)[index] += t.grad(self)[0];
    });
}

Var sum(Var x)
{
    double total = 0.0;
    for (double v : x.value().values()) {
        total += v;
    }
    const auto ix = x.id();
    return x.tape().record(Tensor({1}, {total}), {ix}, [ix](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        for (auto& d : t.grad(ix).values()) {
            d += g;
        }
    });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var mean_axis(Var x, std::size_t axis)
{
    require_rank(x, 2, "mean_axis");
    const Tensor& in = x.value();
    const SliceLayout lay = slice_layout(in, axis, "mean_axis");
    Tensor out({lay.count});
    const double inv = 1.0 / static_cast<double>(lay.length);
    for (std::size_t s = 0; s < lay.count; ++s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < lay.length; ++i) {
            acc += in[lay.at(s, i)];
        }
        out[s] = acc * inv;
    }
    const auto ix = x.id();
    return x.tape().record(std::move(out), {ix}, [ix, lay, inv](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& dx = t.grad(ix);
        for (std::size_t s = 0; s < lay.count; ++s) {
            for (std::size_t i = 0; i < lay.length; ++i) {
                dx[lay.at(s, i)] += g[s] * inv;
            }
        }
    });
}

Var dot(Var a, Var b)
{
    require_same_shape(a, b, "dot");
    require_rank(a, 1, "dot");
    const auto av = a.value().values();
    const auto bv = b.value().values();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        acc += av[i] * bv[i];
    }
    const auto ia = a.id();
    const auto ib = b.id();
    return a.tape().record(Tensor({1}, {acc}), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        const auto av = t.value(ia).values();
        const auto bv = t.value(ib).values();
        if (double* da = grad_target(t, ia)) {
            for (std::size_t i = 0; i < av.size(); ++i) {
                da[i] += g * bv[i];
            }
        }
        if (double* db = grad_target(t, ib)) {
            for (std::size_t i = 0; i < av.size(); ++i) {
                db[i] += g * av[i];
            }
        }
    });
}

Var l1_normalize(Var x)
{
    require_rank(x, 1, "l1_normalize");
    const auto in = x.value().values();
    double total = 0.0;
    for (double v : in) {
        if (v < 0.0) {
            throw input_error("l1_normalize: negative entry");
        }
        total += v;
    }
    const std::size_t n = in.size();
    Tensor out({n});
    if (total <= 0.0) {
        out.fill(1.0 / static_cast<double>(n));
        return x.tape().record(std::move(out), {}, nullptr);
    }
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = in[i] / total;
    }
    const auto ix = x.id();
    return x.tape().record(std::move(out), {ix}, [ix, total](Tape& t, std::size_t self) {
        const auto g = t.grad(self).values();
        const auto y = t.value(self).values();
        double inner = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            inner += g[i] * y[i];
        }
        double* dx = t.grad(ix).data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            dx[i] += (g[i] - inner) / total;
        }
    });
}

}  // namespace lexmae::ad
