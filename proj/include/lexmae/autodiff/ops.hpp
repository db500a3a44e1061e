#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lexmae/autodiff/tape.hpp"

/// Differentiable operations. Every function records one node on the tape of
/// its first argument; all arguments must live on the same tape.
///
/// Axis conventions for rank-2 tensors: axis 0 runs over rows, axis 1 over
/// columns. A "slice along axis" is a column when axis = 0 and a row when
/// axis = 1.
namespace lexmae::ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var multiply(Var a, Var b);
Var scale(Var a, double factor);
/// Adds the vector `bias` to every slice of `x` along `axis`: axis 1 adds a
/// length-cols vector to each row, axis 0 a length-rows vector to each column.
Var add_bias(Var x, Var bias, std::size_t axis);

Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape(Var a, Shape shape);

Var softmax(Var x, std::size_t axis);
Var log_softmax(Var x, std::size_t axis);

/// Element-wise maximum over positions of `axis` where `include` is true.
/// Backward routes the gradient to the first maximal position only.
/// Throws empty_pool_error when every position is excluded.
Var max_pool_axis(Var x, std::size_t axis, const std::vector<bool>& include);

/// Forward identity; contributes no gradient to `x`.
Var stop_gradient(Var x);

/// Row-wise normalisation of a [m×n] tensor with learnable gamma/beta of length n.
Var layer_norm(Var x, Var gamma, Var beta, double epsilon = 1e-12);

Var gelu(Var x);
Var relu(Var x);
Var log1p(Var x);
Var square(Var x);

/// Gathers rows of `table` [V×d] → [ids.size()×d].
Var embedding_lookup(Var table, std::span<const std::int32_t> ids);

/// Mean over `positions` of -log softmax(logits[:, j])[targets[j]], with
/// logits laid out [V×n] (class axis 0). Returns a zero constant when
/// `positions` is empty.
Var masked_cross_entropy(Var logits, std::span<const std::int32_t> targets,
                         std::span<const std::size_t> positions);

Var slice_cols(Var x, std::size_t start, std::size_t count);
Var concat_cols(const std::vector<Var>& parts);
/// Concatenates rank-1 tensors.
Var concat(const std::vector<Var>& parts);
/// Stacks equal-length rank-1 tensors into a [parts.size()×n] matrix.
Var stack_rows(const std::vector<Var>& parts);
/// Element `index` of a rank-1 tensor, as shape {1}.
Var select(Var x, std::size_t index);

Var sum(Var x);
Var mean(Var x);
/// Mean along `axis` of a rank-2 tensor; returns a rank-1 tensor.
Var mean_axis(Var x, std::size_t axis);
Var dot(Var a, Var b);

/// x / sum(x) for a non-negative rank-1 tensor. A zero-sum input maps to the
/// uniform distribution with zero gradient.
Var l1_normalize(Var x);

}  // namespace lexmae::ad
