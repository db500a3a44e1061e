#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexmae/autodiff/tensor.hpp"

namespace lexmae::ad {

/// A named learnable tensor that outlives any single tape. Gradients from
/// every tape that reads it accumulate into `grad` until cleared.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node recorded on a tape.
class Var {
  public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : m_tape(tape), m_id(id) {}

    [[nodiscard]] Tape& tape() const { return *m_tape; }
    [[nodiscard]] std::size_t id() const noexcept { return m_id; }
    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] const Shape& shape() const { return value().shape(); }
    [[nodiscard]] bool requires_grad() const;
    /// Gradient after Tape::backward; a zero tensor when nothing flowed here.
    [[nodiscard]] Tensor grad() const;

  private:
    Tape* m_tape = nullptr;
    std::size_t m_id = 0;
};

/// Ordered record of executed operations. Nodes are appended in execution
/// order, so replaying them in reverse is a valid topological order.
class Tape {
  public:
    /// Receives the tape and the id of the node whose gradient is being propagated.
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    /// With `record` false, operations compute values only and no backward
    /// closures are kept (inference mode).
    explicit Tape(bool record = true) : m_record(record) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var variable(Tensor value);
    /// The same Parameter always maps to the same node on a given tape.
    Var parameter(Parameter& param);
    /// Reads a parameter's storage without tracking gradients.
    Var parameter_constant(const Parameter& param);

    /// Used by operations: appends a node whose value is already computed.
    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

    /// Seeds d(root)/d(root) = 1 for a single-element root and replays the
    /// tape in reverse. Parameter gradients are added into Parameter::grad.
    void backward(Var root);

    [[nodiscard]] bool recording() const noexcept { return m_record; }
    [[nodiscard]] std::size_t size() const noexcept { return m_nodes.size(); }

    [[nodiscard]] const Tensor& value(std::size_t id) const;
    [[nodiscard]] bool requires_grad(std::size_t id) const { return m_nodes[id].requires_grad; }
    /// Gradient buffer of a node, allocated as zeros on first touch.
    Tensor& grad(std::size_t id);
    [[nodiscard]] bool has_grad(std::size_t id) const { return m_nodes[id].grad.has_value(); }

  private:
    struct Node {
        Tensor owned;
        const Tensor* external = nullptr;
        bool requires_grad = false;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        Parameter* param = nullptr;
        std::optional<Tensor> grad;
    };

    bool m_record;
    std::deque<Node> m_nodes;  // stable element addresses across appends
    std::unordered_map<const Parameter*, std::size_t> m_param_nodes;
};

}  // namespace lexmae::ad
