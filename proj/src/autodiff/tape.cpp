#include "lexmae/autodiff/tape.hpp"

#include <algorithm>

#include "lexmae/util/errors.hpp"

namespace lexmae::ad {

const Tensor& Var::value() const { return m_tape->value(m_id); }

bool Var::requires_grad() const { return m_tape->requires_grad(m_id); }

Tensor Var::grad() const
{
    if (m_tape->has_grad(m_id)) {
        return m_tape->grad(m_id);
    }
    return Tensor(value().shape());
}

Var Tape::constant(Tensor value)
{
    Node node;
    node.owned = std::move(value);
    m_nodes.push_back(std::move(node));
    return {this, m_nodes.size() - 1};
}

Var Tape::variable(Tensor value)
{
    Node node;
    node.owned = std::move(value);
    node.requires_grad = m_record;
    m_nodes.push_back(std::move(node));
    return {this, m_nodes.size() - 1};
}

Var Tape::parameter(Parameter& param)
{
    if (auto it = m_param_nodes.find(&param); it != m_param_nodes.end()) {
        return {this, it->second};
    }
    Node node;
    node.external = &param.value;
    node.requires_grad = m_record;
    node.param = m_record ? &param : nullptr;
    m_nodes.push_back(std::move(node));
    m_param_nodes.emplace(&param, m_nodes.size() - 1);
    return {this, m_nodes.size() - 1};
}

Var Tape::parameter_constant(const Parameter& param)
{
    Node node;
    node.external = &param.value;
    m_nodes.push_back(std::move(node));
    return {this, m_nodes.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward)
{
    Node node;
    node.owned = std::move(value);
    if (m_record) {
        node.requires_grad = std::any_of(
            inputs.begin(), inputs.end(), [this](std::size_t id) { return m_nodes[id].requires_grad; });
    }
    if (node.requires_grad) {
        node.inputs = std::move(inputs);
        node.backward = std::move(backward);
    }
    m_nodes.push_back(std::move(node));
    return {this, m_nodes.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const
{
    const Node& node = m_nodes[id];
    return node.external != nullptr ? *node.external : node.owned;
}

Tensor& Tape::grad(std::size_t id)
{
    Node& node = m_nodes[id];
    if (!node.grad) {
        node.grad.emplace(value(id).shape());
    }
    return *node.grad;
}

void Tape::backward(Var root)
{
    if (!m_record) {
        throw contract_error("backward on a tape recorded without gradients");
    }
    if (root.value().size() != 1) {
        throw dimension_error("backward root must hold a single element, got shape "
                              + shape_string(root.shape()));
    }
    if (!m_nodes[root.id()].requires_grad) {
        return;
    }
    grad(root.id())[0] += 1.0;
    for (std::size_t id = root.id() + 1; id-- > 0;) {
        Node& node = m_nodes[id];
        if (!node.requires_grad || !node.grad) {
            continue;
        }
        if (node.backward) {
            node.backward(*this, id);
        }
        if (node.param != nullptr) {
            if (node.param->grad.shape() != node.param->value.shape()) {
                node.param->grad = Tensor(node.param->value.shape());
            }
            auto dst = node.param->grad.values();
            auto src = node.grad->values();
            for (std::size_t i = 0; i < dst.size(); ++i) {
                dst[i] += src[i];
            }
        }
    }
}

}  // namespace lexmae::ad
