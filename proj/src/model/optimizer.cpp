#include "lexmae/model/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "lexmae/util/errors.hpp"

namespace lexmae::model {

Adam::Adam(TransformerWeights& weights, AdamConfig config) : m_weights(weights), m_config(config)
{
    if (!(config.learning_rate > 0.0)) {
        throw config_error("learning rate must be positive");
    }
    for (const auto& p : weights.parameters()) {
        m_first.emplace_back(p.value.shape());
        m_second.emplace_back(p.value.shape());
    }
}

double Adam::learning_rate_at(std::size_t step) const
{
    const double base = m_config.learning_rate;
    const auto s = static_cast<double>(step);
    if (m_config.warmup_steps > 0 && step < m_config.warmup_steps) {
        return base * (s + 1.0) / static_cast<double>(m_config.warmup_steps);
    }
    if (m_config.total_steps > m_config.warmup_steps) {
        const double span = static_cast<double>(m_config.total_steps - m_config.warmup_steps);
        const double done = s - static_cast<double>(m_config.warmup_steps);
        return base * std::max(0.0, 1.0 - done / span);
    }
    return base;
}

double Adam::step()
{
    auto& params = m_weights.parameters();
    double sq = 0.0;
    for (const auto& p : params) {
        for (double g : p.grad.values()) {
            sq += g * g;
        }
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) {
        throw training_divergence_error("non-finite gradient norm at optimizer step " + std::to_string(m_step));
    }
    const double clip = (m_config.clip_norm > 0.0 && norm > m_config.clip_norm) ? m_config.clip_norm / norm : 1.0;
    const double lr = learning_rate_at(m_step);
    ++m_step;
    const double bc1 = 1.0 - std::pow(m_config.beta1, static_cast<double>(m_step));
    const double bc2 = 1.0 - std::pow(m_config.beta2, static_cast<double>(m_step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto value = params[k].value.values();
        auto grad = params[k].grad.values();
        auto m = m_first[k].values();
        auto v = m_second[k].values();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i] * clip;
            m[i] = m_config.beta1 * m[i] + (1.0 - m_config.beta1) * g;
            v[i] = m_config.beta2 * v[i] + (1.0 - m_config.beta2) * g * g;
            const double update = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + m_config.epsilon);
            value[i] -= lr * (update + m_config.weight_decay * value[i]);
        }
        params[k].zero_grad();
    }
    if (!m_weights.all_finite()) {
        throw training_divergence_error("non-finite parameter after optimizer step " + std::to_string(m_step));
    }
    return norm;
}

}  // namespace lexmae::model
