#pragma once

#include <cstddef>
#include <vector>

#include "lexmae/model/weights.hpp"

namespace lexmae::model {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    /// Global gradient-norm clip; 0 disables.
    double clip_norm = 1.0;
    std::size_t warmup_steps = 0;
    /// Linear decay to zero at this step; 0 keeps the rate flat after warmup.
    std::size_t total_steps = 0;

    friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Adam with linear warmup then linear decay. Reads and clears the
/// accumulated Parameter::grad on every step.
class Adam {
  public:
    Adam(TransformerWeights& weights, AdamConfig config);

    /// Applies one update and zeroes the gradients. Returns the pre-clip gradient norm.
    double step();

    [[nodiscard]] double learning_rate_at(std::size_t step) const;
    [[nodiscard]] std::size_t steps_taken() const noexcept { return m_step; }

  private:
    TransformerWeights& m_weights;
    AdamConfig m_config;
    std::vector<ad::Tensor> m_first;
    std::vector<ad::Tensor> m_second;
    std::size_t m_step = 0;
};

}  // namespace lexmae::model
