#include "varbpr/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace varbpr::learning {

void adam_step(OptimizerState& state, std::span<const SparseUpdate> updates, double lr) {
  ++state.step;
  const auto& k = state.constants;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(k.beta1, t);
  const double bias2 = 1.0 - std::pow(k.beta2, t);

  for (const auto& update : updates) {
    if (update.tensor >= state.tensors.size()) throw std::domain_error("adam_step: unknown tensor");
    MomentTable& moments = state.tensors[update.tensor];
    const std::size_t size = moments.rows * moments.dim;
    if (update.params.size() != size || update.grads.size() != size) {
      throw std::domain_error("adam_step: parameter/gradient shape mismatch");
    }
    for (std::size_t row : update.rows) {
      if (row >= moments.rows) throw std::domain_error("adam_step: row out of range");
      const std::size_t base = row * moments.dim;
      for (std::size_t d = 0; d < moments.dim; ++d) {
        const double g = update.grads[base + d];
        double& m = moments.first[base + d];
        double& v = moments.second[base + d];
        m = k.beta1 * m + (1.0 - k.beta1) * g;
        v = k.beta2 * v + (1.0 - k.beta2) * g * g;
        update.params[base + d] -= lr * (m / bias1) / (std::sqrt(v / bias2) + k.epsilon);
      }
    }
  }
}

}  // namespace varbpr::learning
