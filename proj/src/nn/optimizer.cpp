#include "wfsep/nn/optimizer.hpp"

#include <cmath>

#include "wfsep/error.hpp"

namespace wfsep::nn {

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ValidationError("moment decay rates must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
    if (validation_every < 1) throw ValidationError("validation interval must be >= 1");
}

void nadam_step(std::span<double> weights, std::span<const double> grads, std::span<double> m, std::span<double> v,
                std::uint64_t t, const TrainConfig& config) {
    if (t < 1) throw ValidationError("optimizer step index must be >= 1");
    if (grads.size() != weights.size() || m.size() != weights.size() || v.size() != weights.size())
        throw ValidationError("optimizer state size mismatch");
    const double b1 = config.beta1, b2 = config.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        const double m_bar = b1 * m_hat + (1.0 - b1) * g / c1;
        weights[i] -= config.learning_rate * m_bar / (std::sqrt(v_hat) + config.epsilon);
    }
}

}  // namespace wfsep::nn
