#pragma once

#include <cstdint>
#include <span>

namespace wfsep::nn {

struct TrainConfig {
    int epochs = 75;
    std::size_t batch_size = 1;
    double learning_rate = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    int validation_every = 1;
    bool augment_mirror = true;

    void validate() const;
};

/// One Nadam update at step t >= 1, elementwise:
///   m <- b1 m + (1 - b1) g          v <- b2 v + (1 - b2) g^2
///   m_hat = m / (1 - b1^t)          v_hat = v / (1 - b2^t)
///   m_bar = b1 m_hat + (1 - b1) g / (1 - b1^t)
///   w <- w - lr m_bar / (sqrt(v_hat) + eps)
void nadam_step(std::span<double> weights, std::span<const double> grads, std::span<double> m, std::span<double> v,
                std::uint64_t t, const TrainConfig& config);

}  // namespace wfsep::nn
