#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wfsep/nn/layers.hpp"

namespace wfsep::nn {

struct UNetConfig {
    std::size_t in_channels = 24;
    std::size_t out_channels = 4;
    std::size_t levels = 3;
    std::size_t base_features = 16;
    double dropout_rate = 0.0;
    std::size_t image_size = 64;

    void validate() const;
    bool operator==(const UNetConfig&) const = default;
};

/// Convolutions in execution order: two per contracting level, two for the
/// bottleneck, two per expanding level (deepest first), then the final 1x1.
/// All parameters live in one flat vector; Nadam moments are aligned with it.
struct UNetModel {
    UNetConfig config;
    std::vector<ConvShape> convs;
    std::vector<std::size_t> offsets;  // start of each conv's weights; bias follows
    std::vector<double> params;
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    std::size_t parameter_count() const noexcept { return params.size(); }
    std::span<const double> weights(std::size_t i) const;
    std::span<const double> bias(std::size_t i) const;
};

/// Layer list for a config, without weights.
std::vector<ConvShape> unet_layout(const UNetConfig& config);

/// He-normal weights (std sqrt(2 / fan_in)), zero biases, zero optimizer state.
UNetModel build_unet(const UNetConfig& config, std::uint64_t seed);

struct ForwardCache {
    std::vector<Tensor> conv_inputs;
    std::vector<std::vector<double>> activation_factors;
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    std::vector<std::size_t> pool_input_size;
};

/// Dropout in train mode draws from derive_seed(seed, conv index).
Tensor forward(const UNetModel& model, const Tensor& input, bool train_mode, std::uint64_t seed,
               ForwardCache* cache = nullptr);

/// Parameter gradients of <loss_grad, forward(input)>, aligned with model.params.
std::vector<double> backward(const UNetModel& model, const ForwardCache& cache, const Tensor& loss_grad);

}  // namespace wfsep::nn
