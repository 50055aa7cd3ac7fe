#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wfsep/nn/tensor.hpp"

namespace wfsep::nn {

/// Square kernel, zero padding (k - 1) / 2, stride 1, cross-correlation.
/// Weights are laid out [out][in][ky][kx].
struct ConvShape {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 3;

    std::size_t weight_count() const noexcept { return out_channels * in_channels * kernel * kernel; }
    std::size_t param_count() const noexcept { return weight_count() + out_channels; }
};

Tensor conv2d(const Tensor& input, const ConvShape& shape, std::span<const double> weights,
              std::span<const double> bias);

/// Returns grad_input; grad_weights and grad_bias are accumulated (+=).
Tensor conv2d_backward(const Tensor& input, const ConvShape& shape, std::span<const double> weights,
                       const Tensor& grad_out, std::span<double> grad_weights, std::span<double> grad_bias);

struct PoolResult {
    Tensor output;
    std::vector<std::uint32_t> argmax;  // flat input index per output element
};

/// 2x2 max pooling; ties go to the first element in row-major window order.
PoolResult maxpool2(const Tensor& input);
Tensor maxpool2_backward(const Tensor& grad_out, std::span<const std::uint32_t> argmax, std::size_t in_height,
                         std::size_t in_width);

/// Nearest-neighbour 2x upsampling.
Tensor upsample2(const Tensor& input);
Tensor upsample2_backward(const Tensor& grad_out);

struct ActivationResult {
    Tensor output;
    std::vector<double> factor;  // d output / d input, per element
};

/// max(0, x) followed by inverted dropout when train_mode is set.
ActivationResult relu_dropout(const Tensor& input, double rate, bool train_mode, std::uint64_t seed);
Tensor relu_dropout_backward(const Tensor& grad_out, std::span<const double> factor);

/// Channel concatenation, contracting channels first.
Tensor skip_concat(const Tensor& contracting, const Tensor& expanding);
void skip_split(const Tensor& grad, std::size_t contracting_channels, Tensor& grad_contracting,
                Tensor& grad_expanding);

struct LossResult {
    double loss;
    Tensor grad;
};

LossResult mse_loss(const Tensor& prediction, const Tensor& target);

}  // namespace wfsep::nn
