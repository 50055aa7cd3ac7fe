#include "wfsep/nn/unet.hpp"

#include <cmath>
#include <string>

#include "wfsep/error.hpp"
#include "wfsep/rng.hpp"

namespace wfsep::nn {

void UNetConfig::validate() const {
    if (in_channels == 0 || out_channels == 0) throw ValidationError("U-Net channel counts must be positive");
    if (base_features == 0) throw ValidationError("U-Net base features must be positive");
    if (levels > 8) throw ValidationError("U-Net depth limited to 8 levels");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
    const std::size_t div = std::size_t{1} << levels;
    if (image_size == 0 || image_size % div != 0)
        throw ValidationError("image size " + std::to_string(image_size) + " not divisible by " + std::to_string(div));
}

std::span<const double> UNetModel::weights(std::size_t i) const {
    return {params.data() + offsets[i], convs[i].weight_count()};
}

std::span<const double> UNetModel::bias(std::size_t i) const {
    return {params.data() + offsets[i] + convs[i].weight_count(), convs[i].out_channels};
}

std::vector<ConvShape> unet_layout(const UNetConfig& config) {
    config.validate();
    std::vector<ConvShape> layout;
    std::size_t ch = config.in_channels;
    std::vector<std::size_t> skip(config.levels);
    for (std::size_t l = 0; l < config.levels; ++l) {
        const std::size_t f = config.base_features << l;
        layout.push_back({ch, f, 3});
        layout.push_back({f, f, 3});
        skip[l] = f;
        ch = f;
    }
    const std::size_t fb = config.base_features << config.levels;
    layout.push_back({ch, fb, 3});
    layout.push_back({fb, fb, 3});
    ch = fb;
    for (std::size_t l = config.levels; l-- > 0;) {
        layout.push_back({skip[l] + ch, skip[l], 3});
        layout.push_back({skip[l], skip[l], 3});
        ch = skip[l];
    }
    layout.push_back({ch, config.out_channels, 1});
    return layout;
}

UNetModel build_unet(const UNetConfig& config, std::uint64_t seed) {
    UNetModel model;
    model.config = config;
    model.convs = unet_layout(config);
    std::size_t total = 0;
    for (const auto& c : model.convs) {
        model.offsets.push_back(total);
        total += c.param_count();
    }
    model.params.assign(total, 0.0);
    model.m.assign(total, 0.0);
    model.v.assign(total, 0.0);
    for (std::size_t i = 0; i < model.convs.size(); ++i) {
        const auto& c = model.convs[i];
        Rng rng(derive_seed(seed, i));
        const double std = std::sqrt(2.0 / static_cast<double>(c.in_channels * c.kernel * c.kernel));
        for (std::size_t k = 0; k < c.weight_count(); ++k) model.params[model.offsets[i] + k] = std * rng.normal();
    }
    return model;
}

namespace {

void check_input(const UNetModel& model, const Tensor& input) {
    const auto& cfg = model.config;
    if (input.channels != cfg.in_channels) throw ValidationError("input channel count differs from the model");
    const std::size_t div = std::size_t{1} << cfg.levels;
    if (input.height == 0 || input.width == 0 || input.height % div != 0 || input.width % div != 0)
        throw ValidationError("input size not divisible by 2^levels");
}

}  // namespace

Tensor forward(const UNetModel& model, const Tensor& input, bool train_mode, std::uint64_t seed,
               ForwardCache* cache) {
    check_input(model, input);
    if (cache) *cache = ForwardCache{};
    const double rate = model.config.dropout_rate;
    std::size_t idx = 0;

    auto block = [&](const Tensor& x) {
        Tensor y = conv2d(x, model.convs[idx], model.weights(idx), model.bias(idx));
        ActivationResult a = relu_dropout(y, rate, train_mode, derive_seed(seed, idx));
        if (cache) {
            cache->conv_inputs.push_back(x);
            cache->activation_factors.push_back(std::move(a.factor));
        }
        ++idx;
        return std::move(a.output);
    };

    const std::size_t L = model.config.levels;
    std::vector<Tensor> skips(L);
    Tensor x = input;
    for (std::size_t l = 0; l < L; ++l) {
        x = block(x);
        x = block(x);
        skips[l] = x;
        PoolResult p = maxpool2(x);
        if (cache) {
            cache->pool_argmax.push_back(std::move(p.argmax));
            cache->pool_input_size.push_back(x.height);
        }
        x = std::move(p.output);
    }
    x = block(x);
    x = block(x);
    for (std::size_t l = L; l-- > 0;) {
        x = skip_concat(skips[l], upsample2(x));
        x = block(x);
        x = block(x);
    }
    if (cache) cache->conv_inputs.push_back(x);
    return conv2d(x, model.convs[idx], model.weights(idx), model.bias(idx));
}

std::vector<double> backward(const UNetModel& model, const ForwardCache& cache, const Tensor& loss_grad) {
    const std::size_t L = model.config.levels;
    const std::size_t n_conv = model.convs.size();
    if (cache.conv_inputs.size() != n_conv || cache.activation_factors.size() != n_conv - 1 ||
        cache.pool_argmax.size() != L)
        throw ValidationError("backward needs the cache of a training forward pass");

    std::vector<double> grads(model.params.size(), 0.0);
    auto conv_back = [&](std::size_t i, const Tensor& g) {
        const auto& c = model.convs[i];
        std::span<double> gw(grads.data() + model.offsets[i], c.weight_count());
        std::span<double> gb(grads.data() + model.offsets[i] + c.weight_count(), c.out_channels);
        return conv2d_backward(cache.conv_inputs[i], c, model.weights(i), g, gw, gb);
    };
    auto block_back = [&](std::size_t i, const Tensor& g) {
        return conv_back(i, relu_dropout_backward(g, cache.activation_factors[i]));
    };

    std::size_t idx = n_conv - 1;
    Tensor g = conv_back(idx, loss_grad);
    std::vector<Tensor> skip_grads(L);
    for (std::size_t l = 0; l < L; ++l) {
        g = block_back(--idx, g);
        g = block_back(--idx, g);
        Tensor g_up;
        skip_split(g, model.convs[2 * l].out_channels, skip_grads[l], g_up);
        g = upsample2_backward(g_up);
    }
    g = block_back(--idx, g);
    g = block_back(--idx, g);
    for (std::size_t l = L; l-- > 0;) {
        const std::size_t size = cache.pool_input_size[l];
        g = maxpool2_backward(g, cache.pool_argmax[l], size, g.width * 2);
        for (std::size_t k = 0; k < g.size(); ++k) g.data[k] += skip_grads[l].data[k];
        g = block_back(--idx, g);
        g = block_back(--idx, g);
    }
    return grads;
}

}  // namespace wfsep::nn
