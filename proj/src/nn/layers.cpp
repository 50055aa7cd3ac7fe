#include "wfsep/nn/layers.hpp"

#include <Eigen/Dense>

#include "wfsep/error.hpp"
#include "wfsep/rng.hpp"

namespace wfsep::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Idx = Eigen::Index;

void check_conv(const Tensor& input, const ConvShape& shape, std::size_t weight_count, std::size_t bias_count) {
    if (shape.kernel == 0 || shape.kernel % 2 == 0) throw ValidationError("conv kernel must be odd");
    if (input.channels != shape.in_channels) throw ValidationError("conv input channel mismatch");
    if (weight_count != shape.weight_count()) throw ValidationError("conv weight count mismatch");
    if (bias_count != shape.out_channels) throw ValidationError("conv bias count mismatch");
}

// Rows ordered (channel, ky, kx), columns are output pixels.
void im2col(const Tensor& in, std::size_t k, RowMat& cols) {
    const std::size_t H = in.height, W = in.width, pad = k / 2;
    cols.resize(static_cast<Idx>(in.channels * k * k), static_cast<Idx>(H * W));
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                double* row = cols.data() + ((c * k + ky) * k + kx) * H * W;
                for (std::size_t y = 0; y < H; ++y) {
                    const long sy = static_cast<long>(y + ky) - static_cast<long>(pad);
                    double* dst = row + y * W;
                    if (sy < 0 || sy >= static_cast<long>(H)) {
                        std::fill(dst, dst + W, 0.0);
                        continue;
                    }
                    const double* src = in.data.data() + (c * H + static_cast<std::size_t>(sy)) * W;
                    for (std::size_t x = 0; x < W; ++x) {
                        const long sx = static_cast<long>(x + kx) - static_cast<long>(pad);
                        dst[x] = (sx < 0 || sx >= static_cast<long>(W)) ? 0.0 : src[sx];
                    }
                }
            }
        }
    }
}

void col2im(const RowMat& cols, std::size_t k, Tensor& out) {
    const std::size_t H = out.height, W = out.width, pad = k / 2;
    std::fill(out.data.begin(), out.data.end(), 0.0);
    for (std::size_t c = 0; c < out.channels; ++c) {
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                const double* row = cols.data() + ((c * k + ky) * k + kx) * H * W;
                for (std::size_t y = 0; y < H; ++y) {
                    const long sy = static_cast<long>(y + ky) - static_cast<long>(pad);
                    if (sy < 0 || sy >= static_cast<long>(H)) continue;
                    double* dst = out.data.data() + (c * H + static_cast<std::size_t>(sy)) * W;
                    const double* src = row + y * W;
                    for (std::size_t x = 0; x < W; ++x) {
                        const long sx = static_cast<long>(x + kx) - static_cast<long>(pad);
                        if (sx >= 0 && sx < static_cast<long>(W)) dst[sx] += src[x];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d(const Tensor& input, const ConvShape& shape, std::span<const double> weights,
              std::span<const double> bias) {
    check_conv(input, shape, weights.size(), bias.size());
    const auto hw = static_cast<Idx>(input.plane_size());
    const auto cout = static_cast<Idx>(shape.out_channels);
    const auto ck = static_cast<Idx>(shape.in_channels * shape.kernel * shape.kernel);

    Tensor out(shape.out_channels, input.height, input.width);
    Eigen::Map<const RowMat> w(weights.data(), cout, ck);
    Eigen::Map<RowMat> o(out.data.data(), cout, hw);
    if (shape.kernel == 1) {
        o.noalias() = w * Eigen::Map<const RowMat>(input.data.data(), ck, hw);
    } else {
        thread_local RowMat cols;
        im2col(input, shape.kernel, cols);
        o.noalias() = w * cols;
    }
    for (Idx c = 0; c < cout; ++c) o.row(c).array() += bias[static_cast<std::size_t>(c)];
    return out;
}

Tensor conv2d_backward(const Tensor& input, const ConvShape& shape, std::span<const double> weights,
                       const Tensor& grad_out, std::span<double> grad_weights, std::span<double> grad_bias) {
    check_conv(input, shape, weights.size(), grad_bias.size());
    if (grad_weights.size() != weights.size()) throw ValidationError("conv weight gradient size mismatch");
    if (grad_out.channels != shape.out_channels || grad_out.height != input.height || grad_out.width != input.width)
        throw ValidationError("conv output gradient shape mismatch");
    const auto hw = static_cast<Idx>(input.plane_size());
    const auto cout = static_cast<Idx>(shape.out_channels);
    const auto ck = static_cast<Idx>(shape.in_channels * shape.kernel * shape.kernel);

    Eigen::Map<const RowMat> w(weights.data(), cout, ck);
    Eigen::Map<const RowMat> g(grad_out.data.data(), cout, hw);
    Eigen::Map<RowMat> gw(grad_weights.data(), cout, ck);
    // Plain loop: Eigen's vectorised reductions peel to the buffer's alignment,
    // which would make the summation order depend on where the tensor lives.
    for (std::size_t o = 0; o < shape.out_channels; ++o) {
        double s = 0.0;
        for (double v : grad_out.plane(o)) s += v;
        grad_bias[o] += s;
    }

    Tensor grad_in(input.channels, input.height, input.width);
    if (shape.kernel == 1) {
        Eigen::Map<const RowMat> x(input.data.data(), ck, hw);
        gw.noalias() += g * x.transpose();
        Eigen::Map<RowMat>(grad_in.data.data(), ck, hw).noalias() = w.transpose() * g;
    } else {
        thread_local RowMat cols, gcols;
        im2col(input, shape.kernel, cols);
        gw.noalias() += g * cols.transpose();
        gcols.noalias() = w.transpose() * g;
        col2im(gcols, shape.kernel, grad_in);
    }
    return grad_in;
}

PoolResult maxpool2(const Tensor& input) {
    if (input.height % 2 != 0 || input.width % 2 != 0) throw ValidationError("maxpool2 needs even spatial size");
    const std::size_t Ho = input.height / 2, Wo = input.width / 2;
    PoolResult r{Tensor(input.channels, Ho, Wo), std::vector<std::uint32_t>(input.channels * Ho * Wo)};
    for (std::size_t c = 0; c < input.channels; ++c) {
        for (std::size_t y = 0; y < Ho; ++y) {
            for (std::size_t x = 0; x < Wo; ++x) {
                std::size_t best = (c * input.height + 2 * y) * input.width + 2 * x;
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t i = (c * input.height + 2 * y + dy) * input.width + 2 * x + dx;
                        if (input.data[i] > input.data[best]) best = i;
                    }
                }
                const std::size_t o = (c * Ho + y) * Wo + x;
                r.output.data[o] = input.data[best];
                r.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return r;
}

Tensor maxpool2_backward(const Tensor& grad_out, std::span<const std::uint32_t> argmax, std::size_t in_height,
                         std::size_t in_width) {
    if (argmax.size() != grad_out.size()) throw ValidationError("maxpool2 argmax size mismatch");
    if (in_height != 2 * grad_out.height || in_width != 2 * grad_out.width)
        throw ValidationError("maxpool2 input shape mismatch");
    Tensor g(grad_out.channels, in_height, in_width);
    for (std::size_t i = 0; i < argmax.size(); ++i) g.data[argmax[i]] += grad_out.data[i];
    return g;
}

Tensor upsample2(const Tensor& input) {
    Tensor out(input.channels, 2 * input.height, 2 * input.width);
    for (std::size_t c = 0; c < input.channels; ++c)
        for (std::size_t y = 0; y < out.height; ++y)
            for (std::size_t x = 0; x < out.width; ++x) out.at(c, y, x) = input.at(c, y / 2, x / 2);
    return out;
}

Tensor upsample2_backward(const Tensor& grad_out) {
    if (grad_out.height % 2 != 0 || grad_out.width % 2 != 0)
        throw ValidationError("upsample2 gradient needs even spatial size");
    Tensor g(grad_out.channels, grad_out.height / 2, grad_out.width / 2);
    for (std::size_t c = 0; c < grad_out.channels; ++c)
        for (std::size_t y = 0; y < grad_out.height; ++y)
            for (std::size_t x = 0; x < grad_out.width; ++x) g.at(c, y / 2, x / 2) += grad_out.at(c, y, x);
    return g;
}

ActivationResult relu_dropout(const Tensor& input, double rate, bool train_mode, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
    ActivationResult r{Tensor(input.channels, input.height, input.width), std::vector<double>(input.size())};
    const bool drop = train_mode && rate > 0.0;
    const double keep_scale = 1.0 / (1.0 - rate);
    Rng rng(seed);
    for (std::size_t i = 0; i < input.size(); ++i) {
        double f = input.data[i] > 0.0 ? 1.0 : 0.0;
        if (drop) f *= rng.uniform() < rate ? 0.0 : keep_scale;
        r.factor[i] = f;
        r.output.data[i] = f * input.data[i];
    }
    return r;
}

Tensor relu_dropout_backward(const Tensor& grad_out, std::span<const double> factor) {
    if (factor.size() != grad_out.size()) throw ValidationError("activation gradient size mismatch");
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] *= factor[i];
    return g;
}

Tensor skip_concat(const Tensor& contracting, const Tensor& expanding) {
    if (contracting.height != expanding.height || contracting.width != expanding.width)
        throw ValidationError("skip_concat spatial mismatch");
    Tensor out(contracting.channels + expanding.channels, contracting.height, contracting.width);
    std::copy(contracting.data.begin(), contracting.data.end(), out.data.begin());
    std::copy(expanding.data.begin(), expanding.data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(contracting.size()));
    return out;
}

void skip_split(const Tensor& grad, std::size_t contracting_channels, Tensor& grad_contracting,
                Tensor& grad_expanding) {
    if (contracting_channels > grad.channels) throw ValidationError("skip_split channel count too large");
    grad_contracting = Tensor(contracting_channels, grad.height, grad.width);
    grad_expanding = Tensor(grad.channels - contracting_channels, grad.height, grad.width);
    const auto split = static_cast<std::ptrdiff_t>(grad_contracting.size());
    std::copy(grad.data.begin(), grad.data.begin() + split, grad_contracting.data.begin());
    std::copy(grad.data.begin() + split, grad.data.end(), grad_expanding.data.begin());
}

LossResult mse_loss(const Tensor& prediction, const Tensor& target) {
    if (!prediction.same_shape(target)) throw ValidationError("mse_loss shape mismatch");
    if (prediction.size() == 0) throw ValidationError("mse_loss on empty tensors");
    const double n = static_cast<double>(prediction.size());
    LossResult r{0.0, Tensor(prediction.channels, prediction.height, prediction.width)};
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction.data[i] - target.data[i];
        r.loss += d * d;
        r.grad.data[i] = 2.0 * d / n;
    }
    r.loss /= n;
    return r;
}

}  // namespace wfsep::nn
