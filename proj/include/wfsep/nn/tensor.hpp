#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wfsep::nn {

/// C x H x W real array, channel-major.
struct Tensor {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : channels(c), height(h), width(w), data(c * h * w, fill) {}

    std::size_t size() const noexcept { return data.size(); }
    std::size_t plane_size() const noexcept { return height * width; }

    double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
    double at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }

    std::span<double> plane(std::size_t c) { return {data.data() + c * plane_size(), plane_size()}; }
    std::span<const double> plane(std::size_t c) const { return {data.data() + c * plane_size(), plane_size()}; }

    bool same_shape(const Tensor& o) const noexcept {
        return channels == o.channels && height == o.height && width == o.width;
    }
    bool operator==(const Tensor&) const = default;
};

}  // namespace wfsep::nn
