#pragma once

#include <filesystem>
#include <optional>

#include "wfsep/types.hpp"

namespace wfsep {

struct Window {
    double low;
    double high;
};

/// Binary 8-bit PGM (P5). Grey level = round(255 * clamp((v - low) / (high - low), 0, 1)).
/// Without a window the image's own min/max are used; a flat image maps to 0.
void write_pgm(const std::filesystem::path& path, const RealImage& image,
               std::optional<Window> window = std::nullopt);

/// Images of equal height placed left to right.
RealImage hstack(const std::vector<RealImage>& panels);

}  // namespace wfsep
