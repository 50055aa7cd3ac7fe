#include "wfsep/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace wfsep {

void write_pgm(const std::filesystem::path& path, const RealImage& image, std::optional<Window> window) {
    if (image.empty()) throw ValidationError("cannot export an empty image");
    Window w{0.0, 0.0};
    if (window) {
        w = *window;
    } else {
        const auto [lo, hi] = std::minmax_element(image.values().begin(), image.values().end());
        w = {*lo, *hi};
    }
    const double span = w.high - w.low;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open PGM for writing");
    out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
    for (double v : image.values()) {
        double t = span > 0.0 ? (v - w.low) / span : 0.0;
        t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
    if (!out) throw IoError(path.string(), "failed writing PGM");
}

RealImage hstack(const std::vector<RealImage>& panels) {
    if (panels.empty()) return {};
    const std::size_t rows = panels.front().rows();
    std::size_t cols = 0;
    for (const auto& p : panels) {
        if (p.rows() != rows) throw ValidationError("panels must share a height");
        cols += p.cols();
    }
    RealImage out(rows, cols);
    std::size_t offset = 0;
    for (const auto& p : panels) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < p.cols(); ++c) out(r, offset + c) = p(r, c);
        offset += p.cols();
    }
    return out;
}

}  // namespace wfsep
