#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wfsep/types.hpp"

namespace wfsep {

/// Multi-echo gradient-echo signal of one voxel:
///   I_n = exp(-R2* TE_n) exp(j 2 pi df TE_n) (rho_W + rho_F sum_p alpha_p exp(j 2 pi f_p TE_n))
/// Water and fat enter as real, non-negative amplitudes.
std::vector<cdouble> simulate_pixel(double water, double fat, double r2star, double offres,
                                    const AcquisitionProtocol& protocol);
void simulate_pixel(double water, double fat, double r2star, double offres,
                    const AcquisitionProtocol& protocol, std::span<cdouble> out);

/// Per-pixel simulation; pixels outside maps.mask are 0.
EchoSeries simulate_series(const ParameterMaps& maps, const AcquisitionProtocol& protocol);

struct NoiseSpec {
    double sigma = 0.0;  // per real/imaginary channel, a.u.
    std::uint64_t seed = 0;
};

/// Adds independent N(0, sigma^2) to the real and imaginary part of every sample.
EchoSeries add_noise(const EchoSeries& series, const NoiseSpec& noise);

/// Phase error of alternating readout polarity: even-index echoes (0, 2, ...)
/// are multiplied by exp(j (phi0 + phi1 * x)), x being the column index.
struct BipolarErrorSpec {
    double phi0 = 0.0;  // rad
    double phi1 = 0.0;  // rad per pixel along the readout (column) axis
};

EchoSeries apply_bipolar_error(const EchoSeries& series, const BipolarErrorSpec& err);

/// Row shift used by apply_foldover for an image of the given height.
std::size_t foldover_shift_rows(double shift_fraction, std::size_t rows);

/// Phase-encode wrap-around: out(y) = in(y) + in((y + round(s * H)) mod H) for every echo.
/// shift_fraction must lie in (0, 0.5).
EchoSeries apply_foldover(const EchoSeries& series, double shift_fraction);

}  // namespace wfsep
