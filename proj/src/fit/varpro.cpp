#include <cmath>
#include <limits>
#include <string>

#include "wfsep/conventional_fit.hpp"

namespace wfsep {

std::vector<double> GridRange::values() const {
    std::vector<double> v;
    const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    v.reserve(n);
    for (std::size_t k = 0; k < n; ++k) v.push_back(min + static_cast<double>(k) * step);
    return v;
}

void GridRange::validate(const char* name) const {
    if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step))
        throw ValidationError(std::string(name) + " grid must be finite");
    if (!(min < max)) throw ValidationError(std::string(name) + " grid needs min < max");
    if (!(step > 0.0)) throw ValidationError(std::string(name) + " grid needs step > 0");
}

void FitOptions::validate() const {
    offres.validate("offres");
    r2star.validate("r2star");
    if (r2star.min < 0.0) throw ValidationError("r2star grid must be non-negative");
    if (refinement_iterations < 0) throw ValidationError("refinement iterations must be >= 0");
    if (!(smoothness_lambda >= 0.0)) throw ValidationError("smoothness lambda must be >= 0");
    if (icm_sweeps < 0) throw ValidationError("icm sweeps must be >= 0");
    if (!(signal_threshold >= 0.0)) throw ValidationError("signal threshold must be >= 0");
}

AmplitudeFit varpro_solve(std::span<const cdouble> signal, double offres, double r2star,
                          const AcquisitionProtocol& protocol) {
    const std::size_t n_echo = protocol.echo_count();
    if (signal.size() != n_echo) throw ValidationError("signal length differs from echo count");
    if (n_echo < 2) throw DegenerateFitError("water/fat fit needs at least two echoes");

    const auto& te = protocol.echo_times();
    const auto& fat_mod = protocol.fat_modulation();

    // A = [a, a .* c] with a_n = exp(-R2* TE_n + j 2 pi df TE_n). The Gram matrix only
    // sees |a_n|^2, so off-resonance enters through A^H s alone.
    double g11 = 0.0, g22 = 0.0;
    cdouble g12{0.0, 0.0}, b1{0.0, 0.0}, b2{0.0, 0.0};
    std::vector<cdouble> a(n_echo);
    for (std::size_t n = 0; n < n_echo; ++n) {
        a[n] = std::exp(cdouble(-r2star * te[n], kTwoPi * offres * te[n]));
        const double w2 = std::norm(a[n]);
        g11 += w2;
        g12 += w2 * fat_mod[n];
        g22 += w2 * std::norm(fat_mod[n]);
        const cdouble proj = std::conj(a[n]) * signal[n];
        b1 += proj;
        b2 += std::conj(fat_mod[n]) * proj;
    }
    const double det = g11 * g22 - std::norm(g12);
    if (!(det > 1e-12 * g11 * g22) || !std::isfinite(det))
        throw DegenerateFitError("water/fat design matrix is rank deficient");

    // [g11 g12; conj(g12) g22]^{-1} b
    AmplitudeFit fit;
    fit.water = (g22 * b1 - g12 * b2) / det;
    fit.fat = (g11 * b2 - std::conj(g12) * b1) / det;

    double r2 = 0.0;
    for (std::size_t n = 0; n < n_echo; ++n) r2 += std::norm(signal[n] - a[n] * (fit.water + fat_mod[n] * fit.fat));
    fit.residual = std::sqrt(r2);
    return fit;
}

}  // namespace wfsep
