#include "wfsep/signal_model.hpp"

#include <cmath>

#include "wfsep/rng.hpp"

namespace wfsep {

void simulate_pixel(double water, double fat, double r2star, double offres,
                    const AcquisitionProtocol& protocol, std::span<cdouble> out) {
    if (!(water >= 0.0) || !(fat >= 0.0) || !std::isfinite(water) || !std::isfinite(fat))
        throw ValidationError("water and fat amplitudes must be finite and non-negative");
    if (!(r2star >= 0.0) || !std::isfinite(r2star))
        throw ValidationError("r2star must be finite and non-negative");
    if (!std::isfinite(offres)) throw ValidationError("offres must be finite");
    if (out.size() != protocol.echo_count()) throw ValidationError("output length differs from echo count");

    const auto& te = protocol.echo_times();
    const auto& fat_mod = protocol.fat_modulation();
    for (std::size_t n = 0; n < te.size(); ++n) {
        const cdouble envelope = std::exp(cdouble(-r2star * te[n], kTwoPi * offres * te[n]));
        out[n] = envelope * (water + fat * fat_mod[n]);
    }
}

std::vector<cdouble> simulate_pixel(double water, double fat, double r2star, double offres,
                                    const AcquisitionProtocol& protocol) {
    std::vector<cdouble> out(protocol.echo_count());
    simulate_pixel(water, fat, r2star, offres, protocol, out);
    return out;
}

EchoSeries simulate_series(const ParameterMaps& maps, const AcquisitionProtocol& protocol) {
    maps.validate();
    EchoSeries series(protocol, maps.rows(), maps.cols());
    const std::size_t plane = maps.water.size();
    const std::size_t echoes = protocol.echo_count();
    std::vector<cdouble> signal(echoes);
    for (std::size_t i = 0; i < plane; ++i) {
        if (!maps.mask[i]) continue;
        simulate_pixel(maps.water[i], maps.fat[i], maps.r2star[i], maps.offres[i], protocol, signal);
        for (std::size_t n = 0; n < echoes; ++n) series.data()[n * plane + i] = signal[n];
    }
    return series;
}

EchoSeries add_noise(const EchoSeries& series, const NoiseSpec& noise) {
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
        throw ValidationError("noise sigma must be finite and non-negative");
    EchoSeries out = series;
    if (noise.sigma == 0.0) return out;
    Rng rng(noise.seed);
    for (auto& v : out.data()) {
        const double re = rng.normal();
        const double im = rng.normal();
        v += cdouble(noise.sigma * re, noise.sigma * im);
    }
    return out;
}

EchoSeries apply_bipolar_error(const EchoSeries& series, const BipolarErrorSpec& err) {
    if (!std::isfinite(err.phi0) || !std::isfinite(err.phi1))
        throw ValidationError("bipolar phase parameters must be finite");
    EchoSeries out = series;
    if (err.phi0 == 0.0 && err.phi1 == 0.0) return out;
    std::vector<cdouble> phase(series.cols());
    for (std::size_t x = 0; x < phase.size(); ++x)
        phase[x] = std::polar(1.0, err.phi0 + err.phi1 * static_cast<double>(x));
    for (std::size_t n = 0; n < series.echo_count(); n += 2)
        for (std::size_t r = 0; r < series.rows(); ++r)
            for (std::size_t c = 0; c < series.cols(); ++c) out.at(n, r, c) *= phase[c];
    return out;
}

std::size_t foldover_shift_rows(double shift_fraction, std::size_t rows) {
    if (!(shift_fraction > 0.0 && shift_fraction < 0.5))
        throw ValidationError("fold-over shift fraction must lie in (0, 0.5)");
    return static_cast<std::size_t>(std::lround(shift_fraction * static_cast<double>(rows)));
}

EchoSeries apply_foldover(const EchoSeries& series, double shift_fraction) {
    const std::size_t rows = series.rows();
    const std::size_t shift = foldover_shift_rows(shift_fraction, rows);
    EchoSeries out = series;
    for (std::size_t n = 0; n < series.echo_count(); ++n)
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t src = (r + shift) % rows;
            for (std::size_t c = 0; c < series.cols(); ++c) out.at(n, r, c) += series.at(n, src, c);
        }
    return out;
}

}  // namespace wfsep
