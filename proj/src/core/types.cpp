#include "wfsep/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace wfsep {

std::size_t count(const Mask& mask) {
    return static_cast<std::size_t>(
        std::count_if(mask.values().begin(), mask.values().end(), [](auto v) { return v != 0; }));
}

FatSpectrum::FatSpectrum(std::vector<FatPeak> peaks) : peaks_(std::move(peaks)) {
    if (peaks_.empty()) throw ValidationError("fat spectrum needs at least one peak");
    double total = 0.0;
    for (const auto& p : peaks_) {
        if (!(p.amplitude > 0.0) || !std::isfinite(p.amplitude) || !std::isfinite(p.shift_ppm))
            throw ValidationError("fat peak amplitudes must be positive and finite");
        total += p.amplitude;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ValidationError("fat peak amplitudes must sum to 1, got " + std::to_string(total));
}

FatSpectrum FatSpectrum::liver_default() {
    const double shifts[] = {-3.80, -3.40, -2.60, -1.94, -0.39, 0.60};
    const double amps[] = {0.087, 0.693, 0.128, 0.004, 0.039, 0.048};
    const double total = std::accumulate(std::begin(amps), std::end(amps), 0.0);
    std::vector<FatPeak> peaks;
    for (std::size_t i = 0; i < 6; ++i) peaks.push_back({amps[i] / total, shifts[i]});
    return FatSpectrum(std::move(peaks));
}

FatSpectrum FatSpectrum::single_peak(double shift_ppm) { return FatSpectrum({{1.0, shift_ppm}}); }

AcquisitionProtocol::AcquisitionProtocol(std::vector<double> echo_times_s, double field_strength_t,
                                         FatSpectrum fat_spectrum, bool bipolar)
    : echo_times_(std::move(echo_times_s)),
      field_strength_(field_strength_t),
      larmor_hz_(kGyromagneticHzPerTesla * field_strength_t),
      fat_spectrum_(std::move(fat_spectrum)),
      bipolar_(bipolar) {
    if (echo_times_.empty()) throw ValidationError("protocol needs at least one echo");
    for (std::size_t n = 0; n < echo_times_.size(); ++n) {
        if (!(echo_times_[n] > 0.0) || !std::isfinite(echo_times_[n]))
            throw ValidationError("echo times must be positive and finite");
        if (n > 0 && !(echo_times_[n] > echo_times_[n - 1]))
            throw ValidationError("echo times must be strictly increasing");
    }
    if (!(larmor_hz_ > 0.0) || !std::isfinite(larmor_hz_))
        throw ValidationError("field strength must be positive");

    const auto freqs = fat_frequencies_hz();
    fat_modulation_.resize(echo_times_.size());
    for (std::size_t n = 0; n < echo_times_.size(); ++n) {
        cdouble sum{0.0, 0.0};
        for (std::size_t p = 0; p < freqs.size(); ++p)
            sum += fat_spectrum_.peaks()[p].amplitude *
                   std::polar(1.0, kTwoPi * freqs[p] * echo_times_[n]);
        fat_modulation_[n] = sum;
    }
}

AcquisitionProtocol AcquisitionProtocol::standard() {
    std::vector<double> te(12);
    // Integer numerator over 1e4 gives the correctly rounded literal (2.4e-3, 3.6e-3, ...).
    for (int n = 0; n < 12; ++n) te[static_cast<std::size_t>(n)] = (24.0 + 12.0 * n) / 10000.0;
    return AcquisitionProtocol(std::move(te), 1.5);
}

std::vector<double> AcquisitionProtocol::fat_frequencies_hz() const {
    std::vector<double> f;
    f.reserve(fat_spectrum_.size());
    for (const auto& p : fat_spectrum_.peaks()) f.push_back(p.shift_ppm * 1e-6 * larmor_hz_);
    return f;
}

std::optional<double> AcquisitionProtocol::uniform_spacing() const {
    if (echo_times_.size() < 2) return std::nullopt;
    const double d = echo_times_[1] - echo_times_[0];
    for (std::size_t n = 2; n < echo_times_.size(); ++n)
        if (std::abs((echo_times_[n] - echo_times_[n - 1]) - d) > 1e-12) return std::nullopt;
    return d;
}

AcquisitionProtocol AcquisitionProtocol::subset(std::span<const std::size_t> echo_indices) const {
    std::vector<double> te;
    for (std::size_t i : echo_indices) {
        if (i >= echo_times_.size()) throw ValidationError("echo index out of range");
        te.push_back(echo_times_[i]);
    }
    return AcquisitionProtocol(std::move(te), field_strength_, fat_spectrum_, false);
}

bool AcquisitionProtocol::operator==(const AcquisitionProtocol& other) const {
    if (echo_times_ != other.echo_times_ || field_strength_ != other.field_strength_ ||
        bipolar_ != other.bipolar_ || fat_spectrum_.size() != other.fat_spectrum_.size())
        return false;
    for (std::size_t p = 0; p < fat_spectrum_.size(); ++p) {
        const auto& a = fat_spectrum_.peaks()[p];
        const auto& b = other.fat_spectrum_.peaks()[p];
        if (a.amplitude != b.amplitude || a.shift_ppm != b.shift_ppm) return false;
    }
    return true;
}

ParameterMaps::ParameterMaps(std::size_t rows, std::size_t cols)
    : water(rows, cols), fat(rows, cols), r2star(rows, cols), offres(rows, cols), mask(rows, cols) {}

void ParameterMaps::validate() const {
    for (const RealImage* img : {&fat, &r2star, &offres})
        if (!img->same_shape(water)) throw ValidationError("parameter maps differ in shape");
    if (mask.rows() != water.rows() || mask.cols() != water.cols())
        throw ValidationError("mask shape differs from parameter maps");
    for (std::size_t i = 0; i < water.size(); ++i) {
        for (const RealImage* img : {&water, &fat, &r2star}) {
            const double v = (*img)[i];
            if (!std::isfinite(v) || v < 0.0)
                throw ValidationError("water, fat and r2star must be finite and non-negative");
        }
        if (!std::isfinite(offres[i])) throw ValidationError("offres must be finite");
    }
}

EchoSeries::EchoSeries(AcquisitionProtocol protocol, std::size_t rows, std::size_t cols)
    : protocol_(std::move(protocol)),
      rows_(rows),
      cols_(cols),
      data_(protocol_.echo_count() * rows * cols, cdouble{0.0, 0.0}) {}

EchoSeries::EchoSeries(AcquisitionProtocol protocol, std::size_t rows, std::size_t cols,
                       std::vector<cdouble> data)
    : protocol_(std::move(protocol)), rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != protocol_.echo_count() * rows_ * cols_)
        throw ValidationError("echo series data size does not match N x H x W");
}

void EchoSeries::pixel_signal(std::size_t pixel, std::span<cdouble> out) const {
    const std::size_t plane = rows_ * cols_;
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = data_[n * plane + pixel];
}

std::vector<cdouble> EchoSeries::pixel_signal(std::size_t pixel) const {
    std::vector<cdouble> out(echo_count());
    pixel_signal(pixel, out);
    return out;
}

EchoSeries EchoSeries::subset(std::span<const std::size_t> echo_indices) const {
    EchoSeries out(protocol_.subset(echo_indices), rows_, cols_);
    const std::size_t plane = rows_ * cols_;
    for (std::size_t k = 0; k < echo_indices.size(); ++k)
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(echo_indices[k] * plane), plane,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(k * plane));
    return out;
}

void EchoSeries::validate() const {
    if (data_.size() != protocol_.echo_count() * rows_ * cols_)
        throw ValidationError("echo series data size does not match N x H x W");
    for (const auto& v : data_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ValidationError("echo series contains non-finite values");
}

}  // namespace wfsep
