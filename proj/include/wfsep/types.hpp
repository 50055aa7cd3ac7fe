#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wfsep/error.hpp"

namespace wfsep {

using cdouble = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
// Proton gyromagnetic ratio divided by 2*pi.
inline constexpr double kGyromagneticHzPerTesla = 42.577e6;

/// Dense row-major H x W image.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    bool same_shape(const Grid& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool operator==(const Grid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealImage = Grid<double>;
using Mask = Grid<std::uint8_t>;

std::size_t count(const Mask& mask);

struct FatPeak {
    double amplitude;  // relative, unitless
    double shift_ppm;  // relative to water
};

/// Multi-peak fat model. Amplitudes are positive and sum to one.
class FatSpectrum {
public:
    explicit FatSpectrum(std::vector<FatPeak> peaks);

    /// Six-peak liver fat model used when nothing else is configured.
    static FatSpectrum liver_default();
    static FatSpectrum single_peak(double shift_ppm);

    const std::vector<FatPeak>& peaks() const noexcept { return peaks_; }
    std::size_t size() const noexcept { return peaks_.size(); }

private:
    std::vector<FatPeak> peaks_;
};

class AcquisitionProtocol {
public:
    AcquisitionProtocol(std::vector<double> echo_times_s, double field_strength_t,
                        FatSpectrum fat_spectrum = FatSpectrum::liver_default(),
                        bool bipolar = false);

    /// 12 echoes at 2.4 ms + 1.2 ms * n, 1.5 T, liver fat spectrum.
    static AcquisitionProtocol standard();

    std::size_t echo_count() const noexcept { return echo_times_.size(); }
    const std::vector<double>& echo_times() const noexcept { return echo_times_; }
    double field_strength() const noexcept { return field_strength_; }
    double larmor_hz() const noexcept { return larmor_hz_; }
    const FatSpectrum& fat_spectrum() const noexcept { return fat_spectrum_; }
    bool bipolar() const noexcept { return bipolar_; }

    /// Peak frequencies relative to water in Hz.
    std::vector<double> fat_frequencies_hz() const;

    /// sum_p alpha_p exp(j 2 pi f_p TE_n) for each echo.
    const std::vector<cdouble>& fat_modulation() const noexcept { return fat_modulation_; }

    /// Echo spacing when all gaps agree to within 1e-12 s.
    std::optional<double> uniform_spacing() const;

    /// Protocol restricted to the given echo indices (strictly increasing).
    AcquisitionProtocol subset(std::span<const std::size_t> echo_indices) const;

    bool operator==(const AcquisitionProtocol& other) const;

private:
    std::vector<double> echo_times_;
    double field_strength_;
    double larmor_hz_;
    FatSpectrum fat_spectrum_;
    bool bipolar_;
    std::vector<cdouble> fat_modulation_;
};

/// Per-pixel water, fat, R2*, off-resonance and object support.
struct ParameterMaps {
    RealImage water;   // a.u.
    RealImage fat;     // a.u.
    RealImage r2star;  // 1/s
    RealImage offres;  // Hz
    Mask mask;

    ParameterMaps() = default;
    ParameterMaps(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return water.rows(); }
    std::size_t cols() const noexcept { return water.cols(); }

    /// Throws ValidationError on shape mismatch, negative or non-finite values.
    void validate() const;
};

/// Labelled region of interest.
struct Roi {
    Mask mask;
    std::string label;
};

/// N x H x W complex stack with the protocol that produced it.
class EchoSeries {
public:
    EchoSeries(AcquisitionProtocol protocol, std::size_t rows, std::size_t cols);
    EchoSeries(AcquisitionProtocol protocol, std::size_t rows, std::size_t cols,
               std::vector<cdouble> data);

    const AcquisitionProtocol& protocol() const noexcept { return protocol_; }
    std::size_t echo_count() const noexcept { return protocol_.echo_count(); }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t pixel_count() const noexcept { return rows_ * cols_; }

    cdouble& at(std::size_t echo, std::size_t r, std::size_t c) {
        return data_[(echo * rows_ + r) * cols_ + c];
    }
    const cdouble& at(std::size_t echo, std::size_t r, std::size_t c) const {
        return data_[(echo * rows_ + r) * cols_ + c];
    }

    std::span<cdouble> data() noexcept { return data_; }
    std::span<const cdouble> data() const noexcept { return data_; }

    /// Copies the echo train of one pixel (flat index r*W + c) into out.
    void pixel_signal(std::size_t pixel, std::span<cdouble> out) const;
    std::vector<cdouble> pixel_signal(std::size_t pixel) const;

    /// Series restricted to a subset of echoes.
    EchoSeries subset(std::span<const std::size_t> echo_indices) const;

    void validate() const;

private:
    AcquisitionProtocol protocol_;
    std::size_t rows_;
    std::size_t cols_;
    std::vector<cdouble> data_;
};

}  // namespace wfsep
