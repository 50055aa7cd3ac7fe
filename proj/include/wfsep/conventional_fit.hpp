#pragma once

#include <span>
#include <string>
#include <vector>

#include "wfsep/types.hpp"

namespace wfsep {

/// Inclusive arithmetic grid min, min + step, ... up to max.
struct GridRange {
    double min;
    double max;
    double step;

    std::vector<double> values() const;
    void validate(const char* name) const;
};

struct FitOptions {
    GridRange offres{-416.7, 416.7, 2.0};  // Hz
    GridRange r2star{0.0, 300.0, 10.0};    // 1/s
    int refinement_iterations = 25;
    // Weight of the squared label difference (Hz^2) against the data term.
    // The data term is residual^2 divided by the mean signal energy of the
    // masked pixels, so it is dimensionless and O(1) per pixel.
    double smoothness_lambda = 0.05;
    int icm_sweeps = 10;
    // Pixels whose mean echo magnitude is below this are left out (a.u.).
    double signal_threshold = 0.02;

    void validate() const;
};

struct AmplitudeFit {
    cdouble water;
    cdouble fat;
    double residual;  // || s - A rho ||_2
};

/// Linear least-squares water/fat amplitudes for fixed (offres, r2star).
/// Throws DegenerateFitError when the two-column design is rank deficient.
AmplitudeFit varpro_solve(std::span<const cdouble> signal, double offres, double r2star,
                          const AcquisitionProtocol& protocol);

/// Precomputed VARPRO projections for one protocol and grid pair.
/// cost(offres) = min over the r2star grid of the squared VARPRO residual.
class FieldmapCost {
public:
    FieldmapCost(const AcquisitionProtocol& protocol, const FitOptions& options);

    const std::vector<double>& offres_labels() const noexcept { return offres_; }
    const std::vector<double>& r2star_grid() const noexcept { return r2_; }

    /// Cost over the offres grid; out.size() must equal the label count.
    void evaluate(std::span<const cdouble> signal, std::span<double> out) const;
    std::vector<double> evaluate(std::span<const cdouble> signal) const;

    /// Cost at an arbitrary offres; also reports the best r2star grid value.
    double at(std::span<const cdouble> signal, double offres, double* best_r2star = nullptr) const;

private:
    struct Projection {
        std::vector<double> water_weight;   // w_n
        std::vector<cdouble> fat_weight;    // w_n conj(c_n)
        double h11, h22;                    // inverse Gram entries
        cdouble h12;
    };
    double residual_sq(std::span<const cdouble> demodulated, const Projection& proj, double energy) const;

    AcquisitionProtocol protocol_;
    std::vector<double> offres_;
    std::vector<double> r2_;
    std::vector<Projection> proj_;
    std::vector<cdouble> demod_;  // exp(-j 2 pi f TE_n), label-major
    std::vector<double> stacked_; // (4K x 2N) row-major real projection weights
};

std::vector<double> fieldmap_cost(std::span<const cdouble> signal, const AcquisitionProtocol& protocol,
                                  const FitOptions& options);

/// Data-term volume laid out pixel-major: cost[(r * W + c) * G + label].
struct CostVolume {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t labels = 0;
    std::vector<double> cost;

    double& at(std::size_t pixel, std::size_t label) { return cost[pixel * labels + label]; }
    double at(std::size_t pixel, std::size_t label) const { return cost[pixel * labels + label]; }
};

struct IcmReport {
    int sweeps = 0;              // forward + reverse passes performed
    std::size_t last_changes = 0;
    double initial_energy = 0.0;
    double final_energy = 0.0;
};

/// Labels minimising sum_p cost(p, l_p) + lambda sum_{p~q} (f_{l_p} - f_{l_q})^2 over
/// 4-connected masked neighbours, by iterated conditional modes: start from each
/// pixel's own argmin, then alternate raster and reverse-raster passes until no
/// label changes or icm_sweeps passes pairs are done. Ties go to the smaller |offres|.
std::vector<std::size_t> icm_labels(const CostVolume& volume, const Mask& mask,
                                    std::span<const double> offres_labels, double lambda, int sweeps,
                                    IcmReport* report = nullptr);

/// Off-resonance map (Hz) from icm_labels; unmasked pixels are 0.
RealImage regularize_fieldmap(const CostVolume& volume, const Mask& mask,
                              std::span<const double> offres_labels, const FitOptions& options,
                              IcmReport* report = nullptr);

double labeling_energy(const CostVolume& volume, const Mask& mask, std::span<const double> offres_labels,
                       std::span<const std::size_t> labels, double lambda);

struct PixelFit {
    double water = 0.0;
    double fat = 0.0;
    double r2star = 0.0;
    double offres = 0.0;
    double residual = 0.0;
};

/// Coordinate descent: golden-section on offres within +-(grid step) of the current
/// value, then golden-section on r2star over its grid bounds, repeated.
PixelFit refine_pixel(std::span<const cdouble> signal, double offres_init, const AcquisitionProtocol& protocol,
                      const FitOptions& options);

struct FitLog {
    std::string route = "full";
    std::size_t masked_pixels = 0;
    IcmReport icm;
    double mean_residual = 0.0;
    double max_residual = 0.0;
};

Mask signal_mask(const EchoSeries& series, double threshold);

/// mask -> field-map cost -> ICM -> per-pixel refinement.
ParameterMaps separate(const EchoSeries& series, const FitOptions& options, FitLog* log = nullptr);

/// Fits the even- and odd-index echo subsets separately and averages the maps.
/// Each subset searches offres within its own aliasing half-period.
ParameterMaps separate_even_odd(const EchoSeries& series, const FitOptions& options,
                                std::vector<FitLog>* logs = nullptr);

}  // namespace wfsep
