#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "wfsep/conventional_fit.hpp"

namespace wfsep {

namespace {

// Relative cost below which the closed-form projection loses too many digits
// to cancellation; such entries are recomputed from the explicit residual.
constexpr double kRecomputeBelow = 1e-8;

double energy_of(std::span<const cdouble> s) {
    double e = 0.0;
    for (const auto& v : s) e += std::norm(v);
    return e;
}

}  // namespace

FieldmapCost::FieldmapCost(const AcquisitionProtocol& protocol, const FitOptions& options)
    : protocol_(protocol), offres_(options.offres.values()), r2_(options.r2star.values()) {
    options.validate();
    const std::size_t n_echo = protocol_.echo_count();
    if (n_echo < 2) throw DegenerateFitError("water/fat fit needs at least two echoes");
    const auto& te = protocol_.echo_times();
    const auto& c = protocol_.fat_modulation();

    proj_.reserve(r2_.size());
    for (double r2 : r2_) {
        Projection p;
        p.water_weight.resize(n_echo);
        p.fat_weight.resize(n_echo);
        double g11 = 0.0, g22 = 0.0;
        cdouble g12{0.0, 0.0};
        for (std::size_t n = 0; n < n_echo; ++n) {
            const double w = std::exp(-r2 * te[n]);
            p.water_weight[n] = w;
            p.fat_weight[n] = w * std::conj(c[n]);
            g11 += w * w;
            g12 += w * w * c[n];
            g22 += w * w * std::norm(c[n]);
        }
        const double det = g11 * g22 - std::norm(g12);
        if (!(det > 1e-12 * g11 * g22)) throw DegenerateFitError("water/fat design matrix is rank deficient");
        p.h11 = g22 / det;
        p.h22 = g11 / det;
        p.h12 = -g12 / det;
        proj_.push_back(std::move(p));
    }

    demod_.resize(offres_.size() * n_echo);
    for (std::size_t g = 0; g < offres_.size(); ++g)
        for (std::size_t n = 0; n < n_echo; ++n) demod_[g * n_echo + n] = std::polar(1.0, -kTwoPi * offres_[g] * te[n]);
    // Real form of all r2star projections, rows grouped as
    //   [0,K) Re z1 = U Yre,  [K,2K) Im z1 = U Yim,
    //   [2K,3K) Re z2 = Vre Yre - Vim Yim,  [3K,4K) Im z2 = Vim Yre + Vre Yim.
    const std::size_t K = r2_.size(), E = n_echo;
    stacked_.assign(4 * K * 2 * E, 0.0);
    auto w = [&](std::size_t row, std::size_t col) -> double& { return stacked_[row * 2 * E + col]; };
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t n = 0; n < E; ++n) {
            const double u = proj_[k].water_weight[n];
            const cdouble v = proj_[k].fat_weight[n];
            w(k, n) = u;
            w(K + k, E + n) = u;
            w(2 * K + k, n) = v.real();
            w(2 * K + k, E + n) = -v.imag();
            w(3 * K + k, n) = v.imag();
            w(3 * K + k, E + n) = v.real();
        }
    }
}

double FieldmapCost::residual_sq(std::span<const cdouble> y, const Projection& p, double energy) const {
    cdouble z1{0.0, 0.0}, z2{0.0, 0.0};
    for (std::size_t n = 0; n < y.size(); ++n) {
        z1 += p.water_weight[n] * y[n];
        z2 += p.fat_weight[n] * y[n];
    }
    const double proj = p.h11 * std::norm(z1) + p.h22 * std::norm(z2) + 2.0 * std::real(std::conj(z1) * p.h12 * z2);
    return std::max(energy - proj, 0.0);
}

double FieldmapCost::at(std::span<const cdouble> signal, double offres, double* best_r2star) const {
    const std::size_t n_echo = protocol_.echo_count();
    if (signal.size() != n_echo) throw ValidationError("signal length differs from echo count");
    const auto& te = protocol_.echo_times();
    std::vector<cdouble> y(n_echo);
    for (std::size_t n = 0; n < n_echo; ++n) y[n] = signal[n] * std::polar(1.0, -kTwoPi * offres * te[n]);
    const double energy = energy_of(signal);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < proj_.size(); ++k) {
        const double v = residual_sq(y, proj_[k], energy);
        if (v < best) {
            best = v;
            best_k = k;
        }
    }
    if (best < kRecomputeBelow * energy) {
        const double r = varpro_solve(signal, offres, r2_[best_k], protocol_).residual;
        best = r * r;
    }
    if (best_r2star) *best_r2star = r2_[best_k];
    return best;
}

void FieldmapCost::evaluate(std::span<const cdouble> signal, std::span<double> out) const {
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const std::size_t n_echo = protocol_.echo_count();
    const std::size_t n_label = offres_.size();
    const std::size_t n_r2 = r2_.size();
    if (signal.size() != n_echo) throw ValidationError("signal length differs from echo count");
    if (out.size() != n_label) throw ValidationError("output length differs from label count");

    const double energy = energy_of(signal);
    if (energy == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }

    const Eigen::Map<const Mat> weights(stacked_.data(), static_cast<Eigen::Index>(4 * n_r2),
                                        static_cast<Eigen::Index>(2 * n_echo));
    thread_local Mat demod, z;
    demod.resize(static_cast<Eigen::Index>(2 * n_echo), static_cast<Eigen::Index>(n_label));
    for (std::size_t n = 0; n < n_echo; ++n) {
        const auto N = static_cast<Eigen::Index>(n), E = static_cast<Eigen::Index>(n_echo);
        for (std::size_t g = 0; g < n_label; ++g) {
            const cdouble y = signal[n] * demod_[g * n_echo + n];
            demod(N, static_cast<Eigen::Index>(g)) = y.real();
            demod(E + N, static_cast<Eigen::Index>(g)) = y.imag();
        }
    }
    z.noalias() = weights * demod;

    const auto R = static_cast<Eigen::Index>(n_r2);
    for (std::size_t g = 0; g < n_label; ++g) {
        const auto G = static_cast<Eigen::Index>(g);
        double best_proj = -std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < n_r2; ++k) {
            const auto K = static_cast<Eigen::Index>(k);
            const cdouble z1(z(K, G), z(R + K, G));
            const cdouble z2(z(2 * R + K, G), z(3 * R + K, G));
            const auto& p = proj_[k];
            const double proj =
                p.h11 * std::norm(z1) + p.h22 * std::norm(z2) + 2.0 * std::real(std::conj(z1) * p.h12 * z2);
            if (proj > best_proj) {
                best_proj = proj;
                best_k = k;
            }
        }
        double cost = std::max(energy - best_proj, 0.0);
        if (cost < kRecomputeBelow * energy) {
            const double r = varpro_solve(signal, offres_[g], r2_[best_k], protocol_).residual;
            cost = r * r;
        }
        out[g] = cost;
    }
}

std::vector<double> FieldmapCost::evaluate(std::span<const cdouble> signal) const {
    std::vector<double> out(offres_.size());
    evaluate(signal, out);
    return out;
}

std::vector<double> fieldmap_cost(std::span<const cdouble> signal, const AcquisitionProtocol& protocol,
                                  const FitOptions& options) {
    return FieldmapCost(protocol, options).evaluate(signal);
}

namespace {

bool better_label(double cost, std::size_t label, double best_cost, std::size_t best_label,
                  std::span<const double> offres) {
    if (cost < best_cost) return true;
    if (cost > best_cost) return false;
    const double a = std::abs(offres[label]), b = std::abs(offres[best_label]);
    if (a != b) return a < b;
    return label < best_label;
}

void check_volume(const CostVolume& volume, const Mask& mask, std::span<const double> offres) {
    if (volume.rows != mask.rows() || volume.cols != mask.cols())
        throw ValidationError("cost volume and mask differ in shape");
    if (volume.labels != offres.size()) throw ValidationError("cost volume label count differs from offres grid");
    if (volume.cost.size() != volume.rows * volume.cols * volume.labels)
        throw ValidationError("cost volume storage has the wrong size");
    if (volume.labels == 0) throw ValidationError("empty offres grid");
}

}  // namespace

double labeling_energy(const CostVolume& volume, const Mask& mask, std::span<const double> offres_labels,
                       std::span<const std::size_t> labels, double lambda) {
    check_volume(volume, mask, offres_labels);
    if (labels.size() != volume.rows * volume.cols) throw ValidationError("label map has the wrong size");
    double e = 0.0;
    const std::size_t W = volume.cols;
    for (std::size_t r = 0; r < volume.rows; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
            const std::size_t p = r * W + c;
            if (!mask[p]) continue;
            e += volume.at(p, labels[p]);
            const double f = offres_labels[labels[p]];
            if (c + 1 < W && mask[p + 1]) {
                const double d = f - offres_labels[labels[p + 1]];
                e += lambda * d * d;
            }
            if (r + 1 < volume.rows && mask[p + W]) {
                const double d = f - offres_labels[labels[p + W]];
                e += lambda * d * d;
            }
        }
    }
    return e;
}

std::vector<std::size_t> icm_labels(const CostVolume& volume, const Mask& mask,
                                    std::span<const double> offres_labels, double lambda, int sweeps,
                                    IcmReport* report) {
    check_volume(volume, mask, offres_labels);
    if (!(lambda >= 0.0)) throw ValidationError("smoothness lambda must be >= 0");
    if (count(mask) == 0) throw ValidationError("field-map regularisation needs a non-empty mask");

    const std::size_t H = volume.rows, W = volume.cols, G = volume.labels;
    std::vector<std::size_t> labels(H * W, 0);
    for (std::size_t p = 0; p < H * W; ++p) {
        if (!mask[p]) continue;
        std::size_t best = 0;
        for (std::size_t g = 1; g < G; ++g)
            if (better_label(volume.at(p, g), g, volume.at(p, best), best, offres_labels)) best = g;
        labels[p] = best;
    }

    IcmReport rep;
    rep.initial_energy = labeling_energy(volume, mask, offres_labels, labels, lambda);

    auto visit = [&](std::size_t r, std::size_t c) -> bool {
        const std::size_t p = r * W + c;
        if (!mask[p]) return false;
        double nb[4];
        int k = 0;
        if (r > 0 && mask[p - W]) nb[k++] = offres_labels[labels[p - W]];
        if (r + 1 < H && mask[p + W]) nb[k++] = offres_labels[labels[p + W]];
        if (c > 0 && mask[p - 1]) nb[k++] = offres_labels[labels[p - 1]];
        if (c + 1 < W && mask[p + 1]) nb[k++] = offres_labels[labels[p + 1]];
        std::size_t best = labels[p];
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < G; ++g) {
            double e = volume.at(p, g);
            for (int i = 0; i < k; ++i) {
                const double d = offres_labels[g] - nb[i];
                e += lambda * d * d;
            }
            if (g == 0 || better_label(e, g, best_cost, best, offres_labels)) {
                best_cost = e;
                best = g;
            }
        }
        // Keep the current label unless another one is strictly better.
        double cur = volume.at(p, labels[p]);
        for (int i = 0; i < k; ++i) {
            const double d = offres_labels[labels[p]] - nb[i];
            cur += lambda * d * d;
        }
        if (best != labels[p] && best_cost < cur) {
            labels[p] = best;
            return true;
        }
        return false;
    };

    for (int s = 0; s < sweeps; ++s) {
        std::size_t changes = 0;
        for (std::size_t r = 0; r < H; ++r)
            for (std::size_t c = 0; c < W; ++c) changes += visit(r, c);
        ++rep.sweeps;
        std::size_t back = 0;
        for (std::size_t r = H; r-- > 0;)
            for (std::size_t c = W; c-- > 0;) back += visit(r, c);
        ++rep.sweeps;
        rep.last_changes = back;
        if (changes == 0 && back == 0) break;
    }
    rep.final_energy = labeling_energy(volume, mask, offres_labels, labels, lambda);
    if (report) *report = rep;
    return labels;
}

RealImage regularize_fieldmap(const CostVolume& volume, const Mask& mask, std::span<const double> offres_labels,
                              const FitOptions& options, IcmReport* report) {
    const auto labels =
        icm_labels(volume, mask, offres_labels, options.smoothness_lambda, options.icm_sweeps, report);
    RealImage out(volume.rows, volume.cols);
    for (std::size_t p = 0; p < labels.size(); ++p) out[p] = mask[p] ? offres_labels[labels[p]] : 0.0;
    return out;
}

}  // namespace wfsep
