#include <algorithm>
#include <cmath>
#include <limits>

#include "wfsep/conventional_fit.hpp"

namespace wfsep {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
constexpr double kConverged = 1e-6;

template <class F>
double golden_section(F&& f, double lo, double hi, double tol) {
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

double residual_sq(std::span<const cdouble> s, double offres, double r2, const AcquisitionProtocol& protocol) {
    const double r = varpro_solve(s, offres, r2, protocol).residual;
    return r * r;
}

ParameterMaps separate_masked(const EchoSeries& series, const Mask& mask, const FitOptions& options,
                              FitLog* log) {
    const std::size_t H = series.rows(), W = series.cols(), N = series.echo_count();
    const std::size_t masked = count(mask);
    if (masked == 0) throw ValidationError("no pixel above the signal threshold");

    const FieldmapCost cost(series.protocol(), options);
    const auto& labels = cost.offres_labels();

    CostVolume volume{H, W, labels.size(), std::vector<double>(H * W * labels.size(), 0.0)};
    std::vector<cdouble> s(N);
    double mean_energy = 0.0;
    for (std::size_t p = 0; p < H * W; ++p) {
        if (!mask[p]) continue;
        series.pixel_signal(p, s);
        for (const auto& v : s) mean_energy += std::norm(v);
        cost.evaluate(s, std::span<double>(volume.cost.data() + p * labels.size(), labels.size()));
    }
    mean_energy /= static_cast<double>(masked);
    if (mean_energy > 0.0)
        for (auto& c : volume.cost) c /= mean_energy;

    FitLog local;
    const RealImage offres0 = regularize_fieldmap(volume, mask, labels, options, &local.icm);

    ParameterMaps maps(H, W);
    maps.mask = mask;
    double sum_res = 0.0, max_res = 0.0;
    for (std::size_t p = 0; p < H * W; ++p) {
        if (!mask[p]) continue;
        series.pixel_signal(p, s);
        const PixelFit fit = refine_pixel(s, offres0[p], series.protocol(), options);
        maps.water[p] = fit.water;
        maps.fat[p] = fit.fat;
        maps.r2star[p] = fit.r2star;
        maps.offres[p] = fit.offres;
        sum_res += fit.residual;
        max_res = std::max(max_res, fit.residual);
    }
    local.masked_pixels = masked;
    local.mean_residual = sum_res / static_cast<double>(masked);
    local.max_residual = max_res;
    if (log) *log = local;
    return maps;
}

}  // namespace

PixelFit refine_pixel(std::span<const cdouble> signal, double offres_init, const AcquisitionProtocol& protocol,
                      const FitOptions& options) {
    options.validate();
    if (signal.size() != protocol.echo_count()) throw ValidationError("signal length differs from echo count");
    if (!std::isfinite(offres_init)) throw ValidationError("initial off-resonance must be finite");

    double energy = 0.0;
    for (const auto& v : signal) energy += std::norm(v);
    if (energy == 0.0) return PixelFit{0.0, 0.0, 0.0, offres_init, 0.0};

    const double r2_lo = options.r2star.min, r2_hi = options.r2star.max;
    const double bracket = options.offres.step;

    double f = offres_init;
    double r2 = r2_lo;
    double best = std::numeric_limits<double>::infinity();
    for (double g : options.r2star.values()) {
        const double c = residual_sq(signal, f, g, protocol);
        if (c < best) {
            best = c;
            r2 = g;
        }
    }

    const double f_tol = 1e-7 * std::max(1.0, bracket);
    const double r2_tol = 1e-7 * std::max(1.0, r2_hi - r2_lo);
    for (int it = 0; it < options.refinement_iterations; ++it) {
        const double f_new = golden_section([&](double x) { return residual_sq(signal, x, r2, protocol); },
                                            f - bracket, f + bracket, f_tol);
        const double r2_new = golden_section([&](double x) { return residual_sq(signal, f_new, x, protocol); },
                                             r2_lo, r2_hi, r2_tol);
        const bool done = std::abs(f_new - f) < kConverged && std::abs(r2_new - r2) < kConverged;
        f = f_new;
        r2 = r2_new;
        if (done) break;
    }
    r2 = std::clamp(r2, 0.0, r2_hi);

    const AmplitudeFit amp = varpro_solve(signal, f, r2, protocol);
    return PixelFit{std::abs(amp.water), std::abs(amp.fat), r2, f, amp.residual};
}

Mask signal_mask(const EchoSeries& series, double threshold) {
    Mask mask(series.rows(), series.cols());
    const std::size_t N = series.echo_count();
    std::vector<cdouble> s(N);
    for (std::size_t p = 0; p < series.pixel_count(); ++p) {
        series.pixel_signal(p, s);
        double m = 0.0;
        for (const auto& v : s) m += std::abs(v);
        m /= static_cast<double>(N);
        mask[p] = (m > 0.0 && m >= threshold) ? 1 : 0;
    }
    return mask;
}

ParameterMaps separate(const EchoSeries& series, const FitOptions& options, FitLog* log) {
    options.validate();
    series.validate();
    const Mask mask = signal_mask(series, options.signal_threshold);
    return separate_masked(series, mask, options, log);
}

ParameterMaps separate_even_odd(const EchoSeries& series, const FitOptions& options, std::vector<FitLog>* logs) {
    options.validate();
    series.validate();
    const std::size_t N = series.echo_count();
    if (N < 4) throw ValidationError("even/odd separation needs at least four echoes");

    std::vector<std::size_t> even, odd;
    for (std::size_t n = 0; n < N; ++n) (n % 2 == 0 ? even : odd).push_back(n);

    const Mask mask = signal_mask(series, options.signal_threshold);
    std::vector<ParameterMaps> parts;
    std::vector<FitLog> part_logs;
    for (const auto* idx : {&even, &odd}) {
        const EchoSeries sub = series.subset(*idx);
        FitOptions sub_opt = options;
        // Each subset has twice the echo spacing, so its field map aliases at
        // half the frequency; search only the unambiguous interval.
        if (const auto dte = sub.protocol().uniform_spacing()) {
            const double half = 1.0 / (2.0 * *dte);
            sub_opt.offres.min = std::max(sub_opt.offres.min, -half);
            sub_opt.offres.max = std::min(sub_opt.offres.max, half);
        }
        FitLog lg;
        parts.push_back(separate_masked(sub, mask, sub_opt, &lg));
        lg.route = idx == &even ? "even" : "odd";
        part_logs.push_back(lg);
    }

    ParameterMaps out(series.rows(), series.cols());
    out.mask = mask;
    for (std::size_t p = 0; p < mask.size(); ++p) {
        out.water[p] = 0.5 * (parts[0].water[p] + parts[1].water[p]);
        out.fat[p] = 0.5 * (parts[0].fat[p] + parts[1].fat[p]);
        out.r2star[p] = 0.5 * (parts[0].r2star[p] + parts[1].r2star[p]);
        out.offres[p] = 0.5 * (parts[0].offres[p] + parts[1].offres[p]);
    }
    if (logs) *logs = std::move(part_logs);
    return out;
}

}  // namespace wfsep
