#include "wfsep/statistics.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>

namespace wfsep {

RealImage pdff_map(const ParameterMaps& maps) {
    if (!maps.water.same_shape(maps.fat)) throw ValidationError("water and fat maps differ in shape");
    RealImage out(maps.rows(), maps.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double w = maps.water[i], f = maps.fat[i];
        if (w < 0.0 || f < 0.0) throw ValidationError("negative water or fat amplitude");
        const double s = w + f;
        out[i] = s > 0.0 ? std::clamp(f / s, 0.0, 1.0) : 0.0;
    }
    return out;
}

RoiSummary roi_stats(const RealImage& image, const Mask& roi) {
    if (!image.same_shape(RealImage(roi.rows(), roi.cols()))) throw ValidationError("ROI and image differ in shape");
    RoiSummary s;
    for (std::size_t i = 0; i < image.size(); ++i)
        if (roi[i]) {
            s.mean += image[i];
            ++s.n;
        }
    if (s.n == 0) throw InsufficientDataError("empty ROI");
    s.mean /= static_cast<double>(s.n);
    double ss = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i)
        if (roi[i]) ss += (image[i] - s.mean) * (image[i] - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n));
    return s;
}

double student_t_two_tailed(double t, double df) {
    if (!(df > 0.0)) throw ValidationError("degrees of freedom must be positive");
    if (std::isinf(t)) return 0.0;
    if (!std::isfinite(t)) throw NumericError("t statistic is not finite");
    // P(|T| > t) = I_{df / (df + t^2)}(df / 2, 1 / 2)
    return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("pearson inputs differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw InsufficientDataError("pearson needs at least three pairs");
    const double nd = static_cast<double>(n);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= nd;
    my /= nd;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ZeroVarianceError("pearson input has zero variance");

    CorrelationResult c;
    c.n = n;
    c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    c.r_squared = c.r * c.r;
    c.slope = sxy / sxx;
    c.intercept = my - c.slope * mx;
    if (std::abs(c.r) >= 1.0) {
        c.p_value = 0.0;
    } else {
        const double df = nd - 2.0;
        c.p_value = student_t_two_tailed(c.r * std::sqrt(df / (1.0 - c.r_squared)), df);
    }
    return c;
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("paired t-test inputs differ in length");
    const std::size_t n = a.size();
    if (n < 2) throw InsufficientDataError("paired t-test needs at least two pairs");
    const double nd = static_cast<double>(n);
    double md = 0.0;
    for (std::size_t i = 0; i < n; ++i) md += a[i] - b[i];
    md /= nd;
    double ss = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        ss += (d - md) * (d - md);
        all_zero = all_zero && d == 0.0;
    }
    TTestResult r;
    r.df = nd - 1.0;
    if (all_zero) return r;
    if (ss == 0.0) throw ZeroVarianceError("paired differences have zero variance");
    const double sd = std::sqrt(ss / (nd - 1.0));  // sample std of the differences
    r.t = md / (sd / std::sqrt(nd));
    r.p_value = student_t_two_tailed(r.t, r.df);
    return r;
}

double snr(const RealImage& image, const Mask& signal_roi, const Mask& background_roi) {
    const RoiSummary s = roi_stats(image, signal_roi);
    const RoiSummary b = roi_stats(image, background_roi);
    if (b.std == 0.0) throw ZeroVarianceError("background has zero standard deviation");
    return s.mean / b.std;
}

}  // namespace wfsep
