#pragma once

#include <span>

#include "wfsep/types.hpp"

namespace wfsep {

/// Fat fraction fat / (water + fat), 0 where both vanish, clamped to [0, 1].
RealImage pdff_map(const ParameterMaps& maps);

struct RoiSummary {
    double mean = 0.0;
    double std = 0.0;  // population convention
    std::size_t n = 0;
};

RoiSummary roi_stats(const RealImage& image, const Mask& roi);

struct CorrelationResult {
    double r = 0.0;
    double r_squared = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    double slope = 0.0;
    double intercept = 0.0;
};

/// Two-tailed p-value of Student's t with df degrees of freedom.
double student_t_two_tailed(double t, double df);

/// Product-moment correlation with least-squares line y = slope x + intercept.
/// Throws InsufficientDataError for n < 3 and ZeroVarianceError for constant input.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

struct TTestResult {
    double t = 0.0;
    double p_value = 1.0;
    double df = 0.0;
};

/// Paired two-tailed t-test on a - b. Identical inputs give t = 0, p = 1.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

/// Mean over signal_roi divided by the population std over background_roi.
double snr(const RealImage& image, const Mask& signal_roi, const Mask& background_roi);

}  // namespace wfsep
