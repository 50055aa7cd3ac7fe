#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wfsep/statistics.hpp"
#include "wfsep/types.hpp"

namespace wfsep {

/// Quantities compared between methods, in report order.
inline const std::vector<std::string> kQuantities = {"pdff", "water", "fat", "r2star", "offres"};

RealImage quantity_map(const ParameterMaps& maps, const std::string& quantity);

struct EvaluationCase {
    ParameterMaps pred;
    ParameterMaps ref;
    std::vector<Roi> rois;
    // Water maps used for SNR instead of pred/ref.water, e.g. an unmasked fit
    // whose background still carries noise.
    std::optional<RealImage> pred_snr_water;
    std::optional<RealImage> ref_snr_water;
};

struct ScatterPoint {
    std::size_t case_index = 0;
    std::string roi_label;
    double ref = 0.0;
    double pred = 0.0;
};

struct QuantityResult {
    std::string quantity;
    std::optional<CorrelationResult> pooled;
    std::map<std::string, CorrelationResult> by_label;
    std::optional<TTestResult> ttest;  // pred vs ref ROI means
    std::vector<ScatterPoint> points;
};

struct SnrSummary {
    std::vector<std::optional<double>> pred, ref;  // per case, water map
    std::optional<double> pred_mean, ref_mean;
    std::optional<TTestResult> ttest;
};

struct EvaluationReport {
    std::string mode;
    std::string pred_name = "pred";
    std::string ref_name = "ref";
    std::size_t cases = 0;
    std::vector<QuantityResult> quantities;
    SnrSummary snr;
    std::vector<std::string> warnings;

    const QuantityResult& quantity(const std::string& name) const;
};

struct CompareOptions {
    std::string mode;
    std::string pred_name = "pred";
    std::string ref_name = "ref";
    std::string signal_roi = "septum";
    std::string background_roi = "background";
};

/// ROI means of every non-background ROI are paired across methods and pooled
/// over all cases for each quantity; a per-label breakdown is added where a
/// label has enough ROIs. SNR uses the water map of each method.
EvaluationReport compare_methods(std::span<const EvaluationCase> cases, const CompareOptions& options = {});
EvaluationReport compare_methods(const ParameterMaps& pred, const ParameterMaps& ref, const std::vector<Roi>& rois,
                                 const CompareOptions& options = {});

/// Relative SNR difference as (pred - ref) / pred, in percent.
double snr_gain_percent(double pred, double ref);

std::string report_json(const EvaluationReport& report);
void write_report_json(const EvaluationReport& report, const std::string& path);
/// One row per (quantity, grouping): quantity,group,n,r,r_squared,p_value,slope,intercept.
void write_report_csv(const EvaluationReport& report, const std::string& path);
/// quantity,case,roi,ref,pred
void write_scatter_csv(const EvaluationReport& report, const std::string& path);

}  // namespace wfsep
