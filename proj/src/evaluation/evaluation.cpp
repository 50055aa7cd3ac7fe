#include "wfsep/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace wfsep {

RealImage quantity_map(const ParameterMaps& maps, const std::string& quantity) {
    if (quantity == "pdff") return pdff_map(maps);
    if (quantity == "water") return maps.water;
    if (quantity == "fat") return maps.fat;
    if (quantity == "r2star") return maps.r2star;
    if (quantity == "offres") return maps.offres;
    throw ValidationError("unknown quantity '" + quantity + "'");
}

const QuantityResult& EvaluationReport::quantity(const std::string& name) const {
    for (const auto& q : quantities)
        if (q.quantity == name) return q;
    throw ValidationError("report has no quantity '" + name + "'");
}

double snr_gain_percent(double pred, double ref) {
    if (pred == 0.0) throw ZeroVarianceError("SNR gain undefined for zero SNR");
    return 100.0 * (pred - ref) / pred;
}

namespace {

const Roi* find_roi(const std::vector<Roi>& rois, const std::string& label) {
    for (const auto& r : rois)
        if (r.label == label && count(r.mask) > 0) return &r;
    return nullptr;
}

std::optional<double> case_snr(const RealImage& water, const Roi* sig, const Roi* bg) {
    if (!sig || !bg) return std::nullopt;
    try {
        return snr(water, sig->mask, bg->mask);
    } catch (const ZeroVarianceError&) {
        return std::nullopt;
    }
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& v) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& x : v)
        if (x) {
            s += *x;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
}

}  // namespace

EvaluationReport compare_methods(std::span<const EvaluationCase> cases, const CompareOptions& options) {
    EvaluationReport rep;
    rep.mode = options.mode;
    rep.pred_name = options.pred_name;
    rep.ref_name = options.ref_name;
    rep.cases = cases.size();

    for (const auto& q : kQuantities) {
        QuantityResult qr;
        qr.quantity = q;
        for (std::size_t k = 0; k < cases.size(); ++k) {
            const auto& c = cases[k];
            if (!c.pred.water.same_shape(c.ref.water)) throw ValidationError("compared maps differ in shape");
            const RealImage pm = quantity_map(c.pred, q), rm = quantity_map(c.ref, q);
            for (const auto& roi : c.rois) {
                if (roi.label == options.background_roi || count(roi.mask) == 0) continue;
                qr.points.push_back({k, roi.label, roi_stats(rm, roi.mask).mean, roi_stats(pm, roi.mask).mean});
            }
        }
        std::vector<double> x, y;
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
        for (const auto& p : qr.points) {
            x.push_back(p.ref);
            y.push_back(p.pred);
            groups[p.roi_label].first.push_back(p.ref);
            groups[p.roi_label].second.push_back(p.pred);
        }
        if (x.size() < 3) {
            rep.warnings.push_back(q + ": fewer than 3 ROIs, correlation skipped");
        } else {
            try {
                qr.pooled = pearson(x, y);
            } catch (const ZeroVarianceError&) {
                rep.warnings.push_back(q + ": constant ROI means, correlation skipped");
            }
        }
        for (const auto& [label, xy] : groups) {
            if (xy.first.size() < 3) continue;
            try {
                qr.by_label[label] = pearson(xy.first, xy.second);
            } catch (const ZeroVarianceError&) {
                rep.warnings.push_back(q + "/" + label + ": constant ROI means, correlation skipped");
            }
        }
        if (x.size() >= 2) {
            try {
                qr.ttest = paired_ttest(y, x);
            } catch (const ZeroVarianceError&) {
                rep.warnings.push_back(q + ": constant ROI differences, t-test skipped");
            }
        }
        rep.quantities.push_back(std::move(qr));
    }

    for (const auto& c : cases) {
        const Roi* sig = find_roi(c.rois, options.signal_roi);
        const Roi* bg = find_roi(c.rois, options.background_roi);
        rep.snr.pred.push_back(case_snr(c.pred_snr_water ? *c.pred_snr_water : c.pred.water, sig, bg));
        rep.snr.ref.push_back(case_snr(c.ref_snr_water ? *c.ref_snr_water : c.ref.water, sig, bg));
    }
    rep.snr.pred_mean = mean_of(rep.snr.pred);
    rep.snr.ref_mean = mean_of(rep.snr.ref);
    if (!rep.snr.pred_mean) rep.warnings.push_back(options.pred_name + ": SNR undefined (no signal ROI or flat background)");
    if (!rep.snr.ref_mean) rep.warnings.push_back(options.ref_name + ": SNR undefined (no signal ROI or flat background)");
    std::vector<double> a, b;
    for (std::size_t k = 0; k < cases.size(); ++k)
        if (rep.snr.pred[k] && rep.snr.ref[k]) {
            a.push_back(*rep.snr.pred[k]);
            b.push_back(*rep.snr.ref[k]);
        }
    if (a.size() >= 2) {
        try {
            rep.snr.ttest = paired_ttest(a, b);
        } catch (const ZeroVarianceError&) {
        }
    }
    return rep;
}

EvaluationReport compare_methods(const ParameterMaps& pred, const ParameterMaps& ref, const std::vector<Roi>& rois,
                                 const CompareOptions& options) {
    const EvaluationCase c{pred, ref, rois, std::nullopt, std::nullopt};
    return compare_methods(std::span<const EvaluationCase>(&c, 1), options);
}

namespace {

nlohmann::json corr_json(const CorrelationResult& c) {
    return {{"n", c.n}, {"r", c.r}, {"r_squared", c.r_squared}, {"p_value", c.p_value},
            {"slope", c.slope}, {"intercept", c.intercept}};
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::string report_json(const EvaluationReport& report) {
    nlohmann::ordered_json j;
    j["mode"] = report.mode;
    j["pred"] = report.pred_name;
    j["ref"] = report.ref_name;
    j["cases"] = report.cases;
    nlohmann::ordered_json qs = nlohmann::ordered_json::object();
    for (const auto& q : report.quantities) {
        nlohmann::ordered_json e;
        e["rois"] = q.points.size();
        e["pooled"] = q.pooled ? nlohmann::ordered_json(corr_json(*q.pooled)) : nlohmann::ordered_json(nullptr);
        nlohmann::ordered_json by = nlohmann::ordered_json::object();
        for (const auto& [label, c] : q.by_label) by[label] = corr_json(c);
        e["by_label"] = by;
        if (q.ttest)
            e["paired_ttest"] = {{"t", q.ttest->t}, {"p_value", q.ttest->p_value}, {"df", q.ttest->df}};
        else
            e["paired_ttest"] = nullptr;
        qs[q.quantity] = e;
    }
    j["correlations"] = qs;
    nlohmann::ordered_json s;
    s["signal_roi_map"] = "water";
    s["pred_mean"] = opt_json(report.snr.pred_mean);
    s["ref_mean"] = opt_json(report.snr.ref_mean);
    if (report.snr.pred_mean && report.snr.ref_mean && *report.snr.pred_mean != 0.0) {
        s["gain_percent_of_pred"] = snr_gain_percent(*report.snr.pred_mean, *report.snr.ref_mean);
        s["ratio_pred_over_ref"] = *report.snr.pred_mean / *report.snr.ref_mean;
    }
    s["paired_ttest"] = report.snr.ttest ? nlohmann::ordered_json{{"t", report.snr.ttest->t},
                                                                   {"p_value", report.snr.ttest->p_value},
                                                                   {"df", report.snr.ttest->df}}
                                         : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < report.snr.pred.size(); ++k)
        per.push_back({opt_json(report.snr.pred[k]), opt_json(report.snr.ref[k])});
    s["per_case_pred_ref"] = per;
    j["snr"] = s;
    j["warnings"] = report.warnings;
    return j.dump(2) + "\n";
}

void write_report_json(const EvaluationReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError(path, "cannot write report");
    f << report_json(report);
    if (!f) throw IoError(path, "failed writing report");
}

void write_report_csv(const EvaluationReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError(path, "cannot write report");
    f << std::setprecision(12) << "quantity,group,n,r,r_squared,p_value,slope,intercept\n";
    auto row = [&](const std::string& q, const std::string& g, const CorrelationResult& c) {
        f << q << ',' << g << ',' << c.n << ',' << c.r << ',' << c.r_squared << ',' << c.p_value << ',' << c.slope
          << ',' << c.intercept << '\n';
    };
    for (const auto& q : report.quantities) {
        if (q.pooled) row(q.quantity, "pooled", *q.pooled);
        for (const auto& [label, c] : q.by_label) row(q.quantity, label, c);
    }
    if (!f) throw IoError(path, "failed writing report");
}

void write_scatter_csv(const EvaluationReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError(path, "cannot write scatter data");
    f << std::setprecision(12) << "quantity,case,roi,ref,pred\n";
    for (const auto& q : report.quantities)
        for (const auto& p : q.points)
            f << q.quantity << ',' << p.case_index << ',' << p.roi_label << ',' << p.ref << ',' << p.pred << '\n';
    if (!f) throw IoError(path, "failed writing scatter data");
}

}  // namespace wfsep
