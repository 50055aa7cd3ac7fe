#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wfsep/conventional_fit.hpp"
#include "wfsep/dataset.hpp"
#include "wfsep/error.hpp"
#include "wfsep/evaluation.hpp"
#include "wfsep/nn/checkpoint.hpp"
#include "wfsep/nn/layers.hpp"
#include "wfsep/nn/train.hpp"
#include "wfsep/nn/unet.hpp"
#include "wfsep/pipeline.hpp"
#include "wfsep/raster.hpp"
#include "wfsep/rng.hpp"
#include "wfsep/signal_model.hpp"
#include "wfsep/statistics.hpp"

using namespace wfsep;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets, one block per criterion.
constexpr double kRoundTripPdff = 1e-3;
constexpr double kRoundTripR2 = 1.0;
constexpr double kRoundTripOffres = 1.0;
constexpr double kRoundTripSeconds = 60.0;
constexpr std::size_t kRoundTripPhantoms = 20;

constexpr double kPeriodicityTol = 1e-10;
constexpr std::size_t kPeriodicityPixels = 100;

constexpr double kGradRelTol = 1e-4;
constexpr double kGradSeconds = 30.0;

constexpr double kCorrelationP = 1e-3;

constexpr double kBipolarPhi0 = 0.5;
constexpr std::size_t kCorruptCases = 10;
constexpr double kBipolarFullMin = 10.0;
constexpr double kBipolarSplitMax = 2.0;
constexpr double kBipolarR2Drop = 0.05;
constexpr double kAugmentProbability = 0.25;

constexpr double kFoldR2 = 0.85;

constexpr int kCurveEpoch = 20;
constexpr double kCurveRatio = 0.30;

constexpr double kLatencyMs = 250.0;

constexpr double kStatTol = 1e-10;
constexpr double kPTol = 1e-3;

struct Profile {
    std::string name;
    std::size_t corpus = 0;
    int epochs = 0;
    double runtime_budget_s = 0.0;
    // Quantities held to the correlation threshold, and the threshold.
    std::vector<std::string> gated;
    double r2_min = 0.0;
};

Profile make_profile(const std::string& name) {
    if (name == "full") return {"full", 1300, 75, 4 * 3600.0, kQuantities, 0.95};
    return {"ci", 130, 20, 20 * 60.0, {"pdff"}, 0.90};
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError(p.string(), "cannot open for reading");
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<std::uint8_t> slurp_bytes(const fs::path& p) {
    const std::string s = slurp(p);
    return {s.begin(), s.end()};
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); }

// --- 1. conventional round trip ----------------------------------------------

Outcome criterion_round_trip() {
    CorpusOptions o;
    o.noise_sigma = 0.0;
    double e_pdff = 0, e_r2 = 0, e_off = 0, slowest = 0, max_abs_offres = 0;
    for (std::size_t i = 0; i < kRoundTripPhantoms; ++i) {
        const CorpusItem item = make_corpus_item(o, 101, i, "test", false);
        const auto t0 = Clock::now();
        const ParameterMaps fit = separate(item.series, FitOptions{});
        slowest = std::max(slowest, seconds_since(t0));
        const RealImage pt = pdff_map(item.truth), pf = pdff_map(fit);
        for (std::size_t p = 0; p < item.truth.mask.size(); ++p) {
            if (!item.truth.mask[p]) continue;
            max_abs_offres = std::max(max_abs_offres, std::abs(item.truth.offres[p]));
            e_pdff = std::max(e_pdff, std::abs(pt[p] - pf[p]));
            e_r2 = std::max(e_r2, std::abs(item.truth.r2star[p] - fit.r2star[p]));
            e_off = std::max(e_off, std::abs(item.truth.offres[p] - fit.offres[p]));
        }
    }
    const bool ok = e_pdff <= kRoundTripPdff && e_r2 <= kRoundTripR2 && e_off <= kRoundTripOffres &&
                    slowest <= kRoundTripSeconds && max_abs_offres <= 150.0;
    return {ok, "max |dPDFF| " + fmt("%.2e", e_pdff) + ", |dR2*| " + fmt("%.2e", e_r2) + " 1/s, |doffres| " +
                    fmt("%.2e", e_off) + " Hz, max |offres| " + fmt("%.1f", max_abs_offres) + " Hz, slowest " +
                    fmt("%.2f", slowest) + " s"};
}

// --- 2. field-map periodicity ------------------------------------------------

Outcome criterion_periodicity() {
    const AcquisitionProtocol protocol = AcquisitionProtocol::standard();
    const double period = 1.0 / *protocol.uniform_spacing();
    const FieldmapCost cost(protocol, FitOptions{});
    Rng rng(202);
    double worst = 0.0;
    std::vector<cdouble> s;
    for (std::size_t k = 0; k < kPeriodicityPixels; ++k) {
        s = simulate_pixel(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 250), rng.uniform(-300, 300), protocol);
        for (auto& v : s) v += cdouble(0.05 * rng.normal(), 0.05 * rng.normal());
        const double f = rng.uniform(-400, 400);
        worst = std::max(worst, std::abs(cost.at(s, f) - cost.at(s, f + period)));
        worst = std::max(worst, std::abs(cost.at(s, f) - cost.at(s, f - period)));
    }
    return {worst <= kPeriodicityTol,
            "period " + fmt("%.4f", period) + " Hz, max |cost(f) - cost(f +- P)| " + fmt("%.2e", worst)};
}

// --- 3. gradient checks --------------------------------------------------------

nn::Tensor random_tensor(std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
    nn::Tensor t(c, h, w);
    for (auto& v : t.data) v = rng.normal();
    return t;
}

double dot(const nn::Tensor& a, const nn::Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

// Largest relative error between analytic gradient g and central differences of f over x.
double fd_worst(std::vector<double>& x, const std::vector<double>& g, const std::function<double()>& f,
                double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f();
        x[i] = keep - h;
        const double dn = f();
        x[i] = keep;
        worst = std::max(worst, rel_err(g[i], (up - dn) / (2 * h)));
    }
    return worst;
}

Outcome criterion_gradients() {
    const auto t0 = Clock::now();
    Rng rng(303);
    std::map<std::string, double> worst;

    for (std::size_t k : {1u, 3u}) {
        const nn::ConvShape shape{3, 4, k};
        nn::Tensor x = random_tensor(3, 6, 6, rng);
        std::vector<double> w(shape.weight_count()), b(4);
        for (auto& v : w) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        const nn::Tensor g = random_tensor(4, 6, 6, rng);
        std::vector<double> gw(w.size(), 0.0), gb(b.size(), 0.0);
        const nn::Tensor gx = nn::conv2d_backward(x, shape, w, g, gw, gb);
        auto f = [&] { return dot(nn::conv2d(x, shape, w, b), g); };
        const std::string name = "conv" + std::to_string(k) + "x" + std::to_string(k);
        worst[name] = std::max({fd_worst(x.data, gx.data, f), fd_worst(w, gw, f), fd_worst(b, gb, f)});
    }
    {
        nn::Tensor x = random_tensor(2, 6, 6, rng);
        const nn::Tensor g = random_tensor(2, 3, 3, rng);
        const nn::PoolResult p = nn::maxpool2(x);
        const nn::Tensor gx = nn::maxpool2_backward(g, p.argmax, 6, 6);
        worst["maxpool"] = fd_worst(x.data, gx.data, [&] { return dot(nn::maxpool2(x).output, g); });
    }
    {
        nn::Tensor x = random_tensor(2, 3, 3, rng);
        const nn::Tensor g = random_tensor(2, 6, 6, rng);
        const nn::Tensor gx = nn::upsample2_backward(g);
        worst["upsample"] = fd_worst(x.data, gx.data, [&] { return dot(nn::upsample2(x), g); });
    }
    {
        nn::Tensor x = random_tensor(2, 5, 5, rng);
        for (auto& v : x.data)
            if (std::abs(v) < 1e-2) v = 0.5;
        const nn::Tensor g = random_tensor(2, 5, 5, rng);
        const nn::ActivationResult a = nn::relu_dropout(x, 0.0, true, 1);
        const nn::Tensor gx = nn::relu_dropout_backward(g, a.factor);
        worst["relu"] = fd_worst(x.data, gx.data, [&] { return dot(nn::relu_dropout(x, 0.0, false, 1).output, g); });
    }
    {
        nn::Tensor a = random_tensor(2, 4, 4, rng), b = random_tensor(3, 4, 4, rng);
        const nn::Tensor g = random_tensor(5, 4, 4, rng);
        nn::Tensor ga, gb;
        nn::skip_split(g, 2, ga, gb);
        auto f = [&] { return dot(nn::skip_concat(a, b), g); };
        worst["skip"] = std::max(fd_worst(a.data, ga.data, f), fd_worst(b.data, gb.data, f));
    }
    {
        nn::Tensor p = random_tensor(2, 4, 4, rng);
        const nn::Tensor t = random_tensor(2, 4, 4, rng);
        const nn::LossResult l = nn::mse_loss(p, t);
        worst["mse"] = fd_worst(p.data, l.grad.data, [&] { return nn::mse_loss(p, t).loss; });
    }
    {
        nn::UNetConfig c;
        c.in_channels = 3;
        c.out_channels = 2;
        c.levels = 1;
        c.base_features = 2;
        c.dropout_rate = 0.0;
        c.image_size = 8;
        nn::UNetModel model = nn::build_unet(c, 3);
        for (std::size_t i = 0; i < model.convs.size(); ++i) {
            const std::size_t o = model.offsets[i] + model.convs[i].weight_count();
            for (std::size_t j = 0; j < model.convs[i].out_channels; ++j) model.params[o + j] = 0.1 * rng.normal();
        }
        const nn::Tensor x = random_tensor(3, 8, 8, rng), target = random_tensor(2, 8, 8, rng);
        nn::ForwardCache cache;
        const nn::Tensor y = nn::forward(model, x, true, 0, &cache);
        const auto grads = nn::backward(model, cache, nn::mse_loss(y, target).grad);
        worst["unet"] = fd_worst(
            model.params, grads, [&] { return nn::mse_loss(nn::forward(model, x, false, 0), target).loss; }, 1e-4);
    }

    const double elapsed = seconds_since(t0);
    bool ok = elapsed <= kGradSeconds;
    std::string detail;
    for (const auto& [name, e] : worst) {
        ok = ok && e <= kGradRelTol;
        detail += name + " " + fmt("%.1e", e) + ", ";
    }
    return {ok, detail + fmt("%.1f", elapsed) + " s"};
}

// --- pipeline runs shared by 4 to 8 ---------------------------------------------

RunConfig pipeline_config(const fs::path& dir, const Profile& profile, const std::string& mode,
                          const std::string& extra = "") {
    std::ostringstream t;
    t << "[run]\nseed = 1\noutput_dir = \"" << dir.string() << "\"\nmode = \"" << mode << "\"\n"
      << "[corpus]\nsize = " << profile.corpus << "\n" << extra << "[train]\nepochs = " << profile.epochs << "\n";
    return RunConfig::from_config(Config::parse(t.str()));
}

struct Workspace {
    fs::path root;
    bool reuse = false;
    std::ostream* log = nullptr;
    std::map<std::string, double> timings;
    std::set<std::string> done;

    fs::path timing_file() const { return root / "timings.json"; }

    void load_timings() {
        if (!fs::exists(timing_file())) return;
        for (auto& [k, v] : nlohmann::json::parse(slurp(timing_file())).items()) timings[k] = v.get<double>();
    }
    void save_timings() const {
        nlohmann::json j = timings;
        std::ofstream(timing_file()) << j.dump(2) << "\n";
    }

    // Runs `step` unless reuse is on and `marker` already exists. Records the
    // wall time under `key` either way (a reused step keeps its old time).
    void stage(const std::string& key, const fs::path& marker, const std::function<void()>& step) {
        if (done.count(key) || (reuse && fs::exists(marker) && timings.count(key))) return;
        const auto t0 = Clock::now();
        step();
        timings[key] = seconds_since(t0);
        done.insert(key);
        save_timings();
    }

    void run(const std::string& name, const RunConfig& cfg, bool with_fit) {
        const CommandContext ctx{cfg, log};
        const fs::path d = cfg.output_dir;
        const std::string mode = mode_name(cfg.mode);
        if (with_fit) {
            stage(name + ".phantom", d / "corpus" / "manifest.json", [&] { cmd_phantom(ctx); });
            stage(name + ".fit", d / "fit" / "fit_log.json", [&] { cmd_fit(ctx); });
        }
        stage(name + ".train." + mode, d / "model" / mode / "checkpoint.wftunet", [&] { cmd_train(ctx); });
        stage(name + ".eval." + mode, d / "eval" / (mode + "_vs_conventional.json"), [&] { cmd_eval(ctx); });
    }
};

nlohmann::json eval_json(const RunConfig& cfg) {
    return nlohmann::json::parse(
        slurp(cfg.output_dir / "eval" / (mode_name(cfg.mode) + "_vs_conventional.json")));
}

std::optional<double> pooled(const nlohmann::json& j, const std::string& q, const char* field) {
    const auto& p = j["correlations"][q]["pooled"];
    if (p.is_null()) return std::nullopt;
    return p[field].get<double>();
}

std::string r2_text(const std::optional<double>& v) { return v ? fmt("%.4f", *v) : std::string("n/a"); }

Outcome criterion_correlation(const Profile& profile, const RunConfig& cfg, double runtime) {
    const auto j = eval_json(cfg);
    bool ok = runtime <= profile.runtime_budget_s;
    std::string detail = std::to_string(j["cases"].get<std::size_t>()) + " test cases;";
    for (const auto& q : kQuantities) {
        const auto r2 = pooled(j, q, "r_squared");
        const auto p = pooled(j, q, "p_value");
        const bool gated = std::find(profile.gated.begin(), profile.gated.end(), q) != profile.gated.end();
        if (gated) ok = ok && r2 && p && *r2 >= profile.r2_min && *p < kCorrelationP;
        detail += " " + q + " r2 " + r2_text(r2) + (gated ? "*" : "");
    }
    detail += "; gate r2 >= " + fmt("%.2f", profile.r2_min) + " on *, p < 1e-3; pipeline " + fmt("%.0f", runtime) +
              " s of " + fmt("%.0f", profile.runtime_budget_s) + " s";
    return {ok, detail};
}

Outcome criterion_ablation(const std::map<std::string, nlohmann::json>& reports) {
    bool ok = true;
    std::string detail;
    for (const auto& [mode, j] : reports) {
        const double pdff = pooled(j, "pdff", "r_squared").value_or(NAN);
        const double r2s = pooled(j, "r2star", "r_squared").value_or(NAN);
        const double off = pooled(j, "offres", "r_squared").value_or(NAN);
        if (mode == "magnitude12")
            ok = ok && pdff > off && r2s > off;
        else
            ok = ok && pdff > off;
        detail += mode + " pdff " + fmt("%.3f", pdff) + " r2star " + fmt("%.3f", r2s) + " offres " +
                  fmt("%.3f", off) + "; ";
    }
    return {ok, detail};
}

struct Predictor {
    nn::UNetModel model;
    NormStats stats;
    RunConfig cfg;

    explicit Predictor(const RunConfig& c) : cfg(c) {
        const fs::path m = c.output_dir / "model" / mode_name(c.mode);
        model = nn::load_checkpoint((m / "checkpoint.wftunet").string());
        stats = parse_norm_stats(slurp(m / "norm_stats.json"));
    }
    ParameterMaps operator()(const EchoSeries& s) const {
        return predict_maps(model, stats, s, cfg.mode, cfg.fit.signal_threshold);
    }
};

std::vector<std::size_t> first_test_items(const RunConfig& cfg, std::size_t n) {
    const SplitIndices s = split(cfg.corpus.size);
    return {s.test.begin(), s.test.begin() + static_cast<std::ptrdiff_t>(std::min(n, s.test.size()))};
}

ParameterMaps conventional_reference(const RunConfig& cfg, std::size_t index) {
    char name[32];
    std::snprintf(name, sizeof name, "%05zu_fit.wras", index);
    return maps_from_raster(read_raster(cfg.output_dir / "fit" / name));
}

double pdff_r2(const std::vector<EvaluationCase>& cases) {
    const EvaluationReport r = compare_methods(cases);
    const auto& q = r.quantity("pdff");
    return q.pooled ? q.pooled->r_squared : NAN;
}

Outcome criterion_bipolar(const RunConfig& augmented) {
    CorpusOptions o;
    o.noise_sigma = 0.0;
    double e_full = 0, e_split = 0;
    for (std::size_t i = 0; i < kCorruptCases; ++i) {
        const CorpusItem item = make_corpus_item(o, 606, i, "test", false);
        const EchoSeries bad = apply_bipolar_error(item.series, {kBipolarPhi0, 0.0});
        const ParameterMaps full = separate(bad, FitOptions{});
        const ParameterMaps half = separate_even_odd(bad, FitOptions{});
        for (std::size_t p = 0; p < item.truth.mask.size(); ++p) {
            if (!item.truth.mask[p]) continue;
            e_full = std::max(e_full, std::abs(full.offres[p] - item.truth.offres[p]));
            e_split = std::max(e_split, std::abs(half.offres[p] - item.truth.offres[p]));
        }
    }

    const Predictor predict(augmented);
    std::vector<EvaluationCase> clean, corrupt;
    for (std::size_t idx : first_test_items(augmented, kCorruptCases)) {
        const CorpusItem item = make_corpus_item(augmented.corpus, augmented.seed, idx, "test", false);
        const ParameterMaps ref = conventional_reference(augmented, idx);
        const CorpusItem bad = corrupt_item(item, BipolarErrorSpec{kBipolarPhi0, 0.0}, std::nullopt);
        clean.push_back({predict(item.series), ref, item_rois(item), std::nullopt, std::nullopt});
        corrupt.push_back({predict(bad.series), ref, item_rois(item), std::nullopt, std::nullopt});
    }
    const double r_clean = pdff_r2(clean), r_bad = pdff_r2(corrupt);
    const double drop = r_clean - r_bad;
    const bool ok = e_full > kBipolarFullMin && e_split <= kBipolarSplitMax && drop < kBipolarR2Drop;
    return {ok, "max |doffres| full " + fmt("%.2f", e_full) + " Hz, even/odd " + fmt("%.2e", e_split) +
                    " Hz; net PDFF r2 clean " + fmt("%.4f", r_clean) + ", bipolar " + fmt("%.4f", r_bad) +
                    ", drop " + fmt("%.4f", drop)};
}

Outcome criterion_foldover(const RunConfig& augmented) {
    const Predictor predict(augmented);
    std::vector<EvaluationCase> cases;
    std::size_t k = 0;
    for (std::size_t idx : first_test_items(augmented, kCorruptCases)) {
        const CorpusItem item = make_corpus_item(augmented.corpus, augmented.seed, idx, "test", false);
        const double shift =
            augmented.corpus.foldover_min + (augmented.corpus.foldover_max - augmented.corpus.foldover_min) *
                                                static_cast<double>(k++) / static_cast<double>(kCorruptCases - 1);
        const CorpusItem folded = corrupt_item(item, std::nullopt, shift);
        cases.push_back({predict(folded.series), conventional_reference(augmented, idx), item_rois(folded),
                         std::nullopt, std::nullopt});
    }
    const double r2 = pdff_r2(cases);
    return {r2 >= kFoldR2, "PDFF ROI r2 on folded series " + fmt("%.4f", r2) + " (fold-over probability " +
                               fmt("%.2f", augmented.corpus.foldover_probability) + " in training)"};
}

Outcome criterion_curve(const RunConfig& cfg) {
    std::ifstream f(cfg.output_dir / "model" / mode_name(cfg.mode) / "history.csv");
    std::map<int, std::pair<double, double>> rows;
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
        std::istringstream in(line);
        std::string a, b, c;
        std::getline(in, a, ',');
        std::getline(in, b, ',');
        std::getline(in, c, ',');
        rows[std::stoi(a)] = {std::stod(b), std::stod(c)};
    }
    if (!rows.count(1) || !rows.count(kCurveEpoch)) return {false, "history lacks epoch 1 or 20"};
    const auto [t1, v1] = rows[1];
    const auto [t20, v20] = rows[kCurveEpoch];
    const double rt = t20 / t1, rv = v20 / v1;
    return {rt < kCurveRatio && rv < kCurveRatio,
            "train " + fmt("%.4f", t1) + " -> " + fmt("%.4f", t20) + " (" + fmt("%.1f", 100 * rt) + "%), val " +
                fmt("%.4f", v1) + " -> " + fmt("%.4f", v20) + " (" + fmt("%.1f", 100 * rv) + "%)"};
}

// --- 9. latency ----------------------------------------------------------------

Outcome criterion_latency() {
    const nn::UNetModel model = nn::build_unet(nn::UNetConfig{}, 909);
    NormStats stats;
    stats.input_mean.assign(24, 0.0);
    stats.input_std.assign(24, 1.0);
    stats.target_mean.assign(kTargetChannels, 0.0);
    stats.target_std.assign(kTargetChannels, 1.0);
    stats.count = 1;
    CorpusOptions o;
    const CorpusItem item = make_corpus_item(o, 909, 0, "test", false);
    std::vector<double> ms;
    for (int i = 0; i < 6; ++i) {
        const auto t0 = Clock::now();
        const ParameterMaps m = predict_maps(model, stats, item.series, InputMode::Complex12, 0.18);
        if (i > 0) ms.push_back(1000.0 * seconds_since(t0));
        (void)m;
    }
    std::sort(ms.begin(), ms.end());
    const double median = ms[ms.size() / 2];
    return {median <= kLatencyMs, "median " + fmt("%.1f", median) + " ms, worst " + fmt("%.1f", ms.back()) +
                                      " ms per 64x64 Complex12 separation"};
}

// --- 10. statistics oracles ------------------------------------------------------

double simpson_p(double t, double df) {
    const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * kPi);
    auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
    const int n = 200000;
    const double b = std::abs(t), h = b / n;
    double s = pdf(0.0) + pdf(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
    return 1.0 - 2.0 * s * h / 3.0;
}

Outcome criterion_statistics() {
    double stat_err = 0.0, p_err = 0.0;
    struct Row {
        double t, df, table;
    };
    for (const Row& r : {Row{2.0, 10, 0.0734}, Row{1.0, 5, 0.3632}, Row{3.0, 30, 0.0054}}) {
        const double p = student_t_two_tailed(r.t, r.df);
        p_err = std::max({p_err, std::abs(p - r.table), std::abs(p - simpson_p(r.t, r.df))});
    }

    Rng rng(1010);
    std::vector<double> x, y;
    for (int i = 1; i <= 10; ++i) {
        x.push_back(i);
        y.push_back(i + 2.0 * rng.normal());
    }
    const double n = 10;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
    const double r = cov / std::sqrt(vx * vy), slope = cov / vx, intercept = sy / n - slope * sx / n;
    const CorrelationResult c = pearson(x, y);
    stat_err = std::max({stat_err, std::abs(c.r - r), std::abs(c.slope - slope), std::abs(c.intercept - intercept)});
    p_err = std::max(p_err, std::abs(c.p_value - simpson_p(r * std::sqrt((n - 2) / (1 - r * r)), n - 2)));

    std::vector<double> a(15), b(15);
    for (std::size_t i = 0; i < 15; ++i) {
        a[i] = rng.normal();
        b[i] = a[i] - 0.4 + 0.6 * rng.normal();
    }
    double md = 0, ss = 0;
    for (std::size_t i = 0; i < 15; ++i) md += (a[i] - b[i]) / 15.0;
    for (std::size_t i = 0; i < 15; ++i) ss += (a[i] - b[i] - md) * (a[i] - b[i] - md);
    const double t = md / std::sqrt(ss / 14.0 / 15.0);
    const TTestResult tt = paired_ttest(a, b);
    stat_err = std::max(stat_err, std::abs(tt.t - t));
    p_err = std::max(p_err, std::abs(tt.p_value - simpson_p(t, 14)));

    return {stat_err <= kStatTol && p_err <= kPTol,
            "max statistic error " + fmt("%.1e", stat_err) + ", max p-value error " + fmt("%.1e", p_err)};
}

// --- 11. format round trips ---------------------------------------------------------

Outcome criterion_formats(const fs::path& dir) {
    fs::create_directories(dir);
    CorpusOptions o;
    const CorpusItem item = make_corpus_item(o, 1111, 0, "test", false);
    bool ok = true;
    std::string detail;

    for (Dtype dt : {Dtype::Float32, Dtype::Float64}) {
        const RasterArray a = to_raster(item.series, dt);
        const fs::path p = dir / "series.wras";
        write_raster(p, a);
        const RasterArray b = read_raster(p);
        // Float32 files are compared as bytes; Float64 values must also survive exactly.
        bool same = a.dims == b.dims && a.dtype == b.dtype && encode_raster(b) == slurp_bytes(p);
        if (dt == Dtype::Float64)
            same = same && std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
        ok = ok && same;
    }
    const RasterArray m = to_raster(item.truth);
    write_raster(dir / "maps.wras", m);
    const ParameterMaps back = maps_from_raster(read_raster(dir / "maps.wras"));
    ok = ok && encode_raster(to_raster(back)) == encode_raster(m);
    detail += std::string("raster ") + (ok ? "bit-exact" : "MISMATCH");

    nn::UNetConfig c;
    c.in_channels = 3;
    c.out_channels = 2;
    c.levels = 2;
    c.base_features = 4;
    c.dropout_rate = 0.1;
    c.image_size = 16;
    Rng rng(1112);
    std::vector<Sample> batch;
    for (int i = 0; i < 2; ++i) batch.push_back({random_tensor(3, 16, 16, rng), random_tensor(2, 16, 16, rng), ""});
    nn::TrainConfig tc;
    tc.seed = 77;
    nn::UNetModel straight = nn::build_unet(c, 1113);
    nn::UNetModel half = straight;
    for (int i = 0; i < 10; ++i) nn::train_step(straight, batch, tc);
    for (int i = 0; i < 5; ++i) nn::train_step(half, batch, tc);

    const std::string ck = (dir / "half.wftunet").string();
    nn::save_checkpoint(half, ck);
    nn::UNetModel resumed = nn::load_checkpoint(ck);
    const bool ck_same = nn::encode_checkpoint(resumed) == nn::encode_checkpoint(half);
    for (int i = 0; i < 5; ++i) nn::train_step(resumed, batch, tc);
    const bool resumed_same = nn::encode_checkpoint(resumed) == nn::encode_checkpoint(straight);
    ok = ok && ck_same && resumed_same;
    detail += std::string(", checkpoint ") + (ck_same ? "bit-exact" : "MISMATCH") + ", resumed 5+5 vs 10 steps " +
              (resumed_same ? "bit-exact" : "MISMATCH");
    return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite: one line per criterion"};
    std::string profile_name = "ci";
    std::string workdir = (fs::temp_directory_path() / "wfsep_acceptance").string();
    bool reuse = false, verbose = false;
    std::vector<int> only;
    app.add_option("--profile", profile_name, "ci (smoke scale) or full (desk scale)")
        ->check(CLI::IsMember({"ci", "full"}));
    app.add_option("--workdir", workdir, "Directory for pipeline artefacts");
    app.add_flag("--reuse", reuse, "Skip pipeline stages whose outputs already exist");
    app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 11));
    app.add_flag("-v,--verbose", verbose, "Stream pipeline progress to stderr");
    CLI11_PARSE(app, argc, argv);

    const Profile profile = make_profile(profile_name);
    const std::set<int> wanted(only.begin(), only.end());
    auto want = [&](std::initializer_list<int> ids) {
        if (wanted.empty()) return true;
        for (int i : ids)
            if (wanted.count(i)) return true;
        return false;
    };

    Workspace ws;
    ws.root = fs::path(workdir) / profile.name;
    ws.reuse = reuse;
    ws.log = verbose ? &std::cerr : nullptr;
    if (!reuse) fs::remove_all(ws.root);
    fs::create_directories(ws.root);
    ws.load_timings();

    std::cout << "profile " << profile.name << ": corpus " << profile.corpus << ", epochs " << profile.epochs << "\n"
              << std::flush;
    int failures = 0;
    auto report = [&](int id, const std::function<Outcome()>& check) {
        if (!wanted.empty() && !wanted.count(id)) return;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("criterion %2d %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, criterion_round_trip);
    report(2, criterion_periodicity);
    report(3, criterion_gradients);
    report(9, criterion_latency);
    report(10, criterion_statistics);
    report(11, [&] { return criterion_formats(ws.root / "formats"); });

    const RunConfig base = pipeline_config(ws.root / "base", profile, "complex12");
    if (want({4, 5, 8})) {
        report(4, [&] {
            ws.run("base", base, true);
            const double runtime = ws.timings["base.phantom"] + ws.timings["base.fit"] +
                                   ws.timings["base.train.complex12"] + ws.timings["base.eval.complex12"];
            return criterion_correlation(profile, base, runtime);
        });
        report(8, [&] {
            ws.run("base", base, true);
            return criterion_curve(base);
        });
    }
    if (want({5})) {
        report(5, [&] {
            std::map<std::string, nlohmann::json> reports;
            for (const std::string mode : {"complex1", "magnitude1", "magnitude12"}) {
                const RunConfig cfg = pipeline_config(ws.root / "base", profile, mode);
                ws.run("base", base, true);
                ws.run("base", cfg, false);
                reports[mode] = eval_json(cfg);
            }
            return criterion_ablation(reports);
        });
    }
    if (want({6, 7})) {
        const std::string extra = "bipolar_probability = " + fmt("%.2f", kAugmentProbability) +
                                  "\nfoldover_probability = " + fmt("%.2f", kAugmentProbability) + "\n";
        const RunConfig augmented = pipeline_config(ws.root / "augmented", profile, "complex12", extra);
        report(6, [&] {
            ws.run("augmented", augmented, true);
            return criterion_bipolar(augmented);
        });
        report(7, [&] {
            ws.run("augmented", augmented, true);
            return criterion_foldover(augmented);
        });
    }

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
