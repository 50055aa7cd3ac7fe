#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "wfsep/evaluation.hpp"
#include "wfsep/nn/checkpoint.hpp"
#include "wfsep/pgm.hpp"
#include "wfsep/pipeline.hpp"
#include "wfsep/raster.hpp"

namespace wfsep {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string stem(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05zu", index);
    return buf;
}

struct Layout {
    fs::path root;
    fs::path corpus() const { return root / "corpus"; }
    fs::path manifest() const { return corpus() / "manifest.json"; }
    fs::path truth(std::size_t i) const { return corpus() / (stem(i) + "_truth.wras"); }
    fs::path series(std::size_t i) const { return corpus() / (stem(i) + "_series.wras"); }
    fs::path fit_series(std::size_t i) const { return corpus() / (stem(i) + "_fitseries.wras"); }
    fs::path fits() const { return root / "fit"; }
    fs::path fit(std::size_t i) const { return fits() / (stem(i) + "_fit.wras"); }
    fs::path fit_full(std::size_t i) const { return fits() / (stem(i) + "_fitfull.wras"); }
    fs::path model(InputMode m) const { return root / "model" / mode_name(m); }
    fs::path predictions(InputMode m) const { return root / "predict" / mode_name(m); }
    fs::path prediction(InputMode m, std::size_t i) const { return predictions(m) / (stem(i) + "_pred.wras"); }
    fs::path eval() const { return root / "eval"; }
    fs::path report() const { return root / "report"; }
};

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw IoError(p.string(), "cannot create directory");
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError(p.string(), "cannot write file");
    f << text;
    if (!f) throw IoError(p.string(), "failed writing file");
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError(p.string(), "cannot read file");
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

std::ostream& say(const CommandContext& ctx) {
    static std::ostream null(nullptr);
    return ctx.log ? *ctx.log : null;
}

ordered_json protocol_json(const AcquisitionProtocol& p) {
    ordered_json j;
    j["echo_times_s"] = p.echo_times();
    j["field_strength_t"] = p.field_strength();
    j["bipolar"] = p.bipolar();
    return j;
}

AcquisitionProtocol protocol_from_json(const nlohmann::json& j) {
    return AcquisitionProtocol(j.at("echo_times_s").get<std::vector<double>>(), j.at("field_strength_t").get<double>(),
                               FatSpectrum::liver_default(), j.at("bipolar").get<bool>());
}

nlohmann::json load_manifest(const Layout& L) {
    try {
        return nlohmann::json::parse(read_text(L.manifest()));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad manifest " + L.manifest().string() + ": " + e.what());
    }
}

/// Rebuilds an item from disk; the anatomy is regenerated from the recorded seeds.
CorpusItem load_item(const RunConfig& cfg, const Layout& L, const nlohmann::json& e) {
    try {
        const auto index = e.at("index").get<std::size_t>();
        const auto phantom_seed = e.at("phantom_seed").get<std::uint64_t>();
        const AcquisitionProtocol protocol = protocol_from_json(e.at("protocol"));
        const PhantomSpec realized = realize_phantom(corpus_spec(cfg.corpus, cfg.seed, index), phantom_seed);
        CorpusItem item{index,
                        phantom_seed,
                        e.at("noise_seed").get<std::uint64_t>(),
                        realized,
                        maps_from_raster(read_raster(L.truth(index))),
                        series_from_raster(read_raster(L.series(index)), protocol),
                        std::nullopt,
                        std::nullopt,
                        std::nullopt,
                        e.at("split").get<std::string>()};
        if (!e.at("bipolar").is_null())
            item.bipolar = BipolarErrorSpec{e["bipolar"].at("phi0").get<double>(), e["bipolar"].at("phi1").get<double>()};
        if (!e.at("foldover").is_null()) {
            item.foldover = e["foldover"].get<double>();
            item.fit_series = series_from_raster(read_raster(L.fit_series(index)), protocol);
        }
        return item;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("bad manifest entry: ") + ex.what());
    }
}

std::vector<CorpusItem> load_split(const RunConfig& cfg, const Layout& L, const std::vector<std::string>& splits) {
    const auto m = load_manifest(L);
    std::vector<CorpusItem> items;
    for (const auto& e : m.at("items")) {
        const auto s = e.at("split").get<std::string>();
        if (std::find(splits.begin(), splits.end(), s) != splits.end()) items.push_back(load_item(cfg, L, e));
    }
    return items;
}

ParameterMaps load_fit(const Layout& L, std::size_t index) {
    const fs::path p = L.fit(index);
    if (!fs::exists(p)) throw IoError(p.string(), "missing conventional fit (run the fit command first)");
    return maps_from_raster(read_raster(p));
}

struct LoadedModel {
    nn::UNetModel model;
    NormStats stats;
};

LoadedModel load_model(const Layout& L, InputMode mode) {
    const fs::path ck = L.model(mode) / "checkpoint.wftunet";
    if (!fs::exists(ck)) throw IoError(ck.string(), "missing checkpoint (run the train command first)");
    LoadedModel m{nn::load_checkpoint(ck.string()), parse_norm_stats(read_text(L.model(mode) / "norm_stats.json"))};
    if (m.model.config.in_channels != input_channels(mode))
        throw ValidationError("checkpoint input channels do not match mode " + mode_name(mode));
    return m;
}

}  // namespace

void cmd_phantom(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const Layout L{cfg.output_dir};
    ensure_dir(L.corpus());
    write_text(L.root / "run_config.toml", cfg.to_toml());

    const SplitIndices s = split(cfg.corpus.size);
    ordered_json manifest;
    manifest["seed"] = cfg.seed;
    manifest["size"] = cfg.corpus.size;
    manifest["splits"] = {{"train", s.train.size()}, {"val", s.val.size()}, {"test", s.test.size()}};
    manifest["items"] = ordered_json::array();
    const auto items = make_corpus(cfg);
    for (const auto& item : items) {
        write_raster(L.truth(item.index), to_raster(item.truth));
        write_raster(L.series(item.index), to_raster(item.series));
        if (item.fit_series) write_raster(L.fit_series(item.index), to_raster(*item.fit_series));
        ordered_json e;
        e["index"] = item.index;
        e["split"] = item.split;
        e["phantom_seed"] = item.phantom_seed;
        e["noise_seed"] = item.noise_seed;
        e["noise_sigma"] = cfg.corpus.noise_sigma;
        e["protocol"] = protocol_json(item.series.protocol());
        e["bipolar"] = item.bipolar ? ordered_json{{"phi0", item.bipolar->phi0}, {"phi1", item.bipolar->phi1}}
                                    : ordered_json(nullptr);
        e["foldover"] = item.foldover ? ordered_json(*item.foldover) : ordered_json(nullptr);
        e["truth"] = L.truth(item.index).filename().string();
        e["series"] = L.series(item.index).filename().string();
        e["fit_series"] = item.fit_series ? ordered_json(L.fit_series(item.index).filename().string())
                                          : ordered_json(nullptr);
        manifest["items"].push_back(e);
    }
    write_text(L.manifest(), manifest.dump(2) + "\n");
    say(ctx) << "phantom: wrote " << items.size() << " studies (" << s.train.size() << "/" << s.val.size() << "/"
             << s.test.size() << ") to " << L.corpus().string() << "\n";
}

void cmd_fit(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const Layout L{cfg.output_dir};
    ensure_dir(L.fits());
    const auto items = load_split(cfg, L, {"train", "val", "test"});
    ordered_json log = ordered_json::array();
    for (const auto& item : items) {
        FitLog fl;
        const ParameterMaps maps = teacher_fit(item, cfg.fit, &fl);
        write_raster(L.fit(item.index), to_raster(maps));
        if (item.split == "test") {
            // Unmasked fit so the conventional water map keeps its background noise for SNR.
            FitOptions full = cfg.fit;
            full.signal_threshold = 0.0;
            write_raster(L.fit_full(item.index), to_raster(teacher_fit(item, full)));
        }
        log.push_back({{"index", item.index},
                       {"route", fl.route},
                       {"masked_pixels", fl.masked_pixels},
                       {"icm_passes", fl.icm.sweeps},
                       {"icm_last_changes", fl.icm.last_changes},
                       {"icm_initial_energy", fl.icm.initial_energy},
                       {"icm_final_energy", fl.icm.final_energy},
                       {"mean_residual", fl.mean_residual},
                       {"max_residual", fl.max_residual}});
        say(ctx) << "fit: " << stem(item.index) << " route=" << fl.route << " pixels=" << fl.masked_pixels << "\n";
    }
    write_text(L.fits() / "fit_log.json", log.dump(2) + "\n");
}

void cmd_train(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const Layout L{cfg.output_dir};
    const auto items = load_split(cfg, L, {"train", "val"});
    std::vector<Sample> train_raw, val_raw;
    for (const auto& item : items) {
        const ParameterMaps target = cfg.targets == TargetSource::Truth ? item.truth : load_fit(L, item.index);
        (item.split == "train" ? train_raw : val_raw).push_back(make_sample(item, target, cfg.mode));
    }
    if (train_raw.empty()) throw ValidationError("training split is empty");
    const NormStats stats = compute_norm_stats(train_raw);
    std::vector<Sample> train_set, val_set;
    for (const auto& s : train_raw) train_set.push_back(normalize(s, stats));
    for (const auto& s : val_raw) val_set.push_back(normalize(s, stats));

    nn::UNetConfig ucfg = cfg.unet;
    ucfg.in_channels = input_channels(cfg.mode);
    nn::UNetModel model = nn::build_unet(ucfg, derive_seed(cfg.seed, 0x554E4554ULL));
    const auto history = nn::train(model, train_set, val_set, cfg.train, [&](const nn::EpochRecord& r) {
        say(ctx) << "train: epoch " << r.epoch << " loss " << r.train_loss << " val " << r.val_loss << "\n";
    });

    const fs::path dir = L.model(cfg.mode);
    ensure_dir(dir);
    nn::save_checkpoint(model, (dir / "checkpoint.wftunet").string());
    std::error_code ec;
    fs::remove_all(L.predictions(cfg.mode), ec);
    nn::write_history_csv((dir / "history.csv").string(), history);
    write_text(dir / "norm_stats.json", norm_stats_json(stats));
}

void cmd_predict(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const Layout L{cfg.output_dir};
    const LoadedModel lm = load_model(L, cfg.mode);
    ensure_dir(L.predictions(cfg.mode));
    for (const auto& item : load_split(cfg, L, {"test"})) {
        const ParameterMaps pred = predict_maps(lm.model, lm.stats, item.series, cfg.mode, cfg.fit.signal_threshold);
        write_raster(L.prediction(cfg.mode, item.index), to_raster(pred));
    }
    say(ctx) << "predict: wrote " << L.predictions(cfg.mode).string() << "\n";
}

void cmd_eval(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const Layout L{cfg.output_dir};
    const auto items = load_split(cfg, L, {"test"});
    if (items.empty()) throw ValidationError("test split is empty");
    // Predictions are reused when complete; training a mode clears its predictions.
    const bool have_all = std::all_of(items.begin(), items.end(),
                                      [&](const CorpusItem& it) { return fs::exists(L.prediction(cfg.mode, it.index)); });
    if (!have_all) cmd_predict(ctx);
    ensure_dir(L.eval());
    std::vector<EvaluationCase> vs_conv, vs_truth, conv_truth;
    for (const auto& item : items) {
        const ParameterMaps pred = maps_from_raster(read_raster(L.prediction(cfg.mode, item.index)));
        const ParameterMaps conv = load_fit(L, item.index);
        const auto rois = item_rois(item);
        const fs::path full = L.fit_full(item.index);
        std::optional<RealImage> conv_water;
        if (fs::exists(full)) conv_water = maps_from_raster(read_raster(full)).water;
        vs_conv.push_back({pred, conv, rois, std::nullopt, conv_water});
        vs_truth.push_back({pred, item.truth, rois, std::nullopt, std::nullopt});
        conv_truth.push_back({conv, item.truth, rois, conv_water, std::nullopt});
    }
    const std::string m = mode_name(cfg.mode);
    auto emit = [&](const std::vector<EvaluationCase>& cases, const std::string& pred, const std::string& ref) {
        const auto rep = compare_methods(cases, CompareOptions{m, pred, ref});
        const std::string base = pred + "_vs_" + ref;
        write_report_json(rep, (L.eval() / (base + ".json")).string());
        write_report_csv(rep, (L.eval() / (base + ".csv")).string());
        write_scatter_csv(rep, (L.eval() / (base + "_scatter.csv")).string());
        for (const auto& q : rep.quantities)
            if (q.pooled)
                say(ctx) << "eval: " << base << " " << q.quantity << " r2=" << q.pooled->r_squared
                         << " p=" << q.pooled->p_value << "\n";
    };
    emit(vs_conv, m, "conventional");
    emit(vs_truth, m, "truth");
    emit(conv_truth, "conventional", "truth");
}

void cmd_report(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const Layout L{cfg.output_dir};
    const std::string m = mode_name(cfg.mode);
    ensure_dir(L.report() / "panels");

    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "water/fat separation summary\nmode: " << m << "\n";
    for (const std::string& base : std::vector<std::string>{m + "_vs_conventional", m + "_vs_truth", "conventional_vs_truth"}) {
        const fs::path p = L.eval() / (base + ".json");
        if (!fs::exists(p)) throw IoError(p.string(), "missing evaluation output (run the eval command first)");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text(p));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("bad evaluation output " + p.string() + ": " + e.what());
        }
        out << "\n" << base << " (" << j["cases"].get<std::size_t>() << " test studies)\n";
        out << "  quantity   rois   r^2      r        p          slope    intercept\n";
        for (const auto& q : kQuantities) {
            const auto& e = j["correlations"][q];
            out << "  " << std::left << std::setw(9) << q << std::right << std::setw(6) << e["rois"].get<std::size_t>();
            if (e["pooled"].is_null()) {
                out << "   (not computed)\n";
                continue;
            }
            const auto& c = e["pooled"];
            out << "   " << c["r_squared"].get<double>() << "   " << c["r"].get<double>() << "   " << std::scientific
                << std::setprecision(2) << c["p_value"].get<double>() << std::fixed << std::setprecision(4) << "   "
                << c["slope"].get<double>() << "   " << c["intercept"].get<double>() << "\n";
        }
        const auto& s = j["snr"];
        out << "  SNR (water, septum / background std): " << j["pred"].get<std::string>() << " = ";
        s["pred_mean"].is_null() ? out << "n/a" : out << s["pred_mean"].get<double>();
        out << ", " << j["ref"].get<std::string>() << " = ";
        s["ref_mean"].is_null() ? out << "n/a" : out << s["ref_mean"].get<double>();
        if (s.contains("gain_percent_of_pred"))
            out << ", difference " << s["gain_percent_of_pred"].get<double>() << "% of " << j["pred"].get<std::string>();
        out << "\n";
        for (const auto& w : j["warnings"]) out << "  warning: " << w.get<std::string>() << "\n";
    }

    // Panels for the first few test studies: conventional | network | truth.
    const auto items = load_split(cfg, L, {"test"});
    const std::size_t n_panels = std::min<std::size_t>(4, items.size());
    out << "\npanels (conventional | " << m << " | truth):\n";
    for (std::size_t k = 0; k < n_panels; ++k) {
        const auto& item = items[k];
        const ParameterMaps conv = load_fit(L, item.index);
        const ParameterMaps pred = maps_from_raster(read_raster(L.prediction(cfg.mode, item.index)));
        for (const auto& q : kQuantities) {
            const RealImage a = quantity_map(conv, q), b = quantity_map(pred, q), c = quantity_map(item.truth, q);
            Window w{0.0, 1.0};
            if (q == "water" || q == "fat") w = {0.0, 1.5};
            if (q == "r2star") w = {0.0, 250.0};
            if (q == "offres") w = {-200.0, 200.0};
            const fs::path p = L.report() / "panels" / (stem(item.index) + "_" + q + ".pgm");
            write_pgm(p, hstack({a, b, c}), w);
            out << "  " << p.lexically_relative(L.root).string() << "\n";
        }
    }
    write_text(L.report() / "summary.txt", out.str());
    say(ctx) << out.str();
}

}  // namespace wfsep
