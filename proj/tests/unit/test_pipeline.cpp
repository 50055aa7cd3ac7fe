#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wfsep/error.hpp"
#include "wfsep/evaluation.hpp"
#include "wfsep/pipeline.hpp"
#include "wfsep/raster.hpp"
#include "wfsep/statistics.hpp"

using namespace wfsep;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "wfsep_pipeline" / name;
    fs::remove_all(d);
    fs::create_directories(d.parent_path());
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

RunConfig small_config(const fs::path& dir, const std::string& extra = "") {
    auto c = Config::parse("[run]\noutput_dir = \"" + dir.string() +
                           "\"\n[corpus]\nsize = 13\n[train]\nepochs = 2\nbatch_size = 3\n" + extra);
    return RunConfig::from_config(c);
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

std::vector<std::string> csv_lines(const fs::path& p) {
    std::ifstream f(p);
    std::vector<std::string> lines;
    for (std::string l; std::getline(f, l);) lines.push_back(l);
    return lines;
}

}  // namespace

TEST_CASE("run config defaults, overrides and round trip") {
    const RunConfig d = RunConfig::from_config(Config{});
    CHECK(d.corpus.size == 1300);
    CHECK(d.train.epochs == 75);
    CHECK(d.unet.levels == 3);
    CHECK(d.unet.base_features == 16);
    CHECK(d.mode == InputMode::Complex12);

    auto c = Config::parse("[run]\nseed = 5\nmode = \"magnitude1\"\n[fit]\nsignal_threshold = 0.3\n");
    c.set_override("train.epochs=4");
    const RunConfig r = RunConfig::from_config(c);
    CHECK(r.seed == 5);
    CHECK(r.mode == InputMode::Magnitude1);
    CHECK(r.unet.in_channels == 1);
    CHECK(r.fit.signal_threshold == 0.3);
    CHECK(r.train.epochs == 4);

    const RunConfig back = RunConfig::from_config(Config::parse(r.to_toml()));
    CHECK(back.to_toml() == r.to_toml());

    CHECK_THROWS_AS(RunConfig::from_config(Config::parse("[train]\nepoch = 3\n")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(Config::parse("[run]\nmode = \"complex3\"\n")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(Config::parse("[train]\nepochs = 0\n")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(Config::parse("[corpus]\nfoldover_max = 0.6\n")), ConfigError);
}

TEST_CASE("corpus items are reproducible and corruptions stay out of the test split") {
    CorpusOptions o;
    o.bipolar_probability = 1.0;
    o.foldover_probability = 1.0;
    const CorpusItem a = make_corpus_item(o, 3, 4, "train", true);
    const CorpusItem b = make_corpus_item(o, 3, 4, "train", true);
    CHECK(std::equal(a.series.data().begin(), a.series.data().end(), b.series.data().begin()));
    REQUIRE(a.bipolar);
    REQUIRE(a.foldover);
    REQUIRE(a.fit_series);
    CHECK((*a.foldover >= 0.35 && *a.foldover <= 0.45));
    CHECK(a.series.protocol().bipolar());

    const CorpusItem t = make_corpus_item(o, 3, 4, "test", false);
    CHECK(!t.bipolar);
    CHECK(!t.foldover);
    CHECK(!t.fit_series);

    // Clean item plus the same corruption applied explicitly gives the same series.
    const CorpusItem again = corrupt_item(t, a.bipolar, a.foldover);
    CHECK(std::equal(again.series.data().begin(), again.series.data().end(), a.series.data().begin()));
}

TEST_CASE("fold-over ROIs avoid rows that receive the aliased copy") {
    CorpusOptions o;
    o.foldover_probability = 1.0;
    const CorpusItem item = make_corpus_item(o, 1, 0, "train", true);
    REQUIRE(item.foldover);
    const std::size_t H = item.truth.rows();
    const std::size_t shift = foldover_shift_rows(*item.foldover, H);
    for (const auto& roi : item_rois(item))
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < item.truth.cols(); ++x)
                if (roi.mask(y, x)) CHECK(!item.truth.mask((y + shift) % H, x));
}

TEST_CASE("phantom command writes a deterministic corpus") {
    const fs::path a = fresh_dir("corpus_a"), b = fresh_dir("corpus_b");
    RunConfig ca = small_config(a), cb = small_config(b);
    cmd_phantom({ca});
    cmd_phantom({cb});
    const auto ta = tree(a / "corpus"), tb = tree(b / "corpus");
    CHECK(ta == tb);
    CHECK(ta.size() == 13 * 2 + 1);

    const auto m = nlohmann::json::parse(slurp(a / "corpus" / "manifest.json"));
    CHECK(m["items"].size() == 13);
    CHECK(m["splits"]["train"] == 9);
    CHECK(m["splits"]["val"] == 1);
    CHECK(m["splits"]["test"] == 3);
    CHECK(m["items"][0]["split"] == "train");
    CHECK(m["items"][12]["split"] == "test");
    CHECK(fs::exists(a / "run_config.toml"));
}

TEST_CASE("fit command round-trips noiseless data, logs routes and is repeatable") {
    const fs::path dir = fresh_dir("fit");
    RunConfig cfg = small_config(dir, "[corpus]\nnoise_sigma = 0.0\nbipolar_probability = 1.0\n[fit]\nsignal_threshold = 0.02\n");
    cfg.corpus.bipolar = {0.0, 0.0};
    cmd_phantom({cfg});
    cmd_fit({cfg});

    const auto log = nlohmann::json::parse(slurp(dir / "fit" / "fit_log.json"));
    REQUIRE(log.size() == 13);
    for (std::size_t i = 0; i < 13; ++i) CHECK(log[i]["route"] == (i < 10 ? "even_odd" : "full"));

    for (std::size_t i : {10u, 11u}) {
        char name[32];
        std::snprintf(name, sizeof name, "%05zu", i);
        const ParameterMaps truth = maps_from_raster(read_raster(dir / "corpus" / (std::string(name) + "_truth.wras")));
        const ParameterMaps fit = maps_from_raster(read_raster(dir / "fit" / (std::string(name) + "_fit.wras")));
        const RealImage pt = pdff_map(truth), pf = pdff_map(fit);
        for (std::size_t p = 0; p < truth.mask.size(); ++p) {
            if (!truth.mask[p]) continue;
            CHECK(std::abs(pt[p] - pf[p]) <= 1e-3);
            CHECK(std::abs(truth.r2star[p] - fit.r2star[p]) <= 1.0);
            CHECK(std::abs(truth.offres[p] - fit.offres[p]) <= 1.0);
        }
    }

    const auto before = tree(dir / "fit");
    cmd_fit({cfg});
    CHECK(tree(dir / "fit") == before);
}

TEST_CASE("train, eval and report compose and are repeatable") {
    const fs::path dir = fresh_dir("flow");
    RunConfig cfg = small_config(dir);

    cmd_phantom({cfg});
    CHECK_THROWS_AS(cmd_train({cfg}), IoError);
    CHECK_THROWS_AS(cmd_eval({cfg}), IoError);
    cmd_fit({cfg});
    cmd_train({cfg});
    const fs::path model = dir / "model" / "complex12";
    const auto hist = csv_lines(model / "history.csv");
    REQUIRE(hist.size() == 3);
    CHECK(hist[0] == "epoch,train_loss,val_loss");
    const double l1 = std::stod(hist[1].substr(hist[1].find(',') + 1));
    const double l2 = std::stod(hist[2].substr(hist[2].find(',') + 1));
    CHECK(l2 < l1);

    const std::string first_hist = slurp(model / "history.csv");
    const std::string first_ckpt = slurp(model / "checkpoint.wftunet");
    cmd_train({cfg});
    CHECK(slurp(model / "history.csv") == first_hist);
    CHECK(slurp(model / "checkpoint.wftunet") == first_ckpt);

    cmd_eval({cfg});
    const auto rep = nlohmann::json::parse(slurp(dir / "eval" / "complex12_vs_conventional.json"));
    for (const auto& q : kQuantities) CHECK(rep["correlations"].contains(q));
    CHECK(fs::exists(dir / "eval" / "complex12_vs_truth.json"));
    CHECK(fs::exists(dir / "eval" / "conventional_vs_truth.csv"));
    CHECK(fs::exists(dir / "eval" / "complex12_vs_conventional_scatter.csv"));

    cmd_report({cfg});
    const std::string summary = slurp(dir / "report" / "summary.txt");
    for (const auto& q : kQuantities) CHECK(summary.find("  " + q) != std::string::npos);
    const auto report_tree = tree(dir / "report");
    CHECK(report_tree.size() > 1);
    for (const auto& [name, bytes] : report_tree) {
        if (name.rfind("panels/", 0) != 0) continue;
        std::istringstream in(bytes);
        std::string magic;
        std::size_t w = 0, h = 0;
        in >> magic >> w >> h;
        CHECK(magic == "P5");
        CHECK(w == 3 * 64);
        CHECK(h == 64);
    }
    cmd_report({cfg});
    CHECK(tree(dir / "report") == report_tree);

    // Predictions replaced by the conventional fits: every correlation is perfect.
    for (const auto& e : fs::directory_iterator(dir / "predict" / "complex12")) {
        const std::string stem = e.path().filename().string().substr(0, 5);
        fs::copy_file(dir / "fit" / (stem + "_fit.wras"), e.path(), fs::copy_options::overwrite_existing);
    }
    cmd_eval({cfg});
    const auto self = nlohmann::json::parse(slurp(dir / "eval" / "complex12_vs_conventional.json"));
    for (const auto& q : kQuantities)
        CHECK(self["correlations"][q]["pooled"]["r_squared"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

#ifdef WFSEP_CLI_PATH
TEST_CASE("command line exit codes") {
    const std::string cli = WFSEP_CLI_PATH;
    const fs::path dir = fresh_dir("cli");
    fs::create_directories(dir);
    auto run = [&](const std::string& args) {
        const int rc = std::system((cli + " " + args + " -q > /dev/null 2>&1").c_str());
        return WEXITSTATUS(rc);
    };
    CHECK(run("fit --set no.such.key=1") == 2);
    CHECK(run("fit --set train.epochs=0") == 2);
    CHECK(run("fit --set run.output_dir=" + (dir / "empty").string()) == 3);
    CHECK(run("phantom --set corpus.size=13 --set run.output_dir=" + dir.string()) == 0);
    CHECK(fs::exists(dir / "corpus" / "manifest.json"));
    CHECK(run("eval --set corpus.size=13 --set run.output_dir=" + dir.string()) == 3);
}
#endif
