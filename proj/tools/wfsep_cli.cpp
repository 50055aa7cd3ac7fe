#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wfsep/error.hpp"
#include "wfsep/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed;
    std::string mode;
    bool deterministic = false;
    bool quiet = false;
};

wfsep::RunConfig resolve(const Options& o) {
    wfsep::Config c = o.config_path.empty() ? wfsep::Config{} : wfsep::Config::load(o.config_path);
    for (const auto& kv : o.overrides) c.set_override(kv);
    if (!o.seed.empty()) c.set_override("run.seed=" + o.seed);
    if (!o.mode.empty()) c.set_override("run.mode=\"" + o.mode + "\"");
    if (o.deterministic) c.set_override("run.deterministic=true");
    return wfsep::RunConfig::from_config(c);
}

int run(void (*command)(const wfsep::CommandContext&), const Options& o) {
    try {
        wfsep::CommandContext ctx{resolve(o), o.quiet ? nullptr : &std::cerr};
        command(ctx);
        return kOk;
    } catch (const wfsep::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const wfsep::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumeric;
    } catch (const wfsep::DegenerateFitError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumeric;
    } catch (const wfsep::Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Water-fat separation: phantom corpus, conventional fit, U-Net training and evaluation"};
    app.require_subcommand(1);

    Options o;
    const std::vector<std::pair<std::string, void (*)(const wfsep::CommandContext&)>> commands = {
        {"phantom", wfsep::cmd_phantom}, {"fit", wfsep::cmd_fit},   {"train", wfsep::cmd_train},
        {"predict", wfsep::cmd_predict}, {"eval", wfsep::cmd_eval}, {"report", wfsep::cmd_report},
    };
    const std::vector<std::string> help = {
        "generate the synthetic corpus and manifest",
        "run the conventional separation on every series",
        "train the U-Net for the configured mode",
        "predict maps for the test split",
        "predict and compare against conventional fits and ground truth",
        "write the summary and image panels",
    };

    int code = kOk;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        auto* sub = app.add_subcommand(commands[i].first, help[i]);
        sub->add_option("-c,--config", o.config_path, "TOML run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "global seed (u64)");
        sub->add_option("--mode", o.mode, "input mode")
            ->check(CLI::IsMember({"complex12", "magnitude12", "complex1", "magnitude1"}));
        sub->add_flag("--deterministic", o.deterministic, "force sequential reference paths");
        sub->add_option("--set", o.overrides, "override a config key, e.g. --set train.epochs=20");
        sub->add_flag("-q,--quiet", o.quiet, "suppress progress output");
        sub->callback([&, fn = commands[i].second] { code = run(fn, o); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    return code;
}
