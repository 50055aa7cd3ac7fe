#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wfsep/config.hpp"
#include "wfsep/conventional_fit.hpp"
#include "wfsep/dataset.hpp"
#include "wfsep/nn/optimizer.hpp"
#include "wfsep/nn/train.hpp"
#include "wfsep/nn/unet.hpp"
#include "wfsep/phantom.hpp"
#include "wfsep/signal_model.hpp"

namespace wfsep {

enum class TargetSource { Conventional, Truth };

struct CorpusOptions {
    std::size_t size = 1300;
    double noise_sigma = 0.08;
    // Corruptions are drawn per sample for the training and validation splits only.
    double bipolar_probability = 0.0;
    BipolarErrorSpec bipolar{0.5, 0.0};
    double foldover_probability = 0.0;
    double foldover_min = 0.35;
    double foldover_max = 0.45;
    PhantomRanges ranges;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "run";
    InputMode mode = InputMode::Complex12;
    bool deterministic = false;
    TargetSource targets = TargetSource::Conventional;
    CorpusOptions corpus;
    FitOptions fit = default_corpus_fit();
    nn::UNetConfig unet;
    nn::TrainConfig train;

    /// Fit options matched to the default corpus noise level.
    static FitOptions default_corpus_fit();

    /// Reads every recognised key; any key left unread is a ConfigError.
    static RunConfig from_config(const Config& config);
    void validate() const;
    /// Flat dotted-key dump that from_config reads back to the same values.
    std::string to_toml() const;
};

/// One synthetic study: ground truth, the series the network sees, and the
/// series the conventional teacher fits (differs only under fold-over).
struct CorpusItem {
    std::size_t index = 0;
    std::uint64_t phantom_seed = 0;
    std::uint64_t noise_seed = 0;
    PhantomSpec realized;
    ParameterMaps truth;
    EchoSeries series;
    std::optional<EchoSeries> fit_series;
    std::optional<BipolarErrorSpec> bipolar;
    std::optional<double> foldover;
    std::string split;
};

/// Anatomy of corpus item `index` before jitter.
PhantomSpec corpus_spec(const CorpusOptions& options, std::uint64_t seed, std::size_t index);

/// Seeds are derived from (seed, index) so items can be made in any order.
CorpusItem make_corpus_item(const CorpusOptions& options, std::uint64_t seed, std::size_t index,
                            const std::string& split, bool allow_corruption);

/// Clean (uncorrupted) noisy item with an explicit corruption applied on top.
CorpusItem corrupt_item(const CorpusItem& clean, const std::optional<BipolarErrorSpec>& bipolar,
                        const std::optional<double>& foldover);

std::vector<CorpusItem> make_corpus(const RunConfig& config);

/// Conventional maps used as training targets: separate, or separate_even_odd for
/// bipolar-flagged series; fits fit_series when present.
ParameterMaps teacher_fit(const CorpusItem& item, const FitOptions& options, FitLog* log = nullptr);

Sample make_sample(const CorpusItem& item, const ParameterMaps& target, InputMode mode);

/// Prediction of the four maps in physical units; mask is taken from the series.
ParameterMaps predict_maps(const nn::UNetModel& model, const NormStats& stats, const EchoSeries& series,
                           InputMode mode, double signal_threshold);

/// ROIs of an item, restricted to pixels whose fold-over partner row lies
/// outside the object when the item is folded. Empty ROIs are dropped.
std::vector<Roi> item_rois(const CorpusItem& item);

std::string norm_stats_json(const NormStats& stats);
NormStats parse_norm_stats(const std::string& json);

/// CLI-level steps. Each reads and writes run artefacts below config.output_dir.
struct CommandContext {
    RunConfig config;
    std::ostream* log = nullptr;
};

void cmd_phantom(const CommandContext& ctx);
void cmd_fit(const CommandContext& ctx);
void cmd_train(const CommandContext& ctx);
void cmd_predict(const CommandContext& ctx);
void cmd_eval(const CommandContext& ctx);
void cmd_report(const CommandContext& ctx);

}  // namespace wfsep
