#include <cmath>

#include <json.hpp>

#include "wfsep/pipeline.hpp"

namespace wfsep {

namespace {

enum Stream : std::uint64_t { kSpecStream = 1, kPhantomStream = 2, kNoiseStream = 3, kCorruptionStream = 4 };

EchoSeries with_bipolar_flag(const EchoSeries& s) {
    const auto& p = s.protocol();
    AcquisitionProtocol flagged(p.echo_times(), p.field_strength(), p.fat_spectrum(), true);
    return EchoSeries(flagged, s.rows(), s.cols(), std::vector<cdouble>(s.data().begin(), s.data().end()));
}

}  // namespace

PhantomSpec corpus_spec(const CorpusOptions& options, std::uint64_t seed, std::size_t index) {
    Rng spec_rng(derive_seed(seed, kSpecStream, index));
    return sample_phantom_spec(options.ranges, spec_rng);
}

CorpusItem make_corpus_item(const CorpusOptions& options, std::uint64_t seed, std::size_t index,
                            const std::string& split, bool allow_corruption) {
    const PhantomSpec spec = corpus_spec(options, seed, index);
    const std::uint64_t phantom_seed = derive_seed(seed, kPhantomStream, index);
    const std::uint64_t noise_seed = derive_seed(seed, kNoiseStream, index);

    ParameterMaps truth = generate_phantom(spec, phantom_seed);
    const EchoSeries noisy =
        add_noise(simulate_series(truth, AcquisitionProtocol::standard()), NoiseSpec{options.noise_sigma, noise_seed});

    CorpusItem item{index, phantom_seed, noise_seed, realize_phantom(spec, phantom_seed), std::move(truth),
                    noisy, std::nullopt, std::nullopt, std::nullopt, split};

    // Three draws always, so the stream does not depend on the probabilities.
    Rng c(derive_seed(seed, kCorruptionStream, index));
    const double u_bipolar = c.uniform(), u_fold = c.uniform(), u_frac = c.uniform();
    if (!allow_corruption) return item;
    std::optional<BipolarErrorSpec> bipolar;
    std::optional<double> fold;
    if (u_bipolar < options.bipolar_probability) bipolar = options.bipolar;
    if (u_fold < options.foldover_probability)
        fold = options.foldover_min + u_frac * (options.foldover_max - options.foldover_min);
    if (!bipolar && !fold) return item;
    return corrupt_item(item, bipolar, fold);
}

CorpusItem corrupt_item(const CorpusItem& clean, const std::optional<BipolarErrorSpec>& bipolar,
                        const std::optional<double>& foldover) {
    CorpusItem item = clean;
    if (bipolar) {
        item.series = with_bipolar_flag(apply_bipolar_error(item.series, *bipolar));
        item.bipolar = bipolar;
    }
    if (foldover) {
        item.fit_series = item.series;
        item.series = apply_foldover(item.series, *foldover);
        item.foldover = foldover;
    }
    return item;
}

std::vector<CorpusItem> make_corpus(const RunConfig& config) {
    const SplitIndices s = split(config.corpus.size);
    std::vector<CorpusItem> items;
    items.reserve(config.corpus.size);
    for (std::size_t i = 0; i < config.corpus.size; ++i) {
        const bool test = i >= s.train.size() + s.val.size();
        const char* name = test ? "test" : i < s.train.size() ? "train" : "val";
        items.push_back(make_corpus_item(config.corpus, config.seed, i, name, !test));
    }
    return items;
}

ParameterMaps teacher_fit(const CorpusItem& item, const FitOptions& options, FitLog* log) {
    const EchoSeries& s = item.fit_series ? *item.fit_series : item.series;
    if (s.protocol().bipolar()) {
        std::vector<FitLog> logs;
        ParameterMaps maps = separate_even_odd(s, options, &logs);
        if (log) {
            *log = logs.front();
            log->route = "even_odd";
            log->mean_residual = 0.5 * (logs[0].mean_residual + logs[1].mean_residual);
            log->max_residual = std::max(logs[0].max_residual, logs[1].max_residual);
        }
        return maps;
    }
    return separate(s, options, log);
}

Sample make_sample(const CorpusItem& item, const ParameterMaps& target, InputMode mode) {
    std::string prov = "index=" + std::to_string(item.index) + " phantom_seed=" + std::to_string(item.phantom_seed) +
                       " noise_seed=" + std::to_string(item.noise_seed);
    if (item.bipolar) prov += " bipolar_phi0=" + std::to_string(item.bipolar->phi0);
    if (item.foldover) prov += " foldover=" + std::to_string(*item.foldover);
    return Sample{assemble_input(item.series, mode), maps_to_target(target), prov};
}

ParameterMaps predict_maps(const nn::UNetModel& model, const NormStats& stats, const EchoSeries& series,
                           InputMode mode, double signal_threshold) {
    const nn::Tensor in = normalize_input(assemble_input(series, mode), stats);
    const nn::Tensor out = denormalize(nn::forward(model, in, false, 0), stats);
    return target_to_maps(out, signal_mask(series, signal_threshold));
}

std::vector<Roi> item_rois(const CorpusItem& item) {
    std::vector<Roi> rois = phantom_rois(item.realized);
    if (item.foldover) {
        const std::size_t H = item.truth.rows(), W = item.truth.cols();
        const std::size_t shift = foldover_shift_rows(*item.foldover, H);
        for (auto& roi : rois)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x)
                    if (item.truth.mask((y + shift) % H, x)) roi.mask(y, x) = 0;
    }
    std::erase_if(rois, [](const Roi& r) { return count(r.mask) == 0; });
    return rois;
}

std::string norm_stats_json(const NormStats& stats) {
    nlohmann::ordered_json j;
    j["count"] = stats.count;
    j["input_mean"] = stats.input_mean;
    j["input_std"] = stats.input_std;
    j["target_mean"] = stats.target_mean;
    j["target_std"] = stats.target_std;
    return j.dump(2) + "\n";
}

NormStats parse_norm_stats(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        NormStats s;
        s.count = j.at("count").get<std::size_t>();
        s.input_mean = j.at("input_mean").get<std::vector<double>>();
        s.input_std = j.at("input_std").get<std::vector<double>>();
        s.target_mean = j.at("target_mean").get<std::vector<double>>();
        s.target_std = j.at("target_std").get<std::vector<double>>();
        if (s.input_mean.size() != s.input_std.size() || s.target_mean.size() != s.target_std.size())
            throw ParseError("normalisation statistics have mismatched lengths");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad normalisation statistics: ") + e.what());
    }
}

}  // namespace wfsep
