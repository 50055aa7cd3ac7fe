#include <cmath>
#include <sstream>

#include "wfsep/pipeline.hpp"

namespace wfsep {

FitOptions RunConfig::default_corpus_fit() {
    FitOptions f;
    // Mean echo magnitude of pure noise is sigma * sqrt(pi / 2) ~ 0.10 at the
    // default sigma; tissue sits well above 0.18.
    f.signal_threshold = 0.18;
    return f;
}

namespace {

std::size_t count_key(const Config& c, const std::string& key, std::size_t fallback) {
    const auto v = c.integer(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

GridRange grid_key(const Config& c, const std::string& prefix, const GridRange& fallback) {
    return GridRange{c.number(prefix + "_min", fallback.min), c.number(prefix + "_max", fallback.max),
                     c.number(prefix + "_step", fallback.step)};
}

}  // namespace

RunConfig RunConfig::from_config(const Config& c) {
    RunConfig r;
    const auto seed = c.integer("run.seed", static_cast<std::int64_t>(r.seed));
    if (seed < 0) throw ConfigError("run.seed must be non-negative");
    r.seed = static_cast<std::uint64_t>(seed);
    r.output_dir = c.text("run.output_dir", r.output_dir.string());
    try {
        r.mode = parse_mode(c.text("run.mode", mode_name(r.mode)));
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    r.deterministic = c.boolean("run.deterministic", r.deterministic);
    const auto targets = c.text("run.targets", "conventional");
    if (targets == "conventional")
        r.targets = TargetSource::Conventional;
    else if (targets == "truth")
        r.targets = TargetSource::Truth;
    else
        throw ConfigError("run.targets must be \"conventional\" or \"truth\"");

    auto& co = r.corpus;
    co.size = count_key(c, "corpus.size", co.size);
    co.noise_sigma = c.number("corpus.noise_sigma", co.noise_sigma);
    co.bipolar_probability = c.number("corpus.bipolar_probability", co.bipolar_probability);
    co.bipolar.phi0 = c.number("corpus.bipolar_phi0", co.bipolar.phi0);
    co.bipolar.phi1 = c.number("corpus.bipolar_phi1", co.bipolar.phi1);
    co.foldover_probability = c.number("corpus.foldover_probability", co.foldover_probability);
    co.foldover_min = c.number("corpus.foldover_min", co.foldover_min);
    co.foldover_max = c.number("corpus.foldover_max", co.foldover_max);

    auto& pr = co.ranges;
    pr.size = count_key(c, "phantom.size", pr.size);
    pr.max_fat_lesions = count_key(c, "phantom.max_fat_lesions", pr.max_fat_lesions);
    pr.max_hemorrhages = count_key(c, "phantom.max_hemorrhages", pr.max_hemorrhages);
    pr.pdff_min = c.number("phantom.pdff_min", pr.pdff_min);
    pr.pdff_max = c.number("phantom.pdff_max", pr.pdff_max);
    pr.hemorrhage_r2_min = c.number("phantom.hemorrhage_r2star_min", pr.hemorrhage_r2_min);
    pr.hemorrhage_r2_max = c.number("phantom.hemorrhage_r2star_max", pr.hemorrhage_r2_max);
    pr.lesion_radius_min = c.number("phantom.lesion_radius_min", pr.lesion_radius_min);
    pr.lesion_radius_max = c.number("phantom.lesion_radius_max", pr.lesion_radius_max);
    pr.offres_max_hz = c.number("phantom.offres_max_hz", pr.offres_max_hz);
    pr.gain_min = c.number("phantom.gain_min", pr.gain_min);
    pr.gain_max = c.number("phantom.gain_max", pr.gain_max);
    pr.position_jitter = c.number("phantom.position_jitter", pr.position_jitter);
    pr.value_jitter = c.number("phantom.value_jitter", pr.value_jitter);

    auto& f = r.fit;
    f.offres = grid_key(c, "fit.offres", f.offres);
    f.r2star = grid_key(c, "fit.r2star", f.r2star);
    f.refinement_iterations = static_cast<int>(c.integer("fit.refinement_iterations", f.refinement_iterations));
    f.smoothness_lambda = c.number("fit.smoothness_lambda", f.smoothness_lambda);
    f.icm_sweeps = static_cast<int>(c.integer("fit.icm_sweeps", f.icm_sweeps));
    f.signal_threshold = c.number("fit.signal_threshold", f.signal_threshold);

    auto& u = r.unet;
    u.levels = count_key(c, "unet.levels", u.levels);
    u.base_features = count_key(c, "unet.base_features", u.base_features);
    u.dropout_rate = c.number("unet.dropout_rate", u.dropout_rate);
    u.image_size = pr.size;
    u.in_channels = input_channels(r.mode);
    u.out_channels = kTargetChannels;

    auto& t = r.train;
    t.epochs = static_cast<int>(c.integer("train.epochs", t.epochs));
    t.batch_size = count_key(c, "train.batch_size", t.batch_size);
    t.learning_rate = c.number("train.learning_rate", t.learning_rate);
    t.beta1 = c.number("train.beta1", t.beta1);
    t.beta2 = c.number("train.beta2", t.beta2);
    t.epsilon = c.number("train.epsilon", t.epsilon);
    t.validation_every = static_cast<int>(c.integer("train.validation_every", t.validation_every));
    t.augment_mirror = c.boolean("train.augment_mirror", t.augment_mirror);
    t.seed = derive_seed(r.seed, 0x545241494EULL);

    const auto unused = c.unused_keys();
    if (!unused.empty()) {
        std::string msg = "unknown config key";
        msg += unused.size() > 1 ? "s:" : ":";
        for (const auto& k : unused) msg += " " + k;
        throw ConfigError(msg);
    }
    try {
        r.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    return r;
}

void RunConfig::validate() const {
    if (corpus.size == 0) throw ValidationError("corpus size must be positive");
    if (!(corpus.noise_sigma >= 0.0)) throw ValidationError("noise sigma must be >= 0");
    for (double p : {corpus.bipolar_probability, corpus.foldover_probability})
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("corruption probabilities must lie in [0, 1]");
    if (!(corpus.foldover_min > 0.0 && corpus.foldover_min <= corpus.foldover_max && corpus.foldover_max < 0.5))
        throw ValidationError("fold-over fractions need 0 < min <= max < 0.5");
    if (!std::isfinite(corpus.bipolar.phi0) || !std::isfinite(corpus.bipolar.phi1))
        throw ValidationError("bipolar phase must be finite");
    const auto& pr = corpus.ranges;
    if (pr.size < 32) throw ValidationError("phantom size must be at least 32");
    if (!(pr.pdff_min >= 0.0 && pr.pdff_min <= pr.pdff_max && pr.pdff_max <= 1.0))
        throw ValidationError("phantom pdff range must lie in [0, 1]");
    if (!(pr.gain_min > 0.0 && pr.gain_min <= pr.gain_max)) throw ValidationError("phantom gain range invalid");
    if (!(pr.offres_max_hz >= 0.0)) throw ValidationError("phantom offres bound must be >= 0");
    fit.validate();
    unet.validate();
    train.validate();
}

std::string RunConfig::to_toml() const {
    std::ostringstream o;
    o.precision(17);
    auto q = [](const std::string& s) { return "\"" + s + "\""; };
    o << "[run]\nseed = " << seed << "\noutput_dir = " << q(output_dir.string()) << "\nmode = " << q(mode_name(mode))
      << "\ndeterministic = " << (deterministic ? "true" : "false")
      << "\ntargets = " << q(targets == TargetSource::Truth ? "truth" : "conventional") << "\n\n";
    o << "[corpus]\nsize = " << corpus.size << "\nnoise_sigma = " << corpus.noise_sigma
      << "\nbipolar_probability = " << corpus.bipolar_probability << "\nbipolar_phi0 = " << corpus.bipolar.phi0
      << "\nbipolar_phi1 = " << corpus.bipolar.phi1 << "\nfoldover_probability = " << corpus.foldover_probability
      << "\nfoldover_min = " << corpus.foldover_min << "\nfoldover_max = " << corpus.foldover_max << "\n\n";
    const auto& pr = corpus.ranges;
    o << "[phantom]\nsize = " << pr.size << "\nmax_fat_lesions = " << pr.max_fat_lesions
      << "\nmax_hemorrhages = " << pr.max_hemorrhages << "\npdff_min = " << pr.pdff_min << "\npdff_max = " << pr.pdff_max
      << "\nhemorrhage_r2star_min = " << pr.hemorrhage_r2_min << "\nhemorrhage_r2star_max = " << pr.hemorrhage_r2_max
      << "\nlesion_radius_min = " << pr.lesion_radius_min << "\nlesion_radius_max = " << pr.lesion_radius_max
      << "\noffres_max_hz = " << pr.offres_max_hz << "\ngain_min = " << pr.gain_min << "\ngain_max = " << pr.gain_max
      << "\nposition_jitter = " << pr.position_jitter << "\nvalue_jitter = " << pr.value_jitter << "\n\n";
    o << "[fit]\noffres_min = " << fit.offres.min << "\noffres_max = " << fit.offres.max
      << "\noffres_step = " << fit.offres.step << "\nr2star_min = " << fit.r2star.min << "\nr2star_max = " << fit.r2star.max
      << "\nr2star_step = " << fit.r2star.step << "\nrefinement_iterations = " << fit.refinement_iterations
      << "\nsmoothness_lambda = " << fit.smoothness_lambda << "\nicm_sweeps = " << fit.icm_sweeps
      << "\nsignal_threshold = " << fit.signal_threshold << "\n\n";
    o << "[unet]\nlevels = " << unet.levels << "\nbase_features = " << unet.base_features
      << "\ndropout_rate = " << unet.dropout_rate << "\n\n";
    o << "[train]\nepochs = " << train.epochs << "\nbatch_size = " << train.batch_size
      << "\nlearning_rate = " << train.learning_rate << "\nbeta1 = " << train.beta1 << "\nbeta2 = " << train.beta2
      << "\nepsilon = " << train.epsilon << "\nvalidation_every = " << train.validation_every
      << "\naugment_mirror = " << (train.augment_mirror ? "true" : "false") << "\n";
    return o.str();
}

}  // namespace wfsep
