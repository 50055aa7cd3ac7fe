#include "wfsep/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace wfsep {

std::size_t input_channels(InputMode mode) {
    switch (mode) {
        case InputMode::Complex12: return 24;
        case InputMode::Magnitude12: return 12;
        case InputMode::Complex1: return 2;
        case InputMode::Magnitude1: return 1;
    }
    throw ValidationError("unknown input mode");
}

std::string mode_name(InputMode mode) {
    switch (mode) {
        case InputMode::Complex12: return "complex12";
        case InputMode::Magnitude12: return "magnitude12";
        case InputMode::Complex1: return "complex1";
        case InputMode::Magnitude1: return "magnitude1";
    }
    throw ValidationError("unknown input mode");
}

InputMode parse_mode(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    for (auto m : {InputMode::Complex12, InputMode::Magnitude12, InputMode::Complex1, InputMode::Magnitude1})
        if (mode_name(m) == t) return m;
    throw ValidationError("unknown input mode '" + text + "'");
}

nn::Tensor assemble_input(const EchoSeries& series, InputMode mode) {
    const bool complex = mode == InputMode::Complex12 || mode == InputMode::Complex1;
    const std::size_t echoes = (mode == InputMode::Complex12 || mode == InputMode::Magnitude12) ? 12 : 1;
    if (series.echo_count() < echoes)
        throw ValidationError(mode_name(mode) + " needs " + std::to_string(echoes) + " echoes, series has " +
                              std::to_string(series.echo_count()));
    const std::size_t H = series.rows(), W = series.cols();
    nn::Tensor t(input_channels(mode), H, W);
    for (std::size_t n = 0; n < echoes; ++n) {
        for (std::size_t r = 0; r < H; ++r) {
            for (std::size_t c = 0; c < W; ++c) {
                const cdouble v = series.at(n, r, c);
                if (complex) {
                    t.at(2 * n, r, c) = v.real();
                    t.at(2 * n + 1, r, c) = v.imag();
                } else {
                    t.at(n, r, c) = std::abs(v);
                }
            }
        }
    }
    return t;
}

nn::Tensor maps_to_target(const ParameterMaps& maps) {
    nn::Tensor t(kTargetChannels, maps.rows(), maps.cols());
    const RealImage* src[] = {&maps.water, &maps.fat, &maps.r2star, &maps.offres};
    for (std::size_t k = 0; k < kTargetChannels; ++k) std::copy_n(src[k]->values().begin(), src[k]->size(), t.plane(k).begin());
    return t;
}

ParameterMaps target_to_maps(const nn::Tensor& target, const Mask& mask) {
    if (target.channels != kTargetChannels) throw ValidationError("target needs four channels");
    if (mask.rows() != target.height || mask.cols() != target.width) throw ValidationError("mask shape mismatch");
    ParameterMaps maps(target.height, target.width);
    RealImage* dst[] = {&maps.water, &maps.fat, &maps.r2star, &maps.offres};
    for (std::size_t k = 0; k < kTargetChannels; ++k) {
        auto plane = target.plane(k);
        for (std::size_t i = 0; i < plane.size(); ++i) {
            if (!std::isfinite(plane[i])) throw NumericError("non-finite network output");
            (*dst[k])[i] = k < 3 ? std::max(plane[i], 0.0) : plane[i];
        }
    }
    maps.mask = mask;
    return maps;
}

namespace {

void channel_stats(std::span<const Sample> samples, bool input, std::vector<double>& mean, std::vector<double>& sd) {
    const nn::Tensor& first = input ? samples[0].input : samples[0].target;
    const std::size_t C = first.channels;
    mean.assign(C, 0.0);
    sd.assign(C, 0.0);
    std::vector<double> n(C, 0.0);
    for (const auto& s : samples) {
        const nn::Tensor& t = input ? s.input : s.target;
        if (t.channels != C) throw ValidationError("samples disagree in channel count");
        for (std::size_t c = 0; c < C; ++c)
            for (double x : t.plane(c)) {
                mean[c] += x;
                n[c] += 1.0;
            }
    }
    for (std::size_t c = 0; c < C; ++c) mean[c] /= n[c];
    for (const auto& s : samples) {
        const nn::Tensor& t = input ? s.input : s.target;
        for (std::size_t c = 0; c < C; ++c)
            for (double x : t.plane(c)) sd[c] += (x - mean[c]) * (x - mean[c]);
    }
    for (std::size_t c = 0; c < C; ++c) sd[c] = std::max(std::sqrt(sd[c] / n[c]), kStdFloor);
}

nn::Tensor apply_affine(const nn::Tensor& t, const std::vector<double>& mean, const std::vector<double>& sd,
                        bool forward) {
    if (t.channels != mean.size() || t.channels != sd.size())
        throw ValidationError("normalisation statistics have the wrong channel count");
    nn::Tensor out = t;
    for (std::size_t c = 0; c < t.channels; ++c)
        for (double& x : out.plane(c)) x = forward ? (x - mean[c]) / sd[c] : x * sd[c] + mean[c];
    return out;
}

}  // namespace

NormStats compute_norm_stats(std::span<const Sample> samples, std::size_t limit) {
    const std::size_t k = std::min(limit, samples.size());
    if (k == 0) throw ValidationError("normalisation statistics need at least one sample");
    NormStats st;
    channel_stats(samples.first(k), true, st.input_mean, st.input_std);
    channel_stats(samples.first(k), false, st.target_mean, st.target_std);
    st.count = k;
    return st;
}

nn::Tensor normalize_input(const nn::Tensor& input, const NormStats& stats) {
    return apply_affine(input, stats.input_mean, stats.input_std, true);
}

nn::Tensor normalize_target(const nn::Tensor& target, const NormStats& stats) {
    return apply_affine(target, stats.target_mean, stats.target_std, true);
}

Sample normalize(const Sample& sample, const NormStats& stats) {
    return Sample{normalize_input(sample.input, stats), normalize_target(sample.target, stats), sample.provenance};
}

nn::Tensor denormalize(const nn::Tensor& prediction, const NormStats& stats) {
    return apply_affine(prediction, stats.target_mean, stats.target_std, false);
}

nn::Tensor mirror(const nn::Tensor& t, Mirror which) {
    if (which == Mirror::None) return t;
    const bool h = which == Mirror::Horizontal || which == Mirror::Both;
    const bool v = which == Mirror::Vertical || which == Mirror::Both;
    nn::Tensor out(t.channels, t.height, t.width);
    for (std::size_t c = 0; c < t.channels; ++c)
        for (std::size_t y = 0; y < t.height; ++y)
            for (std::size_t x = 0; x < t.width; ++x)
                out.at(c, v ? t.height - 1 - y : y, h ? t.width - 1 - x : x) = t.at(c, y, x);
    return out;
}

Sample augment_mirror(const Sample& sample, Mirror which) {
    return Sample{mirror(sample.input, which), mirror(sample.target, which), sample.provenance};
}

Mirror draw_mirror(Rng& rng) { return static_cast<Mirror>(rng.below(4)); }

SplitIndices split(std::size_t corpus_size) {
    if (corpus_size < 13) throw ValidationError("corpus needs at least 13 samples for a 9:1:3 split");
    const auto n = static_cast<double>(corpus_size);
    const auto val = static_cast<std::size_t>(std::llround(n / 13.0));
    const auto test = static_cast<std::size_t>(std::llround(3.0 * n / 13.0));
    const std::size_t train = corpus_size - val - test;
    SplitIndices s;
    for (std::size_t i = 0; i < corpus_size; ++i) (i < train ? s.train : i < train + val ? s.val : s.test).push_back(i);
    return s;
}

}  // namespace wfsep
