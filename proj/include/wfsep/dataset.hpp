#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wfsep/nn/tensor.hpp"
#include "wfsep/rng.hpp"
#include "wfsep/types.hpp"

namespace wfsep {

enum class InputMode { Complex12, Magnitude12, Complex1, Magnitude1 };

std::size_t input_channels(InputMode mode);
std::string mode_name(InputMode mode);
/// Accepts complex12, magnitude12, complex1, magnitude1 (any case).
InputMode parse_mode(const std::string& text);

/// Number of target channels: water, fat, r2star, offres.
inline constexpr std::size_t kTargetChannels = 4;

/// Complex12: [re e0, im e0, re e1, im e1, ...]; Magnitude12: [|e0|, ..., |e11|];
/// Complex1: [re e0, im e0]; Magnitude1: [|e0|].
nn::Tensor assemble_input(const EchoSeries& series, InputMode mode);

/// Channels in the order water, fat, r2star, offres.
nn::Tensor maps_to_target(const ParameterMaps& maps);
/// Inverse of maps_to_target. Negative water/fat/r2star predictions are clipped
/// to zero so the result is a valid ParameterMaps.
ParameterMaps target_to_maps(const nn::Tensor& target, const Mask& mask);

struct Sample {
    nn::Tensor input;
    nn::Tensor target;
    std::string provenance;
};

struct NormStats {
    std::vector<double> input_mean, input_std;
    std::vector<double> target_mean, target_std;
    std::size_t count = 0;
};

inline constexpr std::size_t kNormStatsSamples = 200;
inline constexpr double kStdFloor = 1e-6;

/// Per-channel population mean/std over every pixel of the first
/// min(limit, samples.size()) samples.
NormStats compute_norm_stats(std::span<const Sample> samples, std::size_t limit = kNormStatsSamples);

nn::Tensor normalize_input(const nn::Tensor& input, const NormStats& stats);
nn::Tensor normalize_target(const nn::Tensor& target, const NormStats& stats);
Sample normalize(const Sample& sample, const NormStats& stats);
/// Maps a normalised network output back to physical units.
nn::Tensor denormalize(const nn::Tensor& prediction, const NormStats& stats);

enum class Mirror { None, Horizontal, Vertical, Both };

nn::Tensor mirror(const nn::Tensor& t, Mirror which);
Sample augment_mirror(const Sample& sample, Mirror which);
Mirror draw_mirror(Rng& rng);

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

/// First train, then validation, then test, in the ratio 9:1:3. Validation and
/// test sizes are rounded; train takes the remainder.
SplitIndices split(std::size_t corpus_size);

}  // namespace wfsep
