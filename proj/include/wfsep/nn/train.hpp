#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wfsep/dataset.hpp"
#include "wfsep/nn/optimizer.hpp"
#include "wfsep/nn/unet.hpp"

namespace wfsep::nn {

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;  // NaN on epochs without validation
};

using History = std::vector<EpochRecord>;

/// One optimizer step on the mean MSE of a batch. Increments model.step; sample i
/// of the batch uses dropout seed derive_seed(config.seed, model.step, i).
/// Returns the mean batch loss.
double train_step(UNetModel& model, std::span<const Sample> batch, const TrainConfig& config);

/// Mean MSE in inference mode.
double evaluate_loss(const UNetModel& model, std::span<const Sample> samples);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Each epoch visits train_set in an order shuffled by a stream derived from
/// (seed, epoch), mirrors each sample with a draw from a stream derived from
/// (seed, epoch, index) and steps once per batch. The last batch of an epoch may be smaller.
History train(UNetModel& model, std::span<const Sample> train_set, std::span<const Sample> val_set,
              const TrainConfig& config, const EpochCallback& on_epoch = {});

void write_history_csv(const std::string& path, const History& history);

}  // namespace wfsep::nn
