#include "wfsep/nn/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

#include "wfsep/error.hpp"
#include "wfsep/rng.hpp"

namespace wfsep::nn {

double train_step(UNetModel& model, std::span<const Sample> batch, const TrainConfig& config) {
    if (batch.empty()) throw ValidationError("empty training batch");
    const std::uint64_t t = model.step + 1;
    const double scale = 1.0 / static_cast<double>(batch.size());
    std::vector<double> grads(model.params.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        ForwardCache cache;
        const Tensor out = forward(model, batch[i].input, true, derive_seed(config.seed, t, i), &cache);
        LossResult l = mse_loss(out, batch[i].target);
        for (double& g : l.grad.data) g *= scale;
        const std::vector<double> gi = backward(model, cache, l.grad);
        for (std::size_t k = 0; k < grads.size(); ++k) grads[k] += gi[k];
        loss += l.loss * scale;
    }
    if (!std::isfinite(loss)) throw NumericError("training loss is not finite");
    nadam_step(model.params, grads, model.m, model.v, t, config);
    model.step = t;
    return loss;
}

double evaluate_loss(const UNetModel& model, std::span<const Sample> samples) {
    if (samples.empty()) throw ValidationError("empty evaluation set");
    double loss = 0.0;
    for (const auto& s : samples) loss += mse_loss(forward(model, s.input, false, 0), s.target).loss;
    return loss / static_cast<double>(samples.size());
}

History train(UNetModel& model, std::span<const Sample> train_set, std::span<const Sample> val_set,
              const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.empty()) throw ValidationError("empty training set");
    History history;
    std::vector<std::size_t> order(train_set.size());
    std::vector<Sample> batch;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(derive_seed(config.seed, 0x5348554646ULL, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

        double sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t j = start; j < end; ++j) {
                const std::size_t idx = order[j];
                if (config.augment_mirror) {
                    Rng r(derive_seed(derive_seed(config.seed, 0x4D4952524FULL, static_cast<std::uint64_t>(epoch)), idx));
                    batch.push_back(augment_mirror(train_set[idx], draw_mirror(r)));
                } else {
                    batch.push_back(train_set[idx]);
                }
            }
            sum += train_step(model, batch, config) * static_cast<double>(batch.size());
            seen += batch.size();
        }
        EpochRecord rec{epoch, sum / static_cast<double>(seen), std::numeric_limits<double>::quiet_NaN()};
        if (!val_set.empty() && (epoch % config.validation_every == 0 || epoch == config.epochs))
            rec.val_loss = evaluate_loss(model, val_set);
        history.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return history;
}

void write_history_csv(const std::string& path, const History& history) {
    std::ofstream f(path);
    if (!f) throw IoError(path, "cannot write training history");
    f << "epoch,train_loss,val_loss\n" << std::setprecision(17);
    for (const auto& r : history) {
        f << r.epoch << ',' << r.train_loss << ',';
        if (std::isfinite(r.val_loss)) f << r.val_loss;
        f << '\n';
    }
    if (!f) throw IoError(path, "failed writing training history");
}

}  // namespace wfsep::nn
