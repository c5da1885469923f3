#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "llc/data/dataset.hpp"
#include "llc/numerics/rng.hpp"
#include "llc/samplers/objective.hpp"

namespace llc {

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 500;
    std::size_t steps = 50'000;
    std::uint64_t seed = 0;

    void validate(std::size_t rows) const {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("TrainConfig: learning rate must be finite and >= 0");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("TrainConfig: momentum must lie in [0,1)");
        if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch size must be positive");
        if (rows > 1 && batch_size > rows) throw std::invalid_argument("TrainConfig: batch size exceeds the dataset");
    }
};

/// Thrown when the training loss stops being finite; carries the curve so far.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t step, std::vector<double> losses)
        : std::runtime_error("training diverged at step " + std::to_string(step)), step_(step), losses_(std::move(losses)) {}

    std::size_t step() const noexcept { return step_; }
    const std::vector<double>& losses() const noexcept { return losses_; }

private:
    std::size_t step_;
    std::vector<double> losses_;
};

struct TrainResult {
    std::vector<double> params;
    std::vector<double> losses;  ///< minibatch loss before each update
};

/// Heavy-ball SGD on minibatch losses: v <- mu v - lr g, w <- w + v.
template <Objective Obj>
TrainResult sgd_train(Obj objective, std::span<const double> w_init, const TrainConfig& cfg) {
    if (w_init.size() != objective.dimension())
        throw std::invalid_argument("sgd_train: initial parameter has " + std::to_string(w_init.size()) + " entries, expected " +
                                    std::to_string(objective.dimension()));
    const std::size_t rows = objective.row_count();
    cfg.validate(rows);
    Rng rng(cfg.seed);
    MinibatchSchedule schedule(rows, std::min(cfg.batch_size, rows), rng);

    TrainResult res;
    res.params.assign(w_init.begin(), w_init.end());
    res.losses.reserve(cfg.steps);
    std::vector<double> velocity(res.params.size(), 0.0), grad(res.params.size());
    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const double loss = objective.batch_loss_grad(res.params, schedule.next_batch(), grad);
        res.losses.push_back(loss);
        if (!std::isfinite(loss)) throw TrainingDiverged(t, std::move(res.losses));
        for (std::size_t i = 0; i < velocity.size(); ++i) {
            velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * grad[i];
            res.params[i] += velocity[i];
        }
    }
    return res;
}

/// Trains a network from an i.i.d. random initialisation drawn with `init_seed`.
inline TrainResult train_model(const ModelSpec& spec, std::shared_ptr<const Dataset> data, const TrainConfig& cfg,
                               WeightScale init_scale = WeightScale::unit) {
    Rng init_rng = Rng(cfg.seed).derive(1);
    const auto w0 = random_parameter(spec, init_rng, init_scale);
    return sgd_train(ModelObjective(spec, std::move(data)), w0, cfg);
}

}  // namespace llc
