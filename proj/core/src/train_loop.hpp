#ifndef L2D_SRC_TRAIN_LOOP_HPP
#define L2D_SRC_TRAIN_LOOP_HPP

// Internal SGD loop shared by the surrogate trainer, the plain classifier
// trainer and the confidence-based baseline (which filters each minibatch).

#include <functional>
#include <vector>

#include "l2d/model.hpp"
#include "l2d/train.hpp"

namespace l2d::detail {

struct Objective {
    std::function<BackwardResult(const ModelParams&, const Instance&)> backprop;
    std::function<double(const ModelParams&, const Dataset&)> dataset_loss;
    std::function<double(const ModelParams&, const Dataset&)> validation_accuracy;
};

// Optional per-minibatch sample selection; returning an empty vector skips
// the update for that batch.
using BatchFilter = std::function<std::vector<std::size_t>(
    const ModelParams&, const Dataset&, const std::vector<std::size_t>&)>;

TrainResult run_sgd(const DataSplit& split, const ModelSpec& model_spec,
                    bool defer_head, const TrainConfig& config,
                    const Objective& objective, const BatchFilter& filter = {});

} // namespace l2d::detail

#endif
