#include "l2d/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include <json.hpp>

#include "l2d/error.hpp"
#include "train_loop.hpp"

namespace l2d {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0)
        throw ConfigError("momentum must lie in [0, 1)");
    if (weight_decay < 0.0)
        throw ConfigError("weight_decay must be non-negative");
    if (epochs < 1)
        throw ConfigError("epochs must be at least 1");
    if (batch_size < 1)
        throw ConfigError("batch_size must be at least 1");
    if (patience < 1)
        throw ConfigError("patience must be at least 1");
    if (warmup_epochs < 0 || warmup_epochs >= epochs)
        throw ConfigError("warmup_epochs must lie in [0, epochs)");
}

double learning_rate_at(const TrainConfig& config, int epoch_index) {
    config.validate();
    if (epoch_index < 0 || epoch_index >= config.epochs)
        throw ConfigError("epoch index outside configured range");
    if (epoch_index < config.warmup_epochs)
        return config.learning_rate * (epoch_index + 1) /
               static_cast<double>(config.warmup_epochs);
    if (!config.cosine_annealing)
        return config.learning_rate;
    const int span = config.epochs - 1 - config.warmup_epochs;
    const double t =
        span > 0 ? static_cast<double>(epoch_index - config.warmup_epochs) / span
                 : 1.0;
    return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

namespace detail {

TrainResult run_sgd(const DataSplit& split, const ModelSpec& model_spec,
                    bool defer_head, const TrainConfig& config,
                    const Objective& objective, const BatchFilter& filter) {
    config.validate();
    if (split.train.size() == 0)
        throw ConfigError("train split is empty");
    if (split.validation.size() == 0)
        throw ConfigError("validation split is empty");

    std::mt19937_64 rng(config.seed);
    ModelParams params = init_model(model_spec, split.train.dim,
                                    split.train.num_classes, defer_head, rng);
    std::vector<double> velocity(params.values.size(), 0.0);

    const std::size_t n_train = split.train.size();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.model = params;
    double best_val = std::numeric_limits<double>::infinity();
    int epochs_without_improvement = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = learning_rate_at(config, epoch);
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        std::vector<double> grad_sum(params.values.size());
        std::vector<std::size_t> batch;

        for (std::size_t begin = 0; begin < n_train;
             begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(begin + static_cast<std::size_t>(config.batch_size), n_train);
            const int batch_index = static_cast<int>(begin / config.batch_size);
            batch.assign(order.begin() + begin, order.begin() + end);
            if (filter) {
                batch = filter(params, split.train, batch);
                if (batch.empty())
                    continue;
            }

            std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t idx : batch) {
                BackwardResult b = objective.backprop(params, split.train.instances[idx]);
                batch_loss += b.loss;
                for (std::size_t i = 0; i < grad_sum.size(); ++i)
                    grad_sum[i] += b.grad[i];
            }
            if (!std::isfinite(batch_loss))
                throw TrainingError("non-finite loss at epoch " +
                                    std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(batch_index + 1));
            loss_sum += batch_loss;
            loss_count += batch.size();

            const double inv = 1.0 / static_cast<double>(batch.size());
            for (std::size_t i = 0; i < params.values.size(); ++i) {
                const double g =
                    grad_sum[i] * inv + config.weight_decay * params.values[i];
                velocity[i] = config.momentum * velocity[i] + g;
                params.values[i] -= lr * velocity[i];
                if (!std::isfinite(params.values[i]))
                    throw TrainingError("non-finite parameter at epoch " +
                                        std::to_string(epoch + 1) + ", batch " +
                                        std::to_string(batch_index + 1));
            }
        }

        result.report.train_loss.push_back(
            loss_count > 0 ? loss_sum / static_cast<double>(loss_count)
                           : std::numeric_limits<double>::quiet_NaN());
        const double val_loss = objective.dataset_loss(params, split.validation);
        result.report.validation_loss.push_back(val_loss);
        result.report.validation_system_accuracy.push_back(
            objective.validation_accuracy(params, split.validation));

        if (val_loss < best_val) {
            best_val = val_loss;
            result.model = params;
            result.report.best_epoch = epoch + 1;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
        }
        result.report.stopped_epoch = epoch + 1;
        if (epochs_without_improvement >= config.patience)
            break;
    }
    return result;
}

} // namespace detail

TrainResult train(const DataSplit& split, SurrogateKind surrogate,
                  const BinaryLoss& phi, const ModelSpec& model_spec,
                  const TrainConfig& config, AlphaWeight alpha) {
    detail::Objective objective;
    objective.backprop = [surrogate, phi, alpha](const ModelParams& p,
                                                 const Instance& inst) {
        return backward(p, inst, surrogate, phi, alpha);
    };
    objective.dataset_loss = [surrogate, phi, alpha](const ModelParams& p,
                                                     const Dataset& d) {
        return mean_surrogate_loss(p, d, surrogate, phi, alpha);
    };
    objective.validation_accuracy = [surrogate, phi](const ModelParams& p,
                                                     const Dataset& d) {
        return system_accuracy(p, d, surrogate, phi);
    };
    return detail::run_sgd(split, model_spec, true, config, objective);
}

TrainResult train_plain_classifier(const DataSplit& split,
                                   const ModelSpec& model_spec,
                                   const TrainConfig& config) {
    detail::Objective objective;
    objective.backprop = [](const ModelParams& p, const Instance& inst) {
        return backward_plain(p, inst);
    };
    objective.dataset_loss = [](const ModelParams& p, const Dataset& d) {
        return mean_plain_loss(p, d);
    };
    objective.validation_accuracy = [](const ModelParams& p, const Dataset& d) {
        std::size_t correct = 0;
        for (const Instance& inst : d.instances) {
            const std::vector<double> scores = forward_raw(p, inst.features);
            const auto best = std::max_element(scores.begin(), scores.end());
            if (static_cast<int>(best - scores.begin()) == inst.label)
                ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(d.size());
    };
    return detail::run_sgd(split, model_spec, false, config, objective);
}

double mean_surrogate_loss(const ModelParams& model, const Dataset& data,
                           SurrogateKind surrogate, const BinaryLoss& phi,
                           AlphaWeight alpha) {
    if (data.size() == 0)
        throw ConfigError("dataset is empty");
    double sum = 0.0;
    for (const Instance& inst : data.instances) {
        const LogitVector g = forward(model, inst.features);
        sum += surrogate == SurrogateKind::softmax
                   ? softmax_l2d_loss(g, inst.label, inst.expert_prediction, alpha)
                   : ova_l2d_loss(g, inst.label, inst.expert_prediction, phi);
    }
    return sum / static_cast<double>(data.size());
}

double mean_plain_loss(const ModelParams& model, const Dataset& data) {
    if (data.size() == 0)
        throw ConfigError("dataset is empty");
    double sum = 0.0;
    for (const Instance& inst : data.instances)
        sum += cross_entropy_loss(forward_raw(model, inst.features), inst.label);
    return sum / static_cast<double>(data.size());
}

double system_accuracy(const ModelParams& model, const Dataset& data,
                       SurrogateKind surrogate, const BinaryLoss& phi) {
    if (data.size() == 0)
        throw ConfigError("dataset is empty");
    std::size_t correct = 0;
    for (const Instance& inst : data.instances) {
        const SystemDecision d = decide(forward(model, inst.features), surrogate, phi);
        const int prediction = d.deferred ? inst.expert_prediction : d.predicted_class;
        if (prediction == inst.label)
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

void save_train_report(const std::filesystem::path& path, const TrainReport& report,
                       const std::string& config_hash) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["config_hash"] = config_hash;
    j["stopped_epoch"] = report.stopped_epoch;
    j["best_epoch"] = report.best_epoch;
    j["train_loss"] = report.train_loss;
    j["validation_loss"] = report.validation_loss;
    j["validation_system_accuracy"] = report.validation_system_accuracy;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot open file for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out)
        throw ParseError("write failed: " + path.string());
}

} // namespace l2d
