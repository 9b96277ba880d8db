#ifndef L2D_TRAIN_HPP
#define L2D_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "l2d/binary_loss.hpp"
#include "l2d/dataset.hpp"
#include "l2d/estimators.hpp"
#include "l2d/losses.hpp"
#include "l2d/model.hpp"

namespace l2d {

struct TrainConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int epochs = 200;
    int batch_size = 128;
    int patience = 20;
    std::uint64_t seed = 0;
    bool cosine_annealing = true;
    int warmup_epochs = 0;

    void validate() const;
};

// Base rate during linear warmup, then cosine decay that reaches exactly 0 at
// the final configured epoch. epoch_index is zero based.
double learning_rate_at(const TrainConfig& config, int epoch_index);

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::vector<double> validation_system_accuracy;
    int stopped_epoch = 0; // 1-based epoch at which training stopped
    int best_epoch = 0;    // 1-based epoch whose parameters are returned
};

struct TrainResult {
    ModelParams model;
    TrainReport report;
};

// Minibatch SGD with momentum and weight decay. Validation loss is tracked
// every epoch; training stops once it fails to improve for `patience`
// consecutive epochs, and the parameters of the best epoch are returned.
// Bit-identical across runs with the same seed. Throws TrainingError naming
// the epoch and batch if the loss or any parameter becomes non-finite.
TrainResult train(const DataSplit& split, SurrogateKind surrogate,
                  const BinaryLoss& phi, const ModelSpec& model_spec,
                  const TrainConfig& config, AlphaWeight alpha = {});

// Same loop for a plain K-way classifier under cross entropy (no deferral
// output); used by the budget baselines.
TrainResult train_plain_classifier(const DataSplit& split,
                                   const ModelSpec& model_spec,
                                   const TrainConfig& config);

double mean_surrogate_loss(const ModelParams& model, const Dataset& data,
                           SurrogateKind surrogate, const BinaryLoss& phi,
                           AlphaWeight alpha = {});
double mean_plain_loss(const ModelParams& model, const Dataset& data);

// Fraction of instances the combined system gets right: the expert's hit or
// miss where it defers, the classifier's elsewhere.
double system_accuracy(const ModelParams& model, const Dataset& data,
                       SurrogateKind surrogate, const BinaryLoss& phi);

void save_train_report(const std::filesystem::path& path, const TrainReport& report,
                       const std::string& config_hash);

} // namespace l2d

#endif
