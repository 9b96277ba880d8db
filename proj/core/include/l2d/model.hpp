#ifndef L2D_MODEL_HPP
#define L2D_MODEL_HPP

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "l2d/binary_loss.hpp"
#include "l2d/dataset.hpp"
#include "l2d/estimators.hpp"
#include "l2d/losses.hpp"

namespace l2d {

enum class Architecture { linear, mlp1 };

struct ModelSpec {
    Architecture arch = Architecture::linear;
    int hidden_width = 0; // required > 0 for mlp1, ignored for linear
};

// Parameters live in one flat array. Linear: W (out x d) row-major, then
// biases (out). mlp1 adds a ReLU hidden layer: W1 (h x d), b1 (h),
// W2 (out x h), b2 (out). Models trained for deferral have num_classes + 1
// outputs; plain baseline classifiers have num_classes.
struct ModelParams {
    Architecture arch = Architecture::linear;
    int input_dim = 0;
    int num_classes = 0;
    bool defer_head = true;
    int hidden_width = 0;
    std::vector<double> values;

    int output_dim() const { return num_classes + (defer_head ? 1 : 0); }
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
ModelParams init_model(const ModelSpec& spec, int input_dim, int num_classes,
                       bool defer_head, std::mt19937_64& rng);

std::vector<double> forward_raw(const ModelParams& params,
                                std::span<const double> x);

// Requires a deferral head; splits the raw outputs into class scores and the
// deferral score.
LogitVector forward(const ModelParams& params, std::span<const double> x);

struct BackwardResult {
    double loss = 0.0;
    std::vector<double> grad; // same layout as ModelParams::values
};

// Loss and parameter gradient of the chosen surrogate at one instance.
BackwardResult backward(const ModelParams& params, const Instance& instance,
                        SurrogateKind surrogate, const BinaryLoss& phi,
                        AlphaWeight alpha = {});

// Same for plain cross entropy on a model without a deferral head.
BackwardResult backward_plain(const ModelParams& params, const Instance& instance);

// Checkpoints are versioned JSON holding the architecture descriptor, the
// objective tag and the raw parameter array; doubles round-trip bit-exactly.
struct Checkpoint {
    ModelParams model;
    std::string objective;    // "softmax", "one_vs_all" or "plain"
    double temperature = 1.0; // already folded into the output layer
    std::string config_hash;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Divides the output layer (weights and biases) by T; for the softmax family
// this matches dividing every output score by T.
void apply_temperature(ModelParams& params, double temperature);

} // namespace l2d

#endif
