#ifndef L2D_DEFERRAL_HPP
#define L2D_DEFERRAL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "l2d/binary_loss.hpp"
#include "l2d/dataset.hpp"
#include "l2d/estimators.hpp"
#include "l2d/model.hpp"
#include "l2d/simulation.hpp"
#include "l2d/train.hpp"

namespace l2d {

enum class PolicyKind { surrogate_sorted, score_baseline, confidence_baseline };

struct BudgetPolicy {
    PolicyKind kind = PolicyKind::surrogate_sorted;
    double budget = 0.0; // fraction of samples that may be deferred, in [0, 1]
};

// Number of deferrals a budget allows: floor(budget * n), with a small guard
// so decimal budgets like 0.3 floor the way their decimal value reads.
std::size_t budget_count(double budget, std::size_t n);

struct ConfidencePair {
    double classifier = 0.0; // top class share of the model's output
    double deferral = 0.0;   // deferral share of the model's output
};

// Defers the min(floor(budget*n), n_c) instances with the smallest margin
// classifier - deferral, where n_c counts instances whose deferral confidence
// ties or beats the classifier's. Ties broken by original index. At budget 1
// this reproduces the model's own rejector.
std::vector<bool> defer_with_budget_surrogate(const std::vector<ConfidencePair>& pairs,
                                              double budget);

// Defers exactly floor(budget*n) least-confident instances.
std::vector<bool> score_baseline_defer(const std::vector<double>& confidences,
                                       double budget);

// Defers the min(floor(budget*n), n_c) least-confident instances, where n_c
// counts instances whose confidence falls below the expert's overall accuracy.
std::vector<bool> confidence_baseline_defer(const std::vector<double>& confidences,
                                            double expert_accuracy, double budget);

// Trains a plain classifier where each minibatch keeps only the
// min(floor(budget*batch), n_c) samples whose confidence most exceeds the
// expert's accuracy (n_c counts those above it); with budget 1 and expert
// accuracy 0 this reduces to plain training, with budget 0 no step is taken.
TrainResult confidence_baseline_train(const DataSplit& split, double expert_accuracy,
                                      double budget, const ModelSpec& model_spec,
                                      const TrainConfig& config);

struct EvalSummary {
    double system_accuracy = 0.0;
    double coverage = 0.0;            // fraction handled by the classifier
    double classifier_accuracy = 0.0; // on the kept instances (0 if none)
    double expert_accuracy = 0.0;     // on the deferred instances (0 if none)
    std::size_t n_deferred = 0;
    std::size_t n = 0;
};

EvalSummary summarize_decisions(const Dataset& data,
                                const std::vector<int>& predictions,
                                const std::vector<bool>& defer_mask);

// Per-instance quantities every policy works from.
struct SystemScores {
    std::vector<int> predicted;
    std::vector<bool> native_defer;          // empty for plain classifiers
    std::vector<double> classifier_confidence;
    std::vector<ConfidencePair> policy_pairs; // empty for plain classifiers
};

SystemScores score_dataset(const ModelParams& model, const Dataset& data,
                           SurrogateKind surrogate,
                           const BinaryLoss& phi = logistic_loss());

// Without a policy this uses the model's own rejector (deferral models only).
// expert_accuracy is needed only by the confidence baseline.
EvalSummary evaluate_system(const ModelParams& model, const Dataset& data,
                            SurrogateKind surrogate, const BinaryLoss& phi,
                            const std::optional<BudgetPolicy>& policy = {},
                            double expert_accuracy = 0.0);

std::vector<std::pair<double, EvalSummary>> sweep_budget(
    const ModelParams& model, const Dataset& data, SurrogateKind surrogate,
    const BinaryLoss& phi, PolicyKind kind, const std::vector<double>& budgets,
    double expert_accuracy = 0.0);

struct ExpertiseRow {
    int boundary = 0;
    SurrogateKind method = SurrogateKind::softmax;
    EvalSummary summary;
};

// For each boundary k, builds the split expert, redraws the expert
// predictions on a shared base dataset, trains both surrogates with identical
// seeds and evaluates them with their native rejectors.
std::vector<ExpertiseRow> sweep_expertise(
    const GaussianMixtureSpec& spec, const std::vector<int>& boundaries,
    double acc_head, double acc_tail, int n,
    const std::array<double, 3>& fractions, const ModelSpec& model_spec,
    const TrainConfig& config, std::uint64_t data_seed);

} // namespace l2d

#endif
