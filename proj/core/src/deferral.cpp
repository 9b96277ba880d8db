#include "l2d/deferral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "l2d/error.hpp"
#include "train_loop.hpp"

namespace l2d {

namespace {

void check_budget(double budget) {
    if (budget < 0.0 || budget > 1.0 || !std::isfinite(budget))
        throw ConfigError("budget must lie in [0, 1]");
}

// Indices ordered by ascending key, original index breaking ties.
std::vector<std::size_t> order_by(const std::vector<double>& keys) {
    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (keys[i] != keys[j])
            return keys[i] < keys[j];
        return i < j;
    });
    return order;
}

std::vector<bool> defer_first(const std::vector<std::size_t>& order,
                              std::size_t count, std::size_t n) {
    std::vector<bool> mask(n, false);
    for (std::size_t r = 0; r < count; ++r)
        mask[order[r]] = true;
    return mask;
}

// Top class share of a plain softmax over raw scores.
double max_softmax(const std::vector<double>& scores) {
    const double m = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores)
        sum += std::exp(s - m);
    return 1.0 / sum;
}

} // namespace

std::size_t budget_count(double budget, std::size_t n) {
    check_budget(budget);
    return static_cast<std::size_t>(
        std::floor(budget * static_cast<double>(n) + 1e-9));
}

std::vector<bool> defer_with_budget_surrogate(const std::vector<ConfidencePair>& pairs,
                                              double budget) {
    check_budget(budget);
    const std::size_t n = pairs.size();
    std::vector<double> margin(n);
    std::size_t n_c = 0;
    for (std::size_t i = 0; i < n; ++i) {
        margin[i] = pairs[i].classifier - pairs[i].deferral;
        if (pairs[i].deferral >= pairs[i].classifier)
            ++n_c;
    }
    const std::size_t count = std::min(budget_count(budget, n), n_c);
    return defer_first(order_by(margin), count, n);
}

std::vector<bool> score_baseline_defer(const std::vector<double>& confidences,
                                       double budget) {
    check_budget(budget);
    return defer_first(order_by(confidences),
                       budget_count(budget, confidences.size()),
                       confidences.size());
}

std::vector<bool> confidence_baseline_defer(const std::vector<double>& confidences,
                                            double expert_accuracy, double budget) {
    check_budget(budget);
    if (expert_accuracy < 0.0 || expert_accuracy > 1.0)
        throw ConfigError("expert accuracy must lie in [0, 1]");
    const std::size_t n = confidences.size();
    std::size_t n_c = 0;
    for (double c : confidences)
        if (c < expert_accuracy)
            ++n_c;
    const std::size_t count = std::min(budget_count(budget, n), n_c);
    return defer_first(order_by(confidences), count, n);
}

TrainResult confidence_baseline_train(const DataSplit& split, double expert_accuracy,
                                      double budget, const ModelSpec& model_spec,
                                      const TrainConfig& config) {
    check_budget(budget);
    if (expert_accuracy < 0.0 || expert_accuracy > 1.0)
        throw ConfigError("expert accuracy must lie in [0, 1]");

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

    detail::BatchFilter filter =
        [expert_accuracy, budget](const ModelParams& p, const Dataset& train,
                                  const std::vector<std::size_t>& batch) {
            std::vector<double> conf(batch.size());
            std::size_t n_c = 0;
            for (std::size_t r = 0; r < batch.size(); ++r) {
                conf[r] = max_softmax(
                    forward_raw(p, train.instances[batch[r]].features));
                if (conf[r] > expert_accuracy)
                    ++n_c;
            }
            const std::size_t count =
                std::min(budget_count(budget, batch.size()), n_c);
            // Keep the samples whose confidence most exceeds the expert's.
            std::vector<double> key(batch.size());
            for (std::size_t r = 0; r < batch.size(); ++r)
                key[r] = expert_accuracy - conf[r];
            std::vector<std::size_t> order = order_by(key);
            // Restore batch order so gradient accumulation is unchanged when
            // the whole batch survives the filter.
            order.resize(count);
            std::sort(order.begin(), order.end());
            std::vector<std::size_t> selected;
            selected.reserve(count);
            for (const std::size_t r : order)
                selected.push_back(batch[r]);
            return selected;
        };

    return detail::run_sgd(split, model_spec, false, config, objective, filter);
}

EvalSummary summarize_decisions(const Dataset& data,
                                const std::vector<int>& predictions,
                                const std::vector<bool>& defer_mask) {
    const std::size_t n = data.size();
    if (n == 0)
        throw ConfigError("dataset is empty");
    if (predictions.size() != n || defer_mask.size() != n)
        throw ConfigError("predictions and mask must match the dataset size");

    std::size_t n_deferred = 0, correct_kept = 0, correct_deferred = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Instance& inst = data.instances[i];
        if (defer_mask[i]) {
            ++n_deferred;
            if (inst.expert_prediction == inst.label)
                ++correct_deferred;
        } else if (predictions[i] == inst.label) {
            ++correct_kept;
        }
    }
    const std::size_t n_kept = n - n_deferred;
    EvalSummary s;
    s.n = n;
    s.n_deferred = n_deferred;
    s.coverage = static_cast<double>(n_kept) / static_cast<double>(n);
    s.classifier_accuracy =
        n_kept == 0 ? 0.0
                    : static_cast<double>(correct_kept) / static_cast<double>(n_kept);
    s.expert_accuracy = n_deferred == 0
                            ? 0.0
                            : static_cast<double>(correct_deferred) /
                                  static_cast<double>(n_deferred);
    s.system_accuracy = static_cast<double>(correct_kept + correct_deferred) /
                        static_cast<double>(n);
    return s;
}

SystemScores score_dataset(const ModelParams& model, const Dataset& data,
                           SurrogateKind surrogate, const BinaryLoss& phi) {
    if (data.size() == 0)
        throw ConfigError("dataset is empty");
    if (model.num_classes != data.num_classes)
        throw ConfigError("model has " + std::to_string(model.num_classes) +
                          " classes, dataset has " +
                          std::to_string(data.num_classes));

    SystemScores scores;
    scores.predicted.reserve(data.size());
    scores.classifier_confidence.reserve(data.size());
    if (model.defer_head) {
        scores.native_defer.reserve(data.size());
        scores.policy_pairs.reserve(data.size());
    }

    for (const Instance& inst : data.instances) {
        if (!model.defer_head) {
            const std::vector<double> raw = forward_raw(model, inst.features);
            const auto best = std::max_element(raw.begin(), raw.end());
            scores.predicted.push_back(static_cast<int>(best - raw.begin()));
            scores.classifier_confidence.push_back(max_softmax(raw));
            continue;
        }
        const LogitVector g = forward(model, inst.features);
        const SystemDecision d = decide(g, surrogate, phi);
        scores.predicted.push_back(d.predicted_class);
        scores.native_defer.push_back(d.deferred);
        scores.classifier_confidence.push_back(d.classifier_confidence);

        ConfidencePair pair;
        if (surrogate == SurrogateKind::softmax) {
            // Shares of the full softmax across class scores and deferral.
            double m = g.defer_score;
            for (double s : g.class_scores)
                m = std::max(m, s);
            double sum = std::exp(g.defer_score - m);
            double top = 0.0;
            for (double s : g.class_scores) {
                const double e = std::exp(s - m);
                sum += e;
                top = std::max(top, e);
            }
            pair.classifier = top / sum;
            pair.deferral = std::exp(g.defer_score - m) / sum;
        } else {
            pair.classifier = phi.inverse_link(g.class_scores[d.predicted_class]);
            pair.deferral = phi.inverse_link(g.defer_score);
        }
        scores.policy_pairs.push_back(pair);
    }
    return scores;
}

namespace {

std::vector<bool> policy_mask(const BudgetPolicy& policy, const SystemScores& scores,
                              double expert_accuracy) {
    switch (policy.kind) {
    case PolicyKind::surrogate_sorted:
        if (scores.policy_pairs.empty())
            throw ConfigError("surrogate policy needs a model with a deferral output");
        return defer_with_budget_surrogate(scores.policy_pairs, policy.budget);
    case PolicyKind::score_baseline:
        return score_baseline_defer(scores.classifier_confidence, policy.budget);
    case PolicyKind::confidence_baseline:
        return confidence_baseline_defer(scores.classifier_confidence,
                                         expert_accuracy, policy.budget);
    }
    throw ConfigError("unknown policy kind");
}

} // namespace

EvalSummary evaluate_system(const ModelParams& model, const Dataset& data,
                            SurrogateKind surrogate, const BinaryLoss& phi,
                            const std::optional<BudgetPolicy>& policy,
                            double expert_accuracy) {
    const SystemScores scores = score_dataset(model, data, surrogate, phi);
    if (!policy) {
        if (!model.defer_head)
            throw ConfigError("a plain classifier needs a budget policy");
        return summarize_decisions(data, scores.predicted, scores.native_defer);
    }
    return summarize_decisions(data, scores.predicted,
                               policy_mask(*policy, scores, expert_accuracy));
}

std::vector<std::pair<double, EvalSummary>> sweep_budget(
    const ModelParams& model, const Dataset& data, SurrogateKind surrogate,
    const BinaryLoss& phi, PolicyKind kind, const std::vector<double>& budgets,
    double expert_accuracy) {
    if (budgets.empty())
        throw ConfigError("budget sweep needs at least one budget");
    const SystemScores scores = score_dataset(model, data, surrogate, phi);
    std::vector<std::pair<double, EvalSummary>> rows;
    rows.reserve(budgets.size());
    for (double b : budgets) {
        BudgetPolicy policy{kind, b};
        rows.emplace_back(b, summarize_decisions(data, scores.predicted,
                                                 policy_mask(policy, scores,
                                                             expert_accuracy)));
    }
    return rows;
}

std::vector<ExpertiseRow> sweep_expertise(
    const GaussianMixtureSpec& spec, const std::vector<int>& boundaries,
    double acc_head, double acc_tail, int n,
    const std::array<double, 3>& fractions, const ModelSpec& model_spec,
    const TrainConfig& config, std::uint64_t data_seed) {
    if (boundaries.empty())
        throw ConfigError("expertise sweep needs at least one boundary");

    // Shared features and labels; only the expert predictions vary with k.
    const Dataset base =
        generate_dataset(spec, ExpertModel::oracle(spec.num_classes), n, data_seed);

    std::vector<ExpertiseRow> rows;
    const BinaryLoss phi = logistic_loss();
    for (int k : boundaries) {
        const ExpertModel expert =
            make_split_expert(spec.num_classes, k, acc_head, acc_tail);
        const Dataset with_expert =
            resimulate_expert(base, expert, data_seed + static_cast<std::uint64_t>(k) + 1);
        const DataSplit split = split_dataset(with_expert, fractions, data_seed);

        for (SurrogateKind method :
             {SurrogateKind::softmax, SurrogateKind::one_vs_all}) {
            const TrainResult trained =
                train(split, method, phi, model_spec, config);
            ExpertiseRow row;
            row.boundary = k;
            row.method = method;
            row.summary =
                evaluate_system(trained.model, split.test, method, phi);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace l2d
