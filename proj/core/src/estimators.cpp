#include "l2d/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "l2d/error.hpp"

namespace l2d {

namespace {

void check_scores(const LogitVector& g) {
    if (g.num_classes() < 2)
        throw ConfigError("logit vector needs at least 2 class scores");
}

// log(sum_k exp(class score k)); the deferral score is excluded.
double log_sum_exp_classes(const LogitVector& g) {
    const double m =
        *std::max_element(g.class_scores.begin(), g.class_scores.end());
    double sum = 0.0;
    for (double s : g.class_scores)
        sum += std::exp(s - m);
    return m + std::log(sum);
}

double sigmoid(double t) {
    if (t >= 0.0)
        return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

} // namespace

double p_defer_softmax(const LogitVector& g) {
    check_scores(g);
    // exp(g_defer) / (exp(g_defer) + sum_k exp(g_k)) without forming the
    // full softmax, so the complement below shares the same comparison point.
    return sigmoid(g.defer_score - log_sum_exp_classes(g));
}

double p_expert_softmax(const LogitVector& g) {
    check_scores(g);
    return std::exp(g.defer_score - log_sum_exp_classes(g));
}

ClampedProbability p_expert_softmax_clamped(const LogitVector& g) {
    const double raw = p_expert_softmax(g);
    if (raw > 1.0)
        return {1.0, true};
    return {raw, false};
}

double p_class_softmax(const LogitVector& g, int k) {
    check_scores(g);
    if (k < 0 || k >= g.num_classes())
        throw ConfigError("class index " + std::to_string(k) + " outside [0, " +
                          std::to_string(g.num_classes()) + ")");
    return std::exp(g.class_scores[k] - log_sum_exp_classes(g));
}

std::vector<double> p_class_softmax_all(const LogitVector& g) {
    check_scores(g);
    const double lse = log_sum_exp_classes(g);
    std::vector<double> out(g.class_scores.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = std::exp(g.class_scores[k] - lse);
    return out;
}

double p_expert_ova(const LogitVector& g, const BinaryLoss& phi) {
    check_scores(g);
    return phi.inverse_link(g.defer_score);
}

double p_class_ova(const LogitVector& g, int k, const BinaryLoss& phi) {
    check_scores(g);
    if (k < 0 || k >= g.num_classes())
        throw ConfigError("class index " + std::to_string(k) + " outside [0, " +
                          std::to_string(g.num_classes()) + ")");
    return phi.inverse_link(g.class_scores[k]);
}

SystemDecision decide(const LogitVector& g, SurrogateKind surrogate,
                      const BinaryLoss& phi) {
    check_scores(g);
    SystemDecision d;
    const auto best =
        std::max_element(g.class_scores.begin(), g.class_scores.end());
    d.predicted_class = static_cast<int>(best - g.class_scores.begin());
    d.deferred = g.defer_score >= *best;
    d.all_scores_negative = *best < 0.0 && g.defer_score < 0.0;

    if (surrogate == SurrogateKind::softmax) {
        d.classifier_confidence = p_class_softmax(g, d.predicted_class);
        d.expert_confidence_raw = p_expert_softmax(g);
        const auto clamped = p_expert_softmax_clamped(g);
        d.expert_confidence = clamped.value;
        d.expert_confidence_clamped = clamped.clamped;
    } else {
        d.classifier_confidence = phi.inverse_link(*best);
        d.expert_confidence_raw = phi.inverse_link(g.defer_score);
        d.expert_confidence = d.expert_confidence_raw;
        d.expert_confidence_clamped = false;
    }
    return d;
}

} // namespace l2d
