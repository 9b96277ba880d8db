#ifndef L2D_ESTIMATORS_HPP
#define L2D_ESTIMATORS_HPP

#include <vector>

#include "l2d/binary_loss.hpp"
#include "l2d/dataset.hpp"

namespace l2d {

enum class SurrogateKind { softmax, one_vs_all };

// Probability that the system defers, read off the (K+1)-way softmax.
double p_defer_softmax(const LogitVector& g);

// Estimate of P(expert correct | x) implied by the softmax scores: the odds
// p_defer / (1 - p_defer). Unbounded above; values above 1 carry no
// probability reading.
double p_expert_softmax(const LogitVector& g);

struct ClampedProbability {
    double value = 0.0;
    bool clamped = false; // true only when the raw estimate strictly exceeded 1
};
ClampedProbability p_expert_softmax_clamped(const LogitVector& g);

// Estimate of P(y = k | x) from the softmax scores, renormalized to exclude
// the deferral share. Sums to 1 over k.
double p_class_softmax(const LogitVector& g, int k);
std::vector<double> p_class_softmax_all(const LogitVector& g);

// One-vs-all estimates: each head is inverted through the binary loss's link
// in isolation. Class estimates are not normalized across heads.
double p_expert_ova(const LogitVector& g, const BinaryLoss& phi = logistic_loss());
double p_class_ova(const LogitVector& g, int k,
                   const BinaryLoss& phi = logistic_loss());

// Decision of the combined system on raw scores: predict the top class, or
// defer when the deferral score ties or beats it. Confidences come from the
// estimator family matching the surrogate the model was trained with.
struct SystemDecision {
    int predicted_class = 0;
    bool deferred = false;
    double classifier_confidence = 0.0;
    double expert_confidence = 0.0;      // clamped to (0, 1]
    double expert_confidence_raw = 0.0;  // softmax: odds, may exceed 1
    bool expert_confidence_clamped = false;
    bool all_scores_negative = false;    // diagnostic: no head fired
};

SystemDecision decide(const LogitVector& g, SurrogateKind surrogate,
                      const BinaryLoss& phi = logistic_loss());

} // namespace l2d

#endif
