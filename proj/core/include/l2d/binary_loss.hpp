#ifndef L2D_BINARY_LOSS_HPP
#define L2D_BINARY_LOSS_HPP

#include <cmath>

namespace l2d {

// Margin-based binary surrogate together with the inverse of its canonical
// link, so raw scores can be mapped back to probabilities. Only the logistic
// loss is provided; it is strictly proper composite, which the probability
// estimators rely on.
enum class BinaryLossKind { logistic };

struct BinaryLoss {
    BinaryLossKind kind = BinaryLossKind::logistic;

    // log(1 + exp(-z)), evaluated without overflow for large |z|.
    double evaluate(double z) const {
        return std::log1p(std::exp(-std::abs(z))) + std::max(0.0, -z);
    }

    // d/dz log(1 + exp(-z)) = -sigmoid(-z), in (-1, 0).
    double derivative(double z) const { return -inverse_link(-z); }

    // sigmoid(u), stable in both tails.
    double inverse_link(double u) const {
        if (u >= 0.0)
            return 1.0 / (1.0 + std::exp(-u));
        const double e = std::exp(u);
        return e / (1.0 + e);
    }
};

inline BinaryLoss logistic_loss() { return BinaryLoss{BinaryLossKind::logistic}; }

} // namespace l2d

#endif
