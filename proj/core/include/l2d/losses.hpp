#ifndef L2D_LOSSES_HPP
#define L2D_LOSSES_HPP

#include <vector>

#include "l2d/binary_loss.hpp"
#include "l2d/dataset.hpp"

namespace l2d {

// Weight applied to the classification term of the softmax deferral loss on
// instances where the expert is correct. The estimators assume 1; any other
// value trades coverage against accuracy and voids the probability reading,
// so constructing one logs a note to stderr.
class AlphaWeight {
public:
    AlphaWeight() = default;
    explicit AlphaWeight(double value);

    double value() const { return value_; }
    bool standard() const { return value_ == 1.0; }

private:
    double value_ = 1.0;
};

// Deferral loss built on the (K+1)-way softmax: cross entropy on the true
// label, plus cross entropy on the deferral output when the expert is right.
// Gradients are with respect to the K+1 scores (class scores then deferral).
double softmax_l2d_loss(const LogitVector& g, int label, int expert_prediction,
                        AlphaWeight alpha = {});
std::vector<double> softmax_l2d_grad(const LogitVector& g, int label,
                                     int expert_prediction, AlphaWeight alpha = {});

// One-vs-all deferral loss: each class score is trained as a binary problem
// against the true label, and the deferral score against expert correctness.
double ova_l2d_loss(const LogitVector& g, int label, int expert_prediction,
                    const BinaryLoss& phi = logistic_loss());
std::vector<double> ova_l2d_grad(const LogitVector& g, int label,
                                 int expert_prediction,
                                 const BinaryLoss& phi = logistic_loss());

// Output code over K+1 binary columns: column j < K is the one-vs-all code
// for class j (+1 on the diagonal), and the last column's entry at row y is
// +1 exactly when the expert prediction matches y, so it is materialized per
// instance.
class CodingMatrix {
public:
    explicit CodingMatrix(int num_classes);

    int num_classes() const { return num_classes_; }
    int num_columns() const { return num_classes_ + 1; }

    // Entry in {-1, +1} for row y and column j given expert prediction m.
    int entry(int row, int column, int expert_prediction) const;
    std::vector<int> last_column(int expert_prediction) const;

private:
    int num_classes_ = 0;
};

CodingMatrix coding_matrix(int num_classes);

// Loss of the output-code reduction: sum over columns of phi at +/- the
// column score according to the code entry. With the matrix above this is
// algebraically the one-vs-all deferral loss.
double ecoc_l2d_loss(const CodingMatrix& code, const LogitVector& g, int label,
                     int expert_prediction, const BinaryLoss& phi = logistic_loss());

// Plain K-way cross entropy over raw scores; used by baseline classifiers
// that have no deferral output.
double cross_entropy_loss(const std::vector<double>& scores, int label);
std::vector<double> cross_entropy_grad(const std::vector<double>& scores, int label);

} // namespace l2d

#endif
