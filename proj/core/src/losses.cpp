#include "l2d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "l2d/error.hpp"

namespace l2d {

namespace {

void check_arguments(const LogitVector& g, int label, int expert_prediction) {
    const int k = g.num_classes();
    if (k < 2)
        throw ConfigError("logit vector needs at least 2 class scores");
    if (label < 0 || label >= k)
        throw ConfigError("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(k) + ")");
    if (expert_prediction < 0 || expert_prediction >= k)
        throw ConfigError("expert prediction " + std::to_string(expert_prediction) +
                          " outside [0, " + std::to_string(k) + ")");
}

// log(sum_j exp(s_j)) over class scores and the deferral score.
double log_sum_exp_all(const LogitVector& g) {
    double m = g.defer_score;
    for (double s : g.class_scores)
        m = std::max(m, s);
    double sum = std::exp(g.defer_score - m);
    for (double s : g.class_scores)
        sum += std::exp(s - m);
    return m + std::log(sum);
}

} // namespace

AlphaWeight::AlphaWeight(double value) : value_(value) {
    if (!(value > 0.0))
        throw ConfigError("alpha must be positive");
    if (value != 1.0)
        std::cerr << "note: alpha = " << value
                  << " departs from the calibrated setting of 1\n";
}

double softmax_l2d_loss(const LogitVector& g, int label, int expert_prediction,
                        AlphaWeight alpha) {
    check_arguments(g, label, expert_prediction);
    const double lse = log_sum_exp_all(g);
    const bool expert_correct = expert_prediction == label;
    const double class_weight = expert_correct ? alpha.value() : 1.0;
    double loss = class_weight * (lse - g.class_scores[label]);
    if (expert_correct)
        loss += lse - g.defer_score;
    return loss;
}

std::vector<double> softmax_l2d_grad(const LogitVector& g, int label,
                                     int expert_prediction, AlphaWeight alpha) {
    check_arguments(g, label, expert_prediction);
    const int k = g.num_classes();
    const double lse = log_sum_exp_all(g);
    const bool expert_correct = expert_prediction == label;
    const double class_weight = expert_correct ? alpha.value() : 1.0;
    const double defer_weight = expert_correct ? 1.0 : 0.0;
    const double total = class_weight + defer_weight;

    std::vector<double> grad(k + 1);
    for (int j = 0; j < k; ++j)
        grad[j] = total * std::exp(g.class_scores[j] - lse);
    grad[k] = total * std::exp(g.defer_score - lse);
    grad[label] -= class_weight;
    grad[k] -= defer_weight;
    return grad;
}

double ova_l2d_loss(const LogitVector& g, int label, int expert_prediction,
                    const BinaryLoss& phi) {
    check_arguments(g, label, expert_prediction);
    const int k = g.num_classes();
    double loss = phi.evaluate(g.class_scores[label]);
    for (int j = 0; j < k; ++j)
        if (j != label)
            loss += phi.evaluate(-g.class_scores[j]);
    loss += phi.evaluate(-g.defer_score);
    if (expert_prediction == label)
        loss += phi.evaluate(g.defer_score) - phi.evaluate(-g.defer_score);
    return loss;
}

std::vector<double> ova_l2d_grad(const LogitVector& g, int label,
                                 int expert_prediction, const BinaryLoss& phi) {
    check_arguments(g, label, expert_prediction);
    const int k = g.num_classes();
    std::vector<double> grad(k + 1);
    for (int j = 0; j < k; ++j)
        grad[j] = j == label ? phi.derivative(g.class_scores[j])
                             : -phi.derivative(-g.class_scores[j]);
    grad[k] = -phi.derivative(-g.defer_score);
    if (expert_prediction == label)
        grad[k] += phi.derivative(g.defer_score) + phi.derivative(-g.defer_score);
    return grad;
}

CodingMatrix::CodingMatrix(int num_classes) : num_classes_(num_classes) {
    if (num_classes < 2)
        throw ConfigError("coding matrix needs at least 2 classes");
}

int CodingMatrix::entry(int row, int column, int expert_prediction) const {
    if (row < 0 || row >= num_classes_)
        throw ConfigError("coding matrix row out of range");
    if (column < 0 || column > num_classes_)
        throw ConfigError("coding matrix column out of range");
    if (column == num_classes_)
        return row == expert_prediction ? 1 : -1;
    return row == column ? 1 : -1;
}

std::vector<int> CodingMatrix::last_column(int expert_prediction) const {
    std::vector<int> col(num_classes_);
    for (int y = 0; y < num_classes_; ++y)
        col[y] = y == expert_prediction ? 1 : -1;
    return col;
}

CodingMatrix coding_matrix(int num_classes) { return CodingMatrix(num_classes); }

double ecoc_l2d_loss(const CodingMatrix& code, const LogitVector& g, int label,
                     int expert_prediction, const BinaryLoss& phi) {
    check_arguments(g, label, expert_prediction);
    if (g.num_classes() != code.num_classes())
        throw ConfigError("coding matrix is for " +
                          std::to_string(code.num_classes()) +
                          " classes, logit vector has " +
                          std::to_string(g.num_classes()));
    double loss = 0.0;
    for (int j = 0; j < code.num_columns(); ++j) {
        const double score =
            j < code.num_classes() ? g.class_scores[j] : g.defer_score;
        const int sign = code.entry(label, j, expert_prediction);
        loss += phi.evaluate(sign > 0 ? score : -score);
    }
    return loss;
}

double cross_entropy_loss(const std::vector<double>& scores, int label) {
    if (scores.size() < 2)
        throw ConfigError("cross entropy needs at least 2 scores");
    if (label < 0 || label >= static_cast<int>(scores.size()))
        throw ConfigError("label outside score range");
    const double m = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores)
        sum += std::exp(s - m);
    return m + std::log(sum) - scores[label];
}

std::vector<double> cross_entropy_grad(const std::vector<double>& scores, int label) {
    if (scores.size() < 2)
        throw ConfigError("cross entropy needs at least 2 scores");
    if (label < 0 || label >= static_cast<int>(scores.size()))
        throw ConfigError("label outside score range");
    const double m = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores)
        sum += std::exp(s - m);
    std::vector<double> grad(scores.size());
    for (std::size_t j = 0; j < scores.size(); ++j)
        grad[j] = std::exp(scores[j] - m) / sum;
    grad[label] -= 1.0;
    return grad;
}

} // namespace l2d
