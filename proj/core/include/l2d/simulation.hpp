#ifndef L2D_SIMULATION_HPP
#define L2D_SIMULATION_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "l2d/dataset.hpp"

namespace l2d {

// Expert whose prediction is the true label with a per-class probability;
// errors are uniform over the other classes.
struct ExpertModel {
    enum class Kind { per_class, oracle, uniform_random };

    Kind kind = Kind::per_class;
    std::vector<double> accuracy; // one entry per class, each in [0, 1]

    static ExpertModel per_class(std::vector<double> accuracy);
    static ExpertModel oracle(int num_classes);
    static ExpertModel uniform_random(int num_classes);
};

// Accuracy acc_head on classes [0, boundary), acc_tail on the rest.
ExpertModel make_split_expert(int num_classes, int boundary, double acc_head,
                              double acc_tail);

int sample_expert(const ExpertModel& expert, int label, std::mt19937_64& rng);

// Spherical Gaussian class conditionals with known priors, so the posterior
// and the optimal decisions are available in closed form.
struct GaussianMixtureSpec {
    int num_classes = 0;
    int dim = 0;
    std::vector<std::vector<double>> means; // num_classes x dim
    double sigma = 1.0;
    std::vector<double> priors; // sums to 1

    void validate() const;

    // Means evenly spaced on a circle of the given radius in 2-D, uniform
    // priors.
    static GaussianMixtureSpec circle(int num_classes, double radius = 2.0,
                                      double sigma = 1.0);
};

Dataset generate_dataset(const GaussianMixtureSpec& spec, const ExpertModel& expert,
                         int n, std::uint64_t seed);

// Same feature vectors and labels, fresh expert predictions.
Dataset resimulate_expert(const Dataset& dataset, const ExpertModel& expert,
                          std::uint64_t seed);

struct BayesDecision {
    int predicted_class = 0;
    bool deferred = false;
    double expert_correct_prob = 0.0; // P(expert correct | x)
};

// Exact posterior and optimal defer/predict decision for a mixture paired
// with an expert; ties defer.
class BayesOracle {
public:
    BayesOracle(GaussianMixtureSpec spec, ExpertModel expert);

    const GaussianMixtureSpec& spec() const { return spec_; }
    const ExpertModel& expert() const { return expert_; }

    std::vector<double> posterior(std::span<const double> x) const;
    double expert_correct_prob(std::span<const double> x) const;
    BayesDecision decision(std::span<const double> x) const;

    // CSV rows x0,y0,posteriors...,expert_correct_prob,predicted,deferred over
    // a regular grid; requires dim == 2.
    void dump_grid(const std::filesystem::path& path, double lo, double hi,
                   int points_per_axis) const;

private:
    GaussianMixtureSpec spec_;
    ExpertModel expert_;
};

// Degenerate regime with a constant feature vector, uniform labels and an
// expert that is always right; the optimal deferral share is one half.
DataSplit make_worked_example_dataset(int num_classes, int n, std::uint64_t seed);

} // namespace l2d

#endif
