#ifndef L2D_DATASET_HPP
#define L2D_DATASET_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace l2d {

// One labeled example together with the prediction a human expert made for it.
struct Instance {
    std::vector<double> features;
    int label = 0;
    int expert_prediction = 0;
};

struct Dataset {
    std::vector<Instance> instances;
    int num_classes = 0;
    int dim = 0;

    std::size_t size() const { return instances.size(); }
};

struct DataSplit {
    Dataset train;
    Dataset validation;
    Dataset test;
};

// Scores produced by a model with an extra deferral output: one score per
// class plus the deferral score.
struct LogitVector {
    std::vector<double> class_scores;
    double defer_score = 0.0;

    int num_classes() const { return static_cast<int>(class_scores.size()); }
};

// Validates label ranges, feature dimensions and num_classes >= 2.
Dataset make_dataset(std::vector<Instance> instances, int num_classes, int dim);

// CSV rows are x_0,...,x_{d-1},y,m with no header by default. The feature
// dimension is taken from the first row. Parse failures name the line number.
Dataset load_dataset(const std::filesystem::path& path, int num_classes,
                     bool skip_header = false);

// Writes the same CSV schema; numbers use shortest round-trip formatting so a
// save/load cycle reproduces every instance bit for bit.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Shuffles with the given seed, then assigns floor(fraction*N) instances to
// validation and test; the remainder goes to train. Fractions must sum to 1.
DataSplit split_dataset(const Dataset& dataset,
                        const std::array<double, 3>& fractions,
                        std::uint64_t seed);

} // namespace l2d

#endif
