#include "l2d/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "l2d/error.hpp"

namespace l2d {

namespace {

void check_accuracy(const std::vector<double>& accuracy) {
    if (accuracy.size() < 2)
        throw ConfigError("expert needs at least 2 classes");
    for (double a : accuracy)
        if (a < 0.0 || a > 1.0)
            throw ConfigError("expert accuracy outside [0, 1]");
}

} // namespace

ExpertModel ExpertModel::per_class(std::vector<double> accuracy) {
    check_accuracy(accuracy);
    return {Kind::per_class, std::move(accuracy)};
}

ExpertModel ExpertModel::oracle(int num_classes) {
    if (num_classes < 2)
        throw ConfigError("expert needs at least 2 classes");
    return {Kind::oracle, std::vector<double>(num_classes, 1.0)};
}

ExpertModel ExpertModel::uniform_random(int num_classes) {
    if (num_classes < 2)
        throw ConfigError("expert needs at least 2 classes");
    return {Kind::uniform_random,
            std::vector<double>(num_classes, 1.0 / num_classes)};
}

ExpertModel make_split_expert(int num_classes, int boundary, double acc_head,
                              double acc_tail) {
    if (num_classes < 2)
        throw ConfigError("expert needs at least 2 classes");
    if (boundary < 0 || boundary > num_classes)
        throw ConfigError("split boundary outside [0, num_classes]");
    std::vector<double> accuracy(num_classes);
    for (int y = 0; y < num_classes; ++y)
        accuracy[y] = y < boundary ? acc_head : acc_tail;
    return ExpertModel::per_class(std::move(accuracy));
}

int sample_expert(const ExpertModel& expert, int label, std::mt19937_64& rng) {
    const int k = static_cast<int>(expert.accuracy.size());
    if (label < 0 || label >= k)
        throw ConfigError("label outside expert class range");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < expert.accuracy[label])
        return label;
    std::uniform_int_distribution<int> other(0, k - 2);
    const int draw = other(rng);
    return draw >= label ? draw + 1 : draw;
}

void GaussianMixtureSpec::validate() const {
    if (num_classes < 2)
        throw ConfigError("mixture needs at least 2 classes");
    if (dim < 1)
        throw ConfigError("mixture dimension must be at least 1");
    if (static_cast<int>(means.size()) != num_classes)
        throw ConfigError("mixture needs one mean per class");
    for (const auto& mu : means)
        if (static_cast<int>(mu.size()) != dim)
            throw ConfigError("mixture mean has wrong dimension");
    if (!(sigma > 0.0))
        throw ConfigError("sigma must be positive");
    if (static_cast<int>(priors.size()) != num_classes)
        throw ConfigError("mixture needs one prior per class");
    double sum = 0.0;
    for (double p : priors) {
        if (p <= 0.0)
            throw ConfigError("priors must be positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("priors must sum to 1");
}

GaussianMixtureSpec GaussianMixtureSpec::circle(int num_classes, double radius,
                                                double sigma) {
    GaussianMixtureSpec spec;
    spec.num_classes = num_classes;
    spec.dim = 2;
    spec.sigma = sigma;
    spec.priors.assign(num_classes, 1.0 / num_classes);
    spec.means.resize(num_classes);
    for (int y = 0; y < num_classes; ++y) {
        const double angle = 2.0 * std::numbers::pi * y / num_classes;
        spec.means[y] = {radius * std::cos(angle), radius * std::sin(angle)};
    }
    spec.validate();
    return spec;
}

Dataset generate_dataset(const GaussianMixtureSpec& spec, const ExpertModel& expert,
                         int n, std::uint64_t seed) {
    spec.validate();
    if (static_cast<int>(expert.accuracy.size()) != spec.num_classes)
        throw ConfigError("expert and mixture class counts differ");
    if (n < 1)
        throw ConfigError("dataset size must be at least 1");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> cumulative(spec.num_classes);
    double acc = 0.0;
    for (int y = 0; y < spec.num_classes; ++y) {
        acc += spec.priors[y];
        cumulative[y] = acc;
    }

    Dataset ds;
    ds.num_classes = spec.num_classes;
    ds.dim = spec.dim;
    ds.instances.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double u = unit(rng);
        int label = 0;
        while (label < spec.num_classes - 1 && u >= cumulative[label])
            ++label;
        Instance inst;
        inst.label = label;
        inst.features.resize(spec.dim);
        for (int j = 0; j < spec.dim; ++j)
            inst.features[j] = spec.means[label][j] + spec.sigma * gauss(rng);
        inst.expert_prediction = sample_expert(expert, label, rng);
        ds.instances.push_back(std::move(inst));
    }
    return ds;
}

Dataset resimulate_expert(const Dataset& dataset, const ExpertModel& expert,
                          std::uint64_t seed) {
    if (static_cast<int>(expert.accuracy.size()) != dataset.num_classes)
        throw ConfigError("expert and dataset class counts differ");
    std::mt19937_64 rng(seed);
    Dataset out = dataset;
    for (Instance& inst : out.instances)
        inst.expert_prediction = sample_expert(expert, inst.label, rng);
    return out;
}

BayesOracle::BayesOracle(GaussianMixtureSpec spec, ExpertModel expert)
    : spec_(std::move(spec)), expert_(std::move(expert)) {
    spec_.validate();
    if (static_cast<int>(expert_.accuracy.size()) != spec_.num_classes)
        throw ConfigError("expert and mixture class counts differ");
}

std::vector<double> BayesOracle::posterior(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != spec_.dim)
        throw ConfigError("point has wrong dimension");
    const double inv_two_var = 1.0 / (2.0 * spec_.sigma * spec_.sigma);
    std::vector<double> logw(spec_.num_classes);
    for (int y = 0; y < spec_.num_classes; ++y) {
        double sq = 0.0;
        for (int j = 0; j < spec_.dim; ++j) {
            const double diff = x[j] - spec_.means[y][j];
            sq += diff * diff;
        }
        logw[y] = std::log(spec_.priors[y]) - sq * inv_two_var;
    }
    const double m = *std::max_element(logw.begin(), logw.end());
    double sum = 0.0;
    for (double& w : logw) {
        w = std::exp(w - m);
        sum += w;
    }
    for (double& w : logw)
        w /= sum;
    return logw;
}

double BayesOracle::expert_correct_prob(std::span<const double> x) const {
    const std::vector<double> eta = posterior(x);
    double p = 0.0;
    for (int y = 0; y < spec_.num_classes; ++y)
        p += eta[y] * expert_.accuracy[y];
    return p;
}

BayesDecision BayesOracle::decision(std::span<const double> x) const {
    const std::vector<double> eta = posterior(x);
    BayesDecision d;
    const auto best = std::max_element(eta.begin(), eta.end());
    d.predicted_class = static_cast<int>(best - eta.begin());
    double p = 0.0;
    for (int y = 0; y < spec_.num_classes; ++y)
        p += eta[y] * expert_.accuracy[y];
    d.expert_correct_prob = p;
    d.deferred = p >= *best;
    return d;
}

void BayesOracle::dump_grid(const std::filesystem::path& path, double lo, double hi,
                            int points_per_axis) const {
    if (spec_.dim != 2)
        throw ConfigError("grid dump requires a 2-D mixture");
    if (points_per_axis < 2)
        throw ConfigError("grid needs at least 2 points per axis");
    if (!(lo < hi))
        throw ConfigError("grid bounds must satisfy lo < hi");

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot open file for writing: " + path.string());
    out << "x0,x1";
    for (int y = 0; y < spec_.num_classes; ++y)
        out << ",posterior_" << y;
    out << ",expert_correct_prob,predicted_class,deferred\n";

    const double step = (hi - lo) / (points_per_axis - 1);
    char buf[32];
    auto write_double = [&](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        (void)ec;
        out.write(buf, ptr - buf);
    };
    std::vector<double> x(2);
    for (int a = 0; a < points_per_axis; ++a) {
        x[0] = lo + step * a;
        for (int b = 0; b < points_per_axis; ++b) {
            x[1] = lo + step * b;
            const std::vector<double> eta = posterior(x);
            const BayesDecision d = decision(x);
            write_double(x[0]);
            out.put(',');
            write_double(x[1]);
            for (double e : eta) {
                out.put(',');
                write_double(e);
            }
            out.put(',');
            write_double(d.expert_correct_prob);
            out << ',' << d.predicted_class << ',' << (d.deferred ? 1 : 0) << '\n';
        }
    }
    if (!out)
        throw ParseError("write failed: " + path.string());
}

DataSplit make_worked_example_dataset(int num_classes, int n, std::uint64_t seed) {
    if (num_classes < 2)
        throw ConfigError("worked example needs at least 2 classes");
    if (n < 10)
        throw ConfigError("worked example needs at least 10 instances");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> label_dist(0, num_classes - 1);
    Dataset ds;
    ds.num_classes = num_classes;
    ds.dim = 1;
    ds.instances.reserve(n);
    for (int i = 0; i < n; ++i) {
        Instance inst;
        inst.features = {1.0};
        inst.label = label_dist(rng);
        inst.expert_prediction = inst.label;
        ds.instances.push_back(std::move(inst));
    }
    return split_dataset(ds, {0.6, 0.2, 0.2}, seed);
}

} // namespace l2d
