#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "l2d/calibration.hpp"
#include "l2d/deferral.hpp"
#include "l2d/estimators.hpp"
#include "l2d/losses.hpp"
#include "l2d/model.hpp"
#include "l2d/simulation.hpp"
#include "l2d/train.hpp"

namespace {

using namespace l2d;

LogitVector random_logits(std::mt19937_64& gen, int k) {
    std::uniform_real_distribution<double> dist(-4.0, 4.0);
    LogitVector g;
    g.class_scores.resize(k);
    for (double& s : g.class_scores)
        s = dist(gen);
    g.defer_score = dist(gen);
    return g;
}

void bm_softmax_loss_grad(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    std::mt19937_64 gen(1);
    const LogitVector g = random_logits(gen, k);
    for (auto _ : state) {
        benchmark::DoNotOptimize(softmax_l2d_loss(g, 0, 1));
        benchmark::DoNotOptimize(softmax_l2d_grad(g, 0, 1));
    }
}
BENCHMARK(bm_softmax_loss_grad)->Arg(3)->Arg(10)->Arg(100);

void bm_ova_loss_grad(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    std::mt19937_64 gen(1);
    const LogitVector g = random_logits(gen, k);
    const BinaryLoss phi = logistic_loss();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ova_l2d_loss(g, 0, 1, phi));
        benchmark::DoNotOptimize(ova_l2d_grad(g, 0, 1, phi));
    }
}
BENCHMARK(bm_ova_loss_grad)->Arg(3)->Arg(10)->Arg(100);

void bm_decide(benchmark::State& state) {
    std::mt19937_64 gen(2);
    const LogitVector g = random_logits(gen, 10);
    for (auto _ : state)
        benchmark::DoNotOptimize(decide(g, SurrogateKind::softmax));
}
BENCHMARK(bm_decide);

void bm_ece(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> conf(n);
    std::vector<bool> correct(n);
    for (std::size_t i = 0; i < n; ++i) {
        conf[i] = dist(gen);
        correct[i] = dist(gen) < conf[i];
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_ece(conf, correct, 15));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n));
}
BENCHMARK(bm_ece)->Arg(10000)->Arg(100000);

void bm_wasserstein(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 gen(4);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> a(n), b(n + n / 3);
    for (double& v : a)
        v = dist(gen);
    for (double& v : b)
        v = dist(gen) + 0.5;
    for (auto _ : state)
        benchmark::DoNotOptimize(wasserstein_1d(a, b));
}
BENCHMARK(bm_wasserstein)->Arg(1000)->Arg(10000);

void bm_bayes_posterior(benchmark::State& state) {
    const BayesOracle oracle(GaussianMixtureSpec::circle(10),
                             make_split_expert(10, 7, 1.0, 0.1));
    const std::vector<double> x = {0.7, -1.3};
    for (auto _ : state)
        benchmark::DoNotOptimize(oracle.posterior(x));
}
BENCHMARK(bm_bayes_posterior);

void bm_model_backward(benchmark::State& state) {
    std::mt19937_64 gen(5);
    ModelSpec spec;
    spec.arch = Architecture::mlp1;
    spec.hidden_width = static_cast<int>(state.range(0));
    const ModelParams params = init_model(spec, 2, 3, true, gen);
    Instance inst;
    inst.features = {0.3, -1.1};
    inst.label = 1;
    inst.expert_prediction = 1;
    const BinaryLoss phi = logistic_loss();
    for (auto _ : state)
        benchmark::DoNotOptimize(backward(params, inst, SurrogateKind::softmax, phi));
}
BENCHMARK(bm_model_backward)->Arg(32)->Arg(128);

void bm_train_epoch(benchmark::State& state) {
    const GaussianMixtureSpec spec = GaussianMixtureSpec::circle(3);
    const ExpertModel expert = make_split_expert(3, 2, 0.95, 0.1);
    const Dataset ds = generate_dataset(spec, expert, 2500, 7);
    const DataSplit split = split_dataset(ds, {0.8, 0.1, 0.1}, 7);
    ModelSpec mspec;
    mspec.arch = Architecture::mlp1;
    mspec.hidden_width = 32;
    TrainConfig config;
    config.epochs = 1;
    config.patience = 1;
    config.seed = 7;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            train(split, SurrogateKind::softmax, logistic_loss(), mspec, config));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(split.train.size()));
}
BENCHMARK(bm_train_epoch)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
