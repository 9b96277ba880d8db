// Command line front end: generate synthetic deferral datasets, train the
// surrogate or baseline models, evaluate a checkpoint with calibration
// diagnostics, and run budget or expertise sweeps. All outputs are
// deterministic functions of the effective config and seed.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "l2d/calibration.hpp"
#include "l2d/dataset.hpp"
#include "l2d/deferral.hpp"
#include "l2d/error.hpp"
#include "l2d/estimators.hpp"
#include "l2d/model.hpp"
#include "l2d/simulation.hpp"
#include "l2d/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Small helpers

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw l2d::ParseError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw l2d::ParseError("cannot open file for writing: " + path.string());
    out << content;
    if (!out)
        throw l2d::ParseError("write failed: " + path.string());
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Configuration

struct DatasetConfig {
    std::string kind = "synthetic"; // synthetic | worked_example | csv
    int num_classes = 3;
    double radius = 2.0;
    double sigma = 1.0;
    int n = 25000;
    std::array<double, 3> fractions = {0.8, 0.1, 0.1};
    std::string dir;
    bool header = false;
    bool oracle_grid = false;
    double grid_lo = -4.0;
    double grid_hi = 4.0;
    int grid_points = 100;
};

struct ExpertConfig {
    std::string kind = "split"; // split | per_class | oracle | uniform_random
    int boundary = 2;
    double acc_head = 0.95;
    double acc_tail = 0.1;
    std::vector<double> accuracy;
};

struct ModelConfig {
    std::string architecture = "mlp1"; // linear | mlp1
    int hidden_width = 32;
};

struct EvaluateConfig {
    int bins = 15;
    std::string split = "test";
    std::string policy = "none";
    double budget = 0.0;
};

struct SweepConfig {
    std::string kind = "budget"; // budget | expertise
    std::string policy = "surrogate_sorted";
    std::vector<double> budgets = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                   0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<int> boundaries = {0, 1, 2, 3};
    double acc_head = 0.95;
    double acc_tail = 0.1;
};

struct AppConfig {
    std::uint64_t seed = 0;
    std::string out = "runs/out";
    std::string surrogate = "softmax"; // softmax | one_vs_all
    std::string objective = "surrogate"; // surrogate | plain | confidence_baseline
    double alpha = 1.0;
    DatasetConfig dataset;
    ExpertConfig expert;
    ModelConfig model;
    l2d::TrainConfig train;
    EvaluateConfig evaluate;
    SweepConfig sweep;
};

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

AppConfig parse_config(const fs::path& path) {
    if (!fs::exists(path))
        throw l2d::ConfigError("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw l2d::ParseError("bad config " + path.string() + ": " + e.what());
    }

    AppConfig c;
    try {
        read_field(j, "seed", c.seed);
        read_field(j, "out", c.out);
        read_field(j, "surrogate", c.surrogate);
        read_field(j, "objective", c.objective);
        read_field(j, "alpha", c.alpha);
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            read_field(d, "kind", c.dataset.kind);
            read_field(d, "num_classes", c.dataset.num_classes);
            read_field(d, "radius", c.dataset.radius);
            read_field(d, "sigma", c.dataset.sigma);
            read_field(d, "n", c.dataset.n);
            read_field(d, "dir", c.dataset.dir);
            read_field(d, "header", c.dataset.header);
            read_field(d, "oracle_grid", c.dataset.oracle_grid);
            read_field(d, "grid_lo", c.dataset.grid_lo);
            read_field(d, "grid_hi", c.dataset.grid_hi);
            read_field(d, "grid_points", c.dataset.grid_points);
            if (d.contains("fractions")) {
                const auto f = d.at("fractions").get<std::vector<double>>();
                if (f.size() != 3)
                    throw l2d::ConfigError("dataset.fractions needs 3 entries");
                std::copy(f.begin(), f.end(), c.dataset.fractions.begin());
            }
        }
        if (j.contains("expert")) {
            const json& e = j.at("expert");
            read_field(e, "kind", c.expert.kind);
            read_field(e, "boundary", c.expert.boundary);
            read_field(e, "acc_head", c.expert.acc_head);
            read_field(e, "acc_tail", c.expert.acc_tail);
            read_field(e, "accuracy", c.expert.accuracy);
        }
        if (j.contains("model")) {
            const json& m = j.at("model");
            read_field(m, "architecture", c.model.architecture);
            read_field(m, "hidden_width", c.model.hidden_width);
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            read_field(t, "learning_rate", c.train.learning_rate);
            read_field(t, "momentum", c.train.momentum);
            read_field(t, "weight_decay", c.train.weight_decay);
            read_field(t, "epochs", c.train.epochs);
            read_field(t, "batch_size", c.train.batch_size);
            read_field(t, "patience", c.train.patience);
            read_field(t, "cosine_annealing", c.train.cosine_annealing);
            read_field(t, "warmup_epochs", c.train.warmup_epochs);
        }
        if (j.contains("evaluate")) {
            const json& e = j.at("evaluate");
            read_field(e, "bins", c.evaluate.bins);
            read_field(e, "split", c.evaluate.split);
            read_field(e, "policy", c.evaluate.policy);
            read_field(e, "budget", c.evaluate.budget);
        }
        if (j.contains("sweep")) {
            const json& s = j.at("sweep");
            read_field(s, "kind", c.sweep.kind);
            read_field(s, "policy", c.sweep.policy);
            read_field(s, "budgets", c.sweep.budgets);
            read_field(s, "boundaries", c.sweep.boundaries);
            read_field(s, "acc_head", c.sweep.acc_head);
            read_field(s, "acc_tail", c.sweep.acc_tail);
        }
    } catch (const json::exception& e) {
        throw l2d::ParseError("bad config " + path.string() + ": " + e.what());
    }
    return c;
}

ordered_json effective_json(const AppConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["out"] = c.out;
    j["surrogate"] = c.surrogate;
    j["objective"] = c.objective;
    j["alpha"] = c.alpha;
    j["dataset"] = {{"kind", c.dataset.kind},
                    {"num_classes", c.dataset.num_classes},
                    {"radius", c.dataset.radius},
                    {"sigma", c.dataset.sigma},
                    {"n", c.dataset.n},
                    {"fractions", c.dataset.fractions},
                    {"dir", c.dataset.dir},
                    {"header", c.dataset.header},
                    {"oracle_grid", c.dataset.oracle_grid},
                    {"grid_lo", c.dataset.grid_lo},
                    {"grid_hi", c.dataset.grid_hi},
                    {"grid_points", c.dataset.grid_points}};
    j["expert"] = {{"kind", c.expert.kind},
                   {"boundary", c.expert.boundary},
                   {"acc_head", c.expert.acc_head},
                   {"acc_tail", c.expert.acc_tail},
                   {"accuracy", c.expert.accuracy}};
    j["model"] = {{"architecture", c.model.architecture},
                  {"hidden_width", c.model.hidden_width}};
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"momentum", c.train.momentum},
                  {"weight_decay", c.train.weight_decay},
                  {"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"patience", c.train.patience},
                  {"cosine_annealing", c.train.cosine_annealing},
                  {"warmup_epochs", c.train.warmup_epochs}};
    j["evaluate"] = {{"bins", c.evaluate.bins},
                     {"split", c.evaluate.split},
                     {"policy", c.evaluate.policy},
                     {"budget", c.evaluate.budget}};
    j["sweep"] = {{"kind", c.sweep.kind},
                  {"policy", c.sweep.policy},
                  {"budgets", c.sweep.budgets},
                  {"boundaries", c.sweep.boundaries},
                  {"acc_head", c.sweep.acc_head},
                  {"acc_tail", c.sweep.acc_tail}};
    return j;
}

struct EffectiveConfig {
    AppConfig config;
    std::string hash;
};

EffectiveConfig finalize_config(AppConfig config) {
    // The hash identifies the experiment; where its outputs land does not
    // belong in that identity.
    ordered_json hashed = effective_json(config);
    hashed.erase("out");
    EffectiveConfig e;
    e.hash = to_hex(fnv1a64(hashed.dump()));
    e.config = std::move(config);
    return e;
}

void write_effective_config(const fs::path& out_dir, const EffectiveConfig& e) {
    ordered_json j = effective_json(e.config);
    j["config_hash"] = e.hash;
    write_file(out_dir / "effective_config.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Builders

l2d::ExpertModel make_expert(const ExpertConfig& e, int num_classes) {
    if (e.kind == "split")
        return l2d::make_split_expert(num_classes, e.boundary, e.acc_head,
                                      e.acc_tail);
    if (e.kind == "per_class") {
        if (static_cast<int>(e.accuracy.size()) != num_classes)
            throw l2d::ConfigError("expert.accuracy needs one entry per class");
        return l2d::ExpertModel::per_class(e.accuracy);
    }
    if (e.kind == "oracle")
        return l2d::ExpertModel::oracle(num_classes);
    if (e.kind == "uniform_random")
        return l2d::ExpertModel::uniform_random(num_classes);
    throw l2d::ConfigError("unknown expert kind: " + e.kind);
}

l2d::ModelSpec make_model_spec(const ModelConfig& m) {
    l2d::ModelSpec spec;
    if (m.architecture == "linear") {
        spec.arch = l2d::Architecture::linear;
    } else if (m.architecture == "mlp1") {
        spec.arch = l2d::Architecture::mlp1;
        spec.hidden_width = m.hidden_width;
    } else {
        throw l2d::ConfigError("unknown architecture: " + m.architecture);
    }
    return spec;
}

l2d::SurrogateKind parse_surrogate(const std::string& name) {
    if (name == "softmax")
        return l2d::SurrogateKind::softmax;
    if (name == "one_vs_all")
        return l2d::SurrogateKind::one_vs_all;
    throw l2d::ConfigError("unknown surrogate: " + name);
}

l2d::PolicyKind parse_policy(const std::string& name) {
    if (name == "surrogate_sorted")
        return l2d::PolicyKind::surrogate_sorted;
    if (name == "score_baseline")
        return l2d::PolicyKind::score_baseline;
    if (name == "confidence_baseline")
        return l2d::PolicyKind::confidence_baseline;
    throw l2d::ConfigError("unknown policy: " + name);
}

// ---------------------------------------------------------------------------
// Dataset bundles

l2d::DataSplit synthesize(const AppConfig& c) {
    if (c.dataset.kind == "worked_example")
        return l2d::make_worked_example_dataset(c.dataset.num_classes, c.dataset.n,
                                                c.seed);
    const l2d::GaussianMixtureSpec spec = l2d::GaussianMixtureSpec::circle(
        c.dataset.num_classes, c.dataset.radius, c.dataset.sigma);
    const l2d::ExpertModel expert = make_expert(c.expert, c.dataset.num_classes);
    const l2d::Dataset ds =
        l2d::generate_dataset(spec, expert, c.dataset.n, c.seed);
    return l2d::split_dataset(ds, c.dataset.fractions, c.seed);
}

l2d::DataSplit load_bundle(const fs::path& dir, int num_classes, bool header) {
    for (const char* name : {"train.csv", "validation.csv", "test.csv"})
        if (!fs::exists(dir / name))
            throw l2d::ConfigError("missing dataset file: " + (dir / name).string());

    int k = num_classes;
    const fs::path manifest_path = dir / "manifest.json";
    if (fs::exists(manifest_path)) {
        json manifest;
        try {
            manifest = json::parse(read_file(manifest_path));
        } catch (const json::exception& e) {
            throw l2d::ParseError("bad manifest " + manifest_path.string() + ": " +
                                  e.what());
        }
        k = manifest.value("num_classes", num_classes);
        if (manifest.contains("files")) {
            for (const auto& [name, meta] : manifest.at("files").items()) {
                const std::string recorded = meta.value("fnv1a64", std::string{});
                if (recorded.empty())
                    continue;
                const std::string actual =
                    to_hex(fnv1a64(read_file(dir / name)));
                if (actual != recorded)
                    throw l2d::ParseError("checksum mismatch for " +
                                          (dir / name).string() +
                                          " (file differs from manifest)");
            }
        }
    }
    l2d::DataSplit split;
    split.train = l2d::load_dataset(dir / "train.csv", k, header);
    split.validation = l2d::load_dataset(dir / "validation.csv", k, header);
    split.test = l2d::load_dataset(dir / "test.csv", k, header);
    return split;
}

l2d::DataSplit acquire_data(const AppConfig& c, const std::string& data_dir) {
    if (!data_dir.empty())
        return load_bundle(data_dir, c.dataset.num_classes, c.dataset.header);
    if (c.dataset.kind == "csv") {
        if (c.dataset.dir.empty())
            throw l2d::ConfigError("dataset.kind is csv but no dataset.dir given");
        return load_bundle(c.dataset.dir, c.dataset.num_classes, c.dataset.header);
    }
    return synthesize(c);
}

double expert_train_accuracy(const l2d::Dataset& train) {
    std::size_t correct = 0;
    for (const l2d::Instance& inst : train.instances)
        if (inst.expert_prediction == inst.label)
            ++correct;
    return static_cast<double>(correct) / static_cast<double>(train.size());
}

// ---------------------------------------------------------------------------
// Serialization shared by commands

ordered_json summary_json(const l2d::EvalSummary& s) {
    ordered_json j;
    j["system_accuracy"] = s.system_accuracy;
    j["coverage"] = s.coverage;
    j["classifier_accuracy"] = s.classifier_accuracy;
    j["expert_accuracy"] = s.expert_accuracy;
    j["n_deferred"] = s.n_deferred;
    j["n"] = s.n;
    return j;
}

ordered_json calibration_json(const l2d::CalibrationReport& report,
                              const std::string& hash) {
    ordered_json j;
    j["version"] = 1;
    j["config_hash"] = hash;
    j["ece"] = report.ece;
    j["n"] = report.n;
    j["pathology_fraction"] = report.pathology_fraction;
    j["bin_count"] = report.bins.bin_count();
    ordered_json bins = ordered_json::array();
    for (const l2d::ReliabilityBin& bin : report.bins.bins) {
        ordered_json b;
        b["lower"] = bin.lower;
        b["upper"] = bin.upper;
        b["count"] = bin.count;
        b["mean_confidence"] = bin.mean_confidence();
        b["accuracy"] = bin.accuracy();
        bins.push_back(std::move(b));
    }
    j["bins"] = std::move(bins);
    return j;
}

void write_sweep_csv(const fs::path& path, const std::string& x_name,
                     const std::vector<std::string>& x_values,
                     const std::vector<std::string>& methods,
                     const std::vector<l2d::EvalSummary>& summaries) {
    std::string csv = x_name +
                      ",method,system_accuracy,coverage,classifier_accuracy,"
                      "expert_accuracy,n_deferred\n";
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const l2d::EvalSummary& s = summaries[i];
        csv += x_values[i];
        csv += ',';
        csv += methods[i];
        csv += ',';
        csv += format_double(s.system_accuracy);
        csv += ',';
        csv += format_double(s.coverage);
        csv += ',';
        csv += format_double(s.classifier_accuracy);
        csv += ',';
        csv += format_double(s.expert_accuracy);
        csv += ',';
        csv += std::to_string(s.n_deferred);
        csv += '\n';
    }
    write_file(path, csv);
}

// ---------------------------------------------------------------------------
// Commands

int cmd_generate(const EffectiveConfig& e) {
    const AppConfig& c = e.config;
    if (c.dataset.kind == "csv")
        throw l2d::ConfigError("generate needs a synthetic dataset spec");
    const l2d::DataSplit split = synthesize(c);

    const fs::path out(c.out);
    fs::create_directories(out);
    l2d::save_dataset(split.train, out / "train.csv");
    l2d::save_dataset(split.validation, out / "validation.csv");
    l2d::save_dataset(split.test, out / "test.csv");

    ordered_json manifest;
    manifest["version"] = 1;
    manifest["config_hash"] = e.hash;
    manifest["seed"] = c.seed;
    manifest["num_classes"] = split.train.num_classes;
    manifest["dim"] = split.train.dim;
    ordered_json files;
    for (const char* name : {"train.csv", "validation.csv", "test.csv"}) {
        const l2d::Dataset& part = name == std::string("train.csv")
                                       ? split.train
                                       : (name == std::string("validation.csv")
                                              ? split.validation
                                              : split.test);
        ordered_json f;
        f["rows"] = part.size();
        f["fnv1a64"] = to_hex(fnv1a64(read_file(out / name)));
        files[name] = std::move(f);
    }
    manifest["files"] = std::move(files);
    write_file(out / "manifest.json", manifest.dump(2) + "\n");

    if (c.dataset.oracle_grid && c.dataset.kind == "synthetic") {
        const l2d::GaussianMixtureSpec spec = l2d::GaussianMixtureSpec::circle(
            c.dataset.num_classes, c.dataset.radius, c.dataset.sigma);
        const l2d::BayesOracle oracle(spec,
                                      make_expert(c.expert, c.dataset.num_classes));
        oracle.dump_grid(out / "oracle_grid.csv", c.dataset.grid_lo,
                         c.dataset.grid_hi, c.dataset.grid_points);
    }

    write_effective_config(out, e);
    std::cout << "wrote " << split.train.size() << "/" << split.validation.size()
              << "/" << split.test.size() << " rows to " << out.string() << "\n";
    return 0;
}

int cmd_train(const EffectiveConfig& e, const std::string& data_dir) {
    const AppConfig& c = e.config;
    const l2d::DataSplit split = acquire_data(c, data_dir);
    const l2d::ModelSpec model_spec = make_model_spec(c.model);
    l2d::TrainConfig train_config = c.train;
    train_config.seed = c.seed;

    l2d::Checkpoint ckpt;
    ckpt.config_hash = e.hash;
    l2d::TrainReport report;

    if (c.objective == "surrogate") {
        const l2d::SurrogateKind surrogate = parse_surrogate(c.surrogate);
        const l2d::TrainResult result =
            l2d::train(split, surrogate, l2d::logistic_loss(), model_spec,
                       train_config, l2d::AlphaWeight(c.alpha));
        ckpt.model = result.model;
        ckpt.objective = c.surrogate;
        report = result.report;
    } else if (c.objective == "plain") {
        const l2d::TrainResult result =
            l2d::train_plain_classifier(split, model_spec, train_config);
        ckpt.model = result.model;
        ckpt.objective = "plain";
        report = result.report;
        // Temperature-scale on the validation split, folding the scale into
        // the output layer.
        std::vector<std::vector<double>> scores;
        std::vector<int> labels;
        scores.reserve(split.validation.size());
        labels.reserve(split.validation.size());
        for (const l2d::Instance& inst : split.validation.instances) {
            scores.push_back(l2d::forward_raw(ckpt.model, inst.features));
            labels.push_back(inst.label);
        }
        ckpt.temperature = l2d::fit_temperature_softmax(scores, labels);
        l2d::apply_temperature(ckpt.model, ckpt.temperature);
    } else if (c.objective == "confidence_baseline") {
        // The budget is part of the training rule for this baseline.
        const double acc = expert_train_accuracy(split.train);
        const l2d::TrainResult result = l2d::confidence_baseline_train(
            split, acc, c.evaluate.budget, model_spec, train_config);
        ckpt.model = result.model;
        ckpt.objective = "plain";
        report = result.report;
    } else {
        throw l2d::ConfigError("unknown objective: " + c.objective);
    }

    const fs::path out(c.out);
    fs::create_directories(out);
    l2d::save_checkpoint(out / "checkpoint.json", ckpt);
    l2d::save_train_report(out / "train_report.json", report, e.hash);
    write_effective_config(out, e);
    std::cout << "stopped at epoch " << report.stopped_epoch << " (best "
              << report.best_epoch << "), checkpoint in " << out.string() << "\n";
    return 0;
}

const l2d::Dataset& pick_split(const l2d::DataSplit& split, const std::string& name) {
    if (name == "train")
        return split.train;
    if (name == "validation")
        return split.validation;
    if (name == "test")
        return split.test;
    throw l2d::ConfigError("unknown split: " + name);
}

int cmd_evaluate(const EffectiveConfig& e, const std::string& checkpoint_path,
                 const std::string& data_dir) {
    const AppConfig& c = e.config;
    if (!fs::exists(checkpoint_path))
        throw l2d::ConfigError("missing checkpoint: " + checkpoint_path);
    const l2d::Checkpoint ckpt = l2d::load_checkpoint(checkpoint_path);
    const l2d::DataSplit split = acquire_data(c, data_dir);
    const l2d::Dataset& data = pick_split(split, c.evaluate.split);
    if (ckpt.model.num_classes != data.num_classes)
        throw l2d::ConfigError("checkpoint has " +
                               std::to_string(ckpt.model.num_classes) +
                               " classes, dataset has " +
                               std::to_string(data.num_classes));

    const bool plain = ckpt.objective == "plain";
    const l2d::SurrogateKind surrogate =
        plain ? l2d::SurrogateKind::softmax : parse_surrogate(ckpt.objective);
    const l2d::BinaryLoss phi = l2d::logistic_loss();

    std::optional<l2d::BudgetPolicy> policy;
    if (c.evaluate.policy != "none")
        policy = l2d::BudgetPolicy{parse_policy(c.evaluate.policy),
                                   c.evaluate.budget};
    if (plain && !policy)
        throw l2d::ConfigError(
            "a plain classifier checkpoint needs evaluate.policy");
    const double expert_acc = expert_train_accuracy(split.train);

    const fs::path out(c.out);
    fs::create_directories(out);

    ordered_json summary;
    summary["version"] = 1;
    summary["config_hash"] = e.hash;
    summary["split"] = c.evaluate.split;
    summary["objective"] = ckpt.objective;
    summary["n"] = data.size();

    if (!plain)
        summary["native"] = summary_json(
            l2d::evaluate_system(ckpt.model, data, surrogate, phi));
    if (policy) {
        ordered_json p = summary_json(l2d::evaluate_system(
            ckpt.model, data, surrogate, phi, policy, expert_acc));
        p["policy"] = c.evaluate.policy;
        p["budget"] = c.evaluate.budget;
        summary["policy_result"] = std::move(p);
    }

    // Classifier confidence calibration over the whole split.
    {
        const l2d::SystemScores scores =
            l2d::score_dataset(ckpt.model, data, surrogate, phi);
        std::vector<bool> correct(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            correct[i] = scores.predicted[i] == data.instances[i].label;
        const l2d::CalibrationReport clf = l2d::compute_ece(
            scores.classifier_confidence, correct, c.evaluate.bins);
        write_file(out / "calibration_classifier.json",
                   calibration_json(clf, e.hash).dump(2) + "\n");
        summary["classifier_calibration"] = {{"ece", clf.ece}, {"n", clf.n}};
    }

    if (!plain) {
        // Expert correctness calibration, the quantity the deferral output
        // is supposed to estimate.
        std::vector<double> raw(data.size()), clamped(data.size());
        std::vector<bool> expert_right(data.size());
        std::size_t negatives = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const l2d::SystemDecision d =
                l2d::decide(l2d::forward(ckpt.model, data.instances[i].features),
                            surrogate, phi);
            raw[i] = d.expert_confidence_raw;
            clamped[i] = d.expert_confidence;
            expert_right[i] = data.instances[i].expert_prediction ==
                              data.instances[i].label;
            if (d.all_scores_negative)
                ++negatives;
        }
        const l2d::PathologyStats pathology = l2d::pathology_stats(raw);
        l2d::CalibrationReport expert_report =
            l2d::compute_ece(clamped, expert_right, c.evaluate.bins);
        expert_report.pathology_fraction = pathology.fraction_above_one;
        write_file(out / "calibration_expert.json",
                   calibration_json(expert_report, e.hash).dump(2) + "\n");
        l2d::save_histogram_csv(out / "pathology_histogram.csv",
                                pathology.histogram);

        const std::vector<double> risks = l2d::error_distribution(clamped);
        l2d::save_histogram_csv(out / "risk_histogram.csv",
                                l2d::make_histogram(risks, 0.0, 1.0, 20));
        std::vector<double> error_indicator(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            error_indicator[i] = expert_right[i] ? 0.0 : 1.0;
        summary["expert_calibration"] = {
            {"ece", expert_report.ece},
            {"pathology_fraction", pathology.fraction_above_one},
            {"n", expert_report.n}};
        summary["wasserstein_risk_error"] =
            l2d::wasserstein_1d(risks, error_indicator);
        summary["all_scores_negative_count"] = negatives;
    } else {
        summary["expert_calibration"] = nullptr;
        summary["wasserstein_risk_error"] = nullptr;
    }

    write_file(out / "eval_summary.json", summary.dump(2) + "\n");
    write_effective_config(out, e);
    std::cout << "evaluation written to " << out.string() << "\n";
    return 0;
}

int cmd_sweep(const EffectiveConfig& e, const std::string& checkpoint_path,
              const std::string& data_dir) {
    const AppConfig& c = e.config;
    const fs::path out(c.out);
    fs::create_directories(out);

    if (c.sweep.kind == "budget") {
        if (checkpoint_path.empty())
            throw l2d::ConfigError("budget sweep needs --checkpoint");
        if (!fs::exists(checkpoint_path))
            throw l2d::ConfigError("missing checkpoint: " + checkpoint_path);
        const l2d::Checkpoint ckpt = l2d::load_checkpoint(checkpoint_path);
        const l2d::DataSplit split = acquire_data(c, data_dir);
        const l2d::Dataset& data = pick_split(split, c.evaluate.split);
        const bool plain = ckpt.objective == "plain";
        const l2d::SurrogateKind surrogate =
            plain ? l2d::SurrogateKind::softmax : parse_surrogate(ckpt.objective);
        const double expert_acc = expert_train_accuracy(split.train);

        const auto rows = l2d::sweep_budget(
            ckpt.model, data, surrogate, l2d::logistic_loss(),
            parse_policy(c.sweep.policy), c.sweep.budgets, expert_acc);
        std::vector<std::string> xs, methods;
        std::vector<l2d::EvalSummary> summaries;
        for (const auto& [budget, summary] : rows) {
            xs.push_back(format_double(budget));
            methods.push_back(c.sweep.policy);
            summaries.push_back(summary);
        }
        write_sweep_csv(out / "sweep.csv", "budget", xs, methods, summaries);
    } else if (c.sweep.kind == "expertise") {
        if (c.dataset.kind != "synthetic")
            throw l2d::ConfigError("expertise sweep needs a synthetic dataset spec");
        const l2d::GaussianMixtureSpec spec = l2d::GaussianMixtureSpec::circle(
            c.dataset.num_classes, c.dataset.radius, c.dataset.sigma);
        l2d::TrainConfig train_config = c.train;
        train_config.seed = c.seed;
        const auto rows = l2d::sweep_expertise(
            spec, c.sweep.boundaries, c.sweep.acc_head, c.sweep.acc_tail,
            c.dataset.n, c.dataset.fractions, make_model_spec(c.model),
            train_config, c.seed);
        std::vector<std::string> xs, methods;
        std::vector<l2d::EvalSummary> summaries;
        for (const l2d::ExpertiseRow& row : rows) {
            xs.push_back(std::to_string(row.boundary));
            methods.push_back(row.method == l2d::SurrogateKind::softmax
                                  ? "softmax"
                                  : "one_vs_all");
            summaries.push_back(row.summary);
        }
        write_sweep_csv(out / "sweep.csv", "k", xs, methods, summaries);
    } else {
        throw l2d::ConfigError("unknown sweep kind: " + c.sweep.kind);
    }

    write_effective_config(out, e);
    std::cout << "sweep written to " << (out / "sweep.csv").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learning-to-defer training and evaluation tool"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string data_dir;
    std::string checkpoint_path;
    std::int64_t seed_override = -1;
    bool header = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file")->required();
        cmd->add_option("--seed", seed_override, "Override the config seed");
        cmd->add_option("--out", out_override, "Override the output directory");
        cmd->add_flag("--header", header, "Dataset CSVs start with a header row");
    };

    CLI::App* generate = app.add_subcommand(
        "generate", "Write a synthetic dataset bundle (CSVs + manifest)");
    add_common(generate);

    CLI::App* train = app.add_subcommand(
        "train", "Train a model and write checkpoint + report");
    add_common(train);
    train->add_option("--data", data_dir, "Directory with train/validation/test CSVs");

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Evaluate a checkpoint with calibration diagnostics");
    add_common(evaluate);
    evaluate->add_option("--data", data_dir, "Directory with train/validation/test CSVs");
    evaluate->add_option("--checkpoint", checkpoint_path, "Checkpoint file")
        ->required();

    CLI::App* sweep = app.add_subcommand(
        "sweep", "Budget or expertise sweep to CSV");
    add_common(sweep);
    sweep->add_option("--data", data_dir, "Directory with train/validation/test CSVs");
    sweep->add_option("--checkpoint", checkpoint_path, "Checkpoint file (budget sweeps)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        AppConfig config = parse_config(config_path);
        if (seed_override >= 0)
            config.seed = static_cast<std::uint64_t>(seed_override);
        if (!out_override.empty())
            config.out = out_override;
        if (header)
            config.dataset.header = true;
        const EffectiveConfig effective = finalize_config(std::move(config));

        if (generate->parsed())
            return cmd_generate(effective);
        if (train->parsed())
            return cmd_train(effective, data_dir);
        if (evaluate->parsed())
            return cmd_evaluate(effective, checkpoint_path, data_dir);
        if (sweep->parsed())
            return cmd_sweep(effective, checkpoint_path, data_dir);
        return 2;
    } catch (const l2d::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const l2d::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
