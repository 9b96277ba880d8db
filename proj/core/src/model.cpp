#include "l2d/model.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "l2d/error.hpp"

namespace l2d {

namespace {

std::size_t param_count(Architecture arch, int d, int out, int hidden) {
    if (arch == Architecture::linear)
        return static_cast<std::size_t>(out) * d + out;
    return static_cast<std::size_t>(hidden) * d + hidden +
           static_cast<std::size_t>(out) * hidden + out;
}

void check_model(const ModelParams& p) {
    if (p.input_dim < 1 || p.num_classes < 2)
        throw ConfigError("model needs input_dim >= 1 and num_classes >= 2");
    if (p.arch == Architecture::mlp1 && p.hidden_width < 1)
        throw ConfigError("mlp1 needs hidden_width >= 1");
    const std::size_t expected =
        param_count(p.arch, p.input_dim, p.output_dim(), p.hidden_width);
    if (p.values.size() != expected)
        throw ConfigError("parameter array has " + std::to_string(p.values.size()) +
                          " values, expected " + std::to_string(expected));
}

void check_input(const ModelParams& p, std::span<const double> x) {
    if (static_cast<int>(x.size()) != p.input_dim)
        throw ConfigError("input has " + std::to_string(x.size()) +
                          " features, model expects " + std::to_string(p.input_dim));
}

} // namespace

ModelParams init_model(const ModelSpec& spec, int input_dim, int num_classes,
                       bool defer_head, std::mt19937_64& rng) {
    ModelParams p;
    p.arch = spec.arch;
    p.input_dim = input_dim;
    p.num_classes = num_classes;
    p.defer_head = defer_head;
    p.hidden_width = spec.arch == Architecture::mlp1 ? spec.hidden_width : 0;
    if (input_dim < 1 || num_classes < 2)
        throw ConfigError("model needs input_dim >= 1 and num_classes >= 2");
    if (spec.arch == Architecture::mlp1 && spec.hidden_width < 1)
        throw ConfigError("mlp1 needs hidden_width >= 1");

    const int out = p.output_dim();
    p.values.assign(param_count(p.arch, input_dim, out, p.hidden_width), 0.0);

    auto fill_uniform = [&rng](double* begin, std::size_t n, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < n; ++i)
            begin[i] = dist(rng);
    };

    if (p.arch == Architecture::linear) {
        fill_uniform(p.values.data(), static_cast<std::size_t>(out) * input_dim,
                     input_dim);
    } else {
        const int h = p.hidden_width;
        double* w1 = p.values.data();
        double* w2 = p.values.data() + static_cast<std::size_t>(h) * input_dim + h;
        fill_uniform(w1, static_cast<std::size_t>(h) * input_dim, input_dim);
        fill_uniform(w2, static_cast<std::size_t>(out) * h, h);
    }
    return p;
}

std::vector<double> forward_raw(const ModelParams& p, std::span<const double> x) {
    check_model(p);
    check_input(p, x);
    const int d = p.input_dim;
    const int out = p.output_dim();

    if (p.arch == Architecture::linear) {
        const double* w = p.values.data();
        const double* b = w + static_cast<std::size_t>(out) * d;
        std::vector<double> scores(out);
        for (int o = 0; o < out; ++o) {
            double s = b[o];
            const double* row = w + static_cast<std::size_t>(o) * d;
            for (int j = 0; j < d; ++j)
                s += row[j] * x[j];
            scores[o] = s;
        }
        return scores;
    }

    const int h = p.hidden_width;
    const double* w1 = p.values.data();
    const double* b1 = w1 + static_cast<std::size_t>(h) * d;
    const double* w2 = b1 + h;
    const double* b2 = w2 + static_cast<std::size_t>(out) * h;

    std::vector<double> hidden(h);
    for (int i = 0; i < h; ++i) {
        double s = b1[i];
        const double* row = w1 + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j)
            s += row[j] * x[j];
        hidden[i] = s > 0.0 ? s : 0.0;
    }
    std::vector<double> scores(out);
    for (int o = 0; o < out; ++o) {
        double s = b2[o];
        const double* row = w2 + static_cast<std::size_t>(o) * h;
        for (int i = 0; i < h; ++i)
            s += row[i] * hidden[i];
        scores[o] = s;
    }
    return scores;
}

LogitVector forward(const ModelParams& p, std::span<const double> x) {
    if (!p.defer_head)
        throw ConfigError("model has no deferral output");
    std::vector<double> scores = forward_raw(p, x);
    LogitVector g;
    g.defer_score = scores.back();
    scores.pop_back();
    g.class_scores = std::move(scores);
    return g;
}

namespace {

// Chains d(loss)/d(scores) back through the network.
BackwardResult chain(const ModelParams& p, std::span<const double> x,
                     double loss, const std::vector<double>& dscores) {
    const int d = p.input_dim;
    const int out = p.output_dim();
    BackwardResult r;
    r.loss = loss;
    r.grad.assign(p.values.size(), 0.0);

    if (p.arch == Architecture::linear) {
        double* gw = r.grad.data();
        double* gb = gw + static_cast<std::size_t>(out) * d;
        for (int o = 0; o < out; ++o) {
            double* row = gw + static_cast<std::size_t>(o) * d;
            for (int j = 0; j < d; ++j)
                row[j] = dscores[o] * x[j];
            gb[o] = dscores[o];
        }
        return r;
    }

    const int h = p.hidden_width;
    const double* w1 = p.values.data();
    const double* b1 = w1 + static_cast<std::size_t>(h) * d;
    const double* w2 = b1 + h;

    std::vector<double> pre(h), hidden(h);
    for (int i = 0; i < h; ++i) {
        double s = b1[i];
        const double* row = w1 + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j)
            s += row[j] * x[j];
        pre[i] = s;
        hidden[i] = s > 0.0 ? s : 0.0;
    }

    double* gw1 = r.grad.data();
    double* gb1 = gw1 + static_cast<std::size_t>(h) * d;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + static_cast<std::size_t>(out) * h;

    std::vector<double> dhidden(h, 0.0);
    for (int o = 0; o < out; ++o) {
        const double* row = w2 + static_cast<std::size_t>(o) * h;
        double* grow = gw2 + static_cast<std::size_t>(o) * h;
        for (int i = 0; i < h; ++i) {
            grow[i] = dscores[o] * hidden[i];
            dhidden[i] += dscores[o] * row[i];
        }
        gb2[o] = dscores[o];
    }
    for (int i = 0; i < h; ++i) {
        const double dpre = pre[i] > 0.0 ? dhidden[i] : 0.0;
        double* grow = gw1 + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j)
            grow[j] = dpre * x[j];
        gb1[i] = dpre;
    }
    return r;
}

} // namespace

BackwardResult backward(const ModelParams& p, const Instance& instance,
                        SurrogateKind surrogate, const BinaryLoss& phi,
                        AlphaWeight alpha) {
    if (!p.defer_head)
        throw ConfigError("surrogate backward needs a deferral output");
    LogitVector g = forward(p, instance.features);
    double loss;
    std::vector<double> dscores;
    if (surrogate == SurrogateKind::softmax) {
        loss = softmax_l2d_loss(g, instance.label, instance.expert_prediction, alpha);
        dscores =
            softmax_l2d_grad(g, instance.label, instance.expert_prediction, alpha);
    } else {
        loss = ova_l2d_loss(g, instance.label, instance.expert_prediction, phi);
        dscores = ova_l2d_grad(g, instance.label, instance.expert_prediction, phi);
    }
    return chain(p, instance.features, loss, dscores);
}

BackwardResult backward_plain(const ModelParams& p, const Instance& instance) {
    if (p.defer_head)
        throw ConfigError("plain backward expects a model without deferral output");
    std::vector<double> scores = forward_raw(p, instance.features);
    const double loss = cross_entropy_loss(scores, instance.label);
    std::vector<double> dscores = cross_entropy_grad(scores, instance.label);
    return chain(p, instance.features, loss, dscores);
}

void apply_temperature(ModelParams& p, double temperature) {
    check_model(p);
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw ConfigError("temperature must be positive and finite");
    if (temperature == 1.0)
        return;
    std::size_t begin = 0;
    if (p.arch == Architecture::mlp1)
        begin = static_cast<std::size_t>(p.hidden_width) * p.input_dim +
                p.hidden_width;
    // Everything from the output layer on: weights then biases.
    for (std::size_t i = begin; i < p.values.size(); ++i)
        p.values[i] /= temperature;
}

namespace {

nlohmann::ordered_json model_to_json(const ModelParams& p) {
    nlohmann::ordered_json j;
    j["architecture"] = p.arch == Architecture::linear ? "linear" : "mlp1";
    j["input_dim"] = p.input_dim;
    j["num_classes"] = p.num_classes;
    j["defer_head"] = p.defer_head;
    j["hidden_width"] = p.hidden_width;
    j["values"] = p.values;
    return j;
}

ModelParams model_from_json(const nlohmann::json& j) {
    ModelParams p;
    const std::string arch = j.at("architecture").get<std::string>();
    if (arch == "linear")
        p.arch = Architecture::linear;
    else if (arch == "mlp1")
        p.arch = Architecture::mlp1;
    else
        throw ParseError("unknown architecture: " + arch);
    p.input_dim = j.at("input_dim").get<int>();
    p.num_classes = j.at("num_classes").get<int>();
    p.defer_head = j.at("defer_head").get<bool>();
    p.hidden_width = j.at("hidden_width").get<int>();
    p.values = j.at("values").get<std::vector<double>>();
    check_model(p);
    return p;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    check_model(ckpt.model);
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["objective"] = ckpt.objective;
    j["temperature"] = ckpt.temperature;
    j["config_hash"] = ckpt.config_hash;
    j["model"] = model_to_json(ckpt.model);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot open file for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out)
        throw ParseError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open checkpoint: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad checkpoint " + path.string() + ": " + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1)
            throw ParseError("unsupported checkpoint version in " + path.string());
        Checkpoint ckpt;
        ckpt.objective = j.at("objective").get<std::string>();
        ckpt.temperature = j.value("temperature", 1.0);
        ckpt.config_hash = j.value("config_hash", std::string{});
        ckpt.model = model_from_json(j.at("model"));
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad checkpoint " + path.string() + ": " + e.what());
    }
}

} // namespace l2d
