#include "l2d/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <system_error>

#include "l2d/error.hpp"

namespace l2d {

namespace {

void check_instance(const Instance& inst, int num_classes, int dim,
                    const std::string& where) {
    if (static_cast<int>(inst.features.size()) != dim)
        throw ConfigError(where + ": expected " + std::to_string(dim) +
                          " features, got " + std::to_string(inst.features.size()));
    if (inst.label < 0 || inst.label >= num_classes)
        throw ConfigError(where + ": label " + std::to_string(inst.label) +
                          " outside [0, " + std::to_string(num_classes) + ")");
    if (inst.expert_prediction < 0 || inst.expert_prediction >= num_classes)
        throw ConfigError(where + ": expert prediction " +
                          std::to_string(inst.expert_prediction) + " outside [0, " +
                          std::to_string(num_classes) + ")");
    for (double v : inst.features)
        if (!std::isfinite(v))
            throw ConfigError(where + ": non-finite feature value");
}

double parse_double(std::string_view field, std::size_t line_no) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_no) +
                         ": bad numeric field '" + std::string(field) + "'");
    return out;
}

int parse_int(std::string_view field, std::size_t line_no) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_no) +
                         ": bad integer field '" + std::string(field) + "'");
    return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

void append_shortest(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    out.append(buf, ptr);
}

} // namespace

Dataset make_dataset(std::vector<Instance> instances, int num_classes, int dim) {
    if (num_classes < 2)
        throw ConfigError("num_classes must be at least 2");
    if (dim < 1)
        throw ConfigError("feature dimension must be at least 1");
    for (std::size_t i = 0; i < instances.size(); ++i)
        check_instance(instances[i], num_classes, dim,
                       "instance " + std::to_string(i));
    Dataset ds;
    ds.instances = std::move(instances);
    ds.num_classes = num_classes;
    ds.dim = dim;
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path, int num_classes,
                     bool skip_header) {
    if (num_classes < 2)
        throw ConfigError("num_classes must be at least 2");
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open dataset file: " + path.string());

    std::vector<Instance> instances;
    std::string line;
    std::size_t line_no = 0;
    int dim = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line_no == 1 && skip_header)
            continue;
        if (line.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty row");
        auto fields = split_fields(line);
        if (fields.size() < 3)
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected at least 3 fields, got " +
                             std::to_string(fields.size()));
        if (dim < 0)
            dim = static_cast<int>(fields.size()) - 2;
        if (static_cast<int>(fields.size()) != dim + 2)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(dim + 2) + " fields, got " +
                             std::to_string(fields.size()));
        Instance inst;
        inst.features.reserve(dim);
        for (int j = 0; j < dim; ++j)
            inst.features.push_back(parse_double(fields[j], line_no));
        inst.label = parse_int(fields[dim], line_no);
        inst.expert_prediction = parse_int(fields[dim + 1], line_no);
        if (inst.label < 0 || inst.label >= num_classes)
            throw ParseError("line " + std::to_string(line_no) + ": label " +
                             std::to_string(inst.label) + " outside [0, " +
                             std::to_string(num_classes) + ")");
        if (inst.expert_prediction < 0 || inst.expert_prediction >= num_classes)
            throw ParseError("line " + std::to_string(line_no) +
                             ": expert prediction " +
                             std::to_string(inst.expert_prediction) +
                             " outside [0, " + std::to_string(num_classes) + ")");
        instances.push_back(std::move(inst));
    }
    if (instances.empty())
        throw ParseError("empty dataset: " + path.string());
    return make_dataset(std::move(instances), num_classes, dim);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot open file for writing: " + path.string());
    std::string buf;
    for (const Instance& inst : dataset.instances) {
        buf.clear();
        for (double v : inst.features) {
            append_shortest(buf, v);
            buf.push_back(',');
        }
        buf += std::to_string(inst.label);
        buf.push_back(',');
        buf += std::to_string(inst.expert_prediction);
        buf.push_back('\n');
        out << buf;
    }
    if (!out)
        throw ParseError("write failed: " + path.string());
}

DataSplit split_dataset(const Dataset& dataset,
                        const std::array<double, 3>& fractions,
                        std::uint64_t seed) {
    double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
    for (double f : fractions)
        if (f < 0.0)
            throw ConfigError("split fractions must be non-negative");

    const std::size_t n = dataset.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_val = static_cast<std::size_t>(fractions[1] * static_cast<double>(n));
    const auto n_test = static_cast<std::size_t>(fractions[2] * static_cast<double>(n));
    const std::size_t n_train = n - n_val - n_test;

    DataSplit split;
    auto take = [&](std::size_t begin, std::size_t count) {
        Dataset part;
        part.num_classes = dataset.num_classes;
        part.dim = dataset.dim;
        part.instances.reserve(count);
        for (std::size_t i = begin; i < begin + count; ++i)
            part.instances.push_back(dataset.instances[order[i]]);
        return part;
    };
    split.train = take(0, n_train);
    split.validation = take(n_train, n_val);
    split.test = take(n_train + n_val, n_test);
    return split;
}

} // namespace l2d
