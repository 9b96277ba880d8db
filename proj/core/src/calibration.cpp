#include "l2d/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <string>

#include <json.hpp>

#include "l2d/error.hpp"

namespace l2d {

ReliabilityBins ReliabilityBins::make(int bin_count) {
    if (bin_count < 1)
        throw ConfigError("bin count must be at least 1");
    ReliabilityBins r;
    r.bins.resize(bin_count);
    for (int b = 0; b < bin_count; ++b) {
        r.bins[b].lower = static_cast<double>(b) / bin_count;
        r.bins[b].upper = static_cast<double>(b + 1) / bin_count;
    }
    return r;
}

int ReliabilityBins::bin_index(double confidence) const {
    if (confidence < 0.0 || confidence > 1.0)
        throw ConfigError("confidence outside [0, 1]; clamp estimates first");
    const int b = static_cast<int>(confidence * bin_count());
    return std::min(b, bin_count() - 1);
}

void ReliabilityBins::add(double confidence, bool correct) {
    ReliabilityBin& bin = bins[bin_index(confidence)];
    ++bin.count;
    bin.confidence_sum += confidence;
    if (correct)
        ++bin.correct;
}

void ReliabilityBins::merge(const ReliabilityBins& other) {
    if (other.bin_count() != bin_count())
        throw ConfigError("cannot merge reliability bins of different widths");
    for (int b = 0; b < bin_count(); ++b) {
        bins[b].count += other.bins[b].count;
        bins[b].confidence_sum += other.bins[b].confidence_sum;
        bins[b].correct += other.bins[b].correct;
    }
}

std::size_t ReliabilityBins::total_count() const {
    std::size_t n = 0;
    for (const ReliabilityBin& bin : bins)
        n += bin.count;
    return n;
}

double ReliabilityBins::expected_calibration_error() const {
    const std::size_t n = total_count();
    if (n == 0)
        throw ConfigError("no samples in reliability bins");
    double ece = 0.0;
    for (const ReliabilityBin& bin : bins) {
        if (bin.count == 0)
            continue;
        const double weight =
            static_cast<double>(bin.count) / static_cast<double>(n);
        ece += weight * std::abs(bin.accuracy() - bin.mean_confidence());
    }
    return ece;
}

CalibrationReport compute_ece(const std::vector<double>& confidences,
                              const std::vector<bool>& correct, int bin_count) {
    if (confidences.empty())
        throw ConfigError("cannot compute calibration of an empty sample");
    if (confidences.size() != correct.size())
        throw ConfigError("confidence and correctness sizes differ");
    CalibrationReport report;
    report.bins = ReliabilityBins::make(bin_count);
    for (std::size_t i = 0; i < confidences.size(); ++i)
        report.bins.add(confidences[i], correct[i]);
    report.n = confidences.size();
    report.ece = report.bins.expected_calibration_error();
    return report;
}

std::string calibration_report_json(const CalibrationReport& report) {
    nlohmann::ordered_json j;
    j["ece"] = report.ece;
    j["n"] = report.n;
    j["pathology_fraction"] = report.pathology_fraction;
    j["bin_count"] = report.bins.bin_count();
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (const ReliabilityBin& bin : report.bins.bins) {
        nlohmann::ordered_json b;
        b["lower"] = bin.lower;
        b["upper"] = bin.upper;
        b["count"] = bin.count;
        b["mean_confidence"] = bin.mean_confidence();
        b["accuracy"] = bin.accuracy();
        bins.push_back(std::move(b));
    }
    j["bins"] = std::move(bins);
    return j.dump(2);
}

Histogram make_histogram(const std::vector<double>& values, double lower,
                         double upper, int bin_count) {
    if (!(lower < upper))
        throw ConfigError("histogram needs lower < upper");
    if (bin_count < 1)
        throw ConfigError("histogram needs at least 1 bin");
    Histogram hist;
    hist.lower = lower;
    hist.upper = upper;
    hist.bin_width = (upper - lower) / bin_count;
    hist.counts.assign(bin_count, 0);
    for (double v : values) {
        if (v < lower || v > upper)
            throw ConfigError("histogram value outside range");
        const int b = std::min(static_cast<int>((v - lower) / hist.bin_width),
                               bin_count - 1);
        ++hist.counts[b];
    }
    return hist;
}

void save_histogram_csv(const std::filesystem::path& path, const Histogram& hist) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot open file for writing: " + path.string());
    out << "bin_lower,bin_upper,count\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        const double lo = hist.lower + hist.bin_width * static_cast<double>(b);
        const double hi = b + 1 == hist.counts.size()
                              ? hist.upper
                              : hist.lower + hist.bin_width * static_cast<double>(b + 1);
        out << lo << ',' << hi << ',' << hist.counts[b] << '\n';
    }
    if (!out)
        throw ParseError("write failed: " + path.string());
}

PathologyStats pathology_stats(const std::vector<double>& raw_estimates,
                               double bin_width, double upper) {
    if (raw_estimates.empty())
        throw ConfigError("cannot compute pathology stats of an empty sample");
    if (!(bin_width > 0.0))
        throw ConfigError("bin width must be positive");
    if (!(upper > 1.0))
        throw ConfigError("upper bound must exceed 1");

    PathologyStats stats;
    stats.n = raw_estimates.size();
    const int bins = static_cast<int>(std::ceil(upper / bin_width));
    stats.histogram.lower = 0.0;
    stats.histogram.upper = bins * bin_width;
    stats.histogram.bin_width = bin_width;
    stats.histogram.counts.assign(bins, 0);
    std::size_t above = 0;
    for (double v : raw_estimates) {
        if (v < 0.0 || !std::isfinite(v))
            throw ConfigError("raw estimate must be finite and non-negative");
        if (v > 1.0)
            ++above;
        // The top bin absorbs estimates beyond the configured range.
        const int b = std::min(static_cast<int>(v / bin_width), bins - 1);
        ++stats.histogram.counts[b];
    }
    stats.fraction_above_one =
        static_cast<double>(above) / static_cast<double>(stats.n);
    return stats;
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw ConfigError("wasserstein_1d needs non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    if (a.size() == b.size()) {
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            sum += std::abs(a[i] - b[i]);
        return sum / static_cast<double>(a.size());
    }

    // Area between the two empirical CDFs, walked over the merged support.
    const double wa = 1.0 / static_cast<double>(a.size());
    const double wb = 1.0 / static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double cdf_a = 0.0, cdf_b = 0.0;
    double prev = std::min(a[0], b[0]);
    double area = 0.0;
    while (i < a.size() || j < b.size()) {
        double x;
        if (j == b.size() || (i < a.size() && a[i] <= b[j]))
            x = a[i];
        else
            x = b[j];
        area += std::abs(cdf_a - cdf_b) * (x - prev);
        while (i < a.size() && a[i] == x) {
            cdf_a += wa;
            ++i;
        }
        while (j < b.size() && b[j] == x) {
            cdf_b += wb;
            ++j;
        }
        prev = x;
    }
    return area;
}

std::vector<double> error_distribution(const std::vector<double>& confidences) {
    std::vector<double> risks(confidences.size());
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        if (confidences[i] < 0.0 || confidences[i] > 1.0)
            throw ConfigError("confidence outside [0, 1]");
        risks[i] = 1.0 - confidences[i];
    }
    return risks;
}

namespace {

// log(1 + exp(-z)), stable.
double softplus_neg(double z) {
    return std::log1p(std::exp(-std::abs(z))) + std::max(0.0, -z);
}

// Golden-section minimization of f over [lo, hi] to the given tolerance.
double golden_section(double lo, double hi, double tol,
                      const std::function<double(double)>& f) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    return (lo + hi) / 2.0;
}

} // namespace

double fit_temperature(const std::vector<double>& logits,
                       const std::vector<bool>& correct) {
    if (logits.empty())
        throw ConfigError("cannot fit a temperature on an empty sample");
    if (logits.size() != correct.size())
        throw ConfigError("logit and correctness sizes differ");
    const bool first = correct.front();
    bool degenerate = true;
    for (bool c : correct)
        if (c != first) {
            degenerate = false;
            break;
        }
    if (degenerate)
        throw ConfigError("degenerate labels: all correctness values identical");

    auto nll = [&](double log_t) {
        const double inv_t = std::exp(-log_t);
        double sum = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const double z = logits[i] * inv_t;
            sum += softplus_neg(correct[i] ? z : -z);
        }
        return sum / static_cast<double>(logits.size());
    };

    const double best_log_t = golden_section(-4.0, 4.0, 1e-6, nll);
    // The identity temperature sits inside the interval; never do worse.
    if (nll(0.0) < nll(best_log_t))
        return 1.0;
    return std::exp(best_log_t);
}

double fit_temperature_softmax(const std::vector<std::vector<double>>& scores,
                               const std::vector<int>& labels) {
    if (scores.empty())
        throw ConfigError("cannot fit a temperature on an empty sample");
    if (scores.size() != labels.size())
        throw ConfigError("score and label sizes differ");
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].size() < 2)
            throw ConfigError("each score vector needs at least 2 entries");
        if (labels[i] < 0 || labels[i] >= static_cast<int>(scores[i].size()))
            throw ConfigError("label outside score range");
    }

    auto nll = [&](double log_t) {
        const double inv_t = std::exp(-log_t);
        double sum = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            double m = -std::numeric_limits<double>::infinity();
            for (double s : scores[i])
                m = std::max(m, s * inv_t);
            double z = 0.0;
            for (double s : scores[i])
                z += std::exp(s * inv_t - m);
            sum += m + std::log(z) - scores[i][labels[i]] * inv_t;
        }
        return sum / static_cast<double>(scores.size());
    };

    const double best_log_t = golden_section(-4.0, 4.0, 1e-6, nll);
    if (nll(0.0) < nll(best_log_t))
        return 1.0;
    return std::exp(best_log_t);
}

} // namespace l2d
