#ifndef L2D_CALIBRATION_HPP
#define L2D_CALIBRATION_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace l2d {

// Equal-width reliability bins over [0, 1]. A confidence c lands in bin
// floor(c * bin_count), except that c == 1 lands in the last bin. Bins keep
// counts and sums so shards can be merged without revisiting the data.
struct ReliabilityBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double confidence_sum = 0.0;
    std::size_t correct = 0;

    double mean_confidence() const {
        return count == 0 ? 0.0 : confidence_sum / static_cast<double>(count);
    }
    double accuracy() const {
        return count == 0 ? 0.0
                          : static_cast<double>(correct) / static_cast<double>(count);
    }
};

struct ReliabilityBins {
    std::vector<ReliabilityBin> bins;

    static ReliabilityBins make(int bin_count);
    int bin_count() const { return static_cast<int>(bins.size()); }
    int bin_index(double confidence) const;
    void add(double confidence, bool correct);
    void merge(const ReliabilityBins& other);
    std::size_t total_count() const;

    // Sum over non-empty bins of (count / n) * |accuracy - mean confidence|.
    double expected_calibration_error() const;
};

struct CalibrationReport {
    double ece = 0.0;
    std::size_t n = 0;
    double pathology_fraction = 0.0; // share of raw estimates strictly above 1
    ReliabilityBins bins;
};

// Confidences must already lie in [0, 1]; clamp upstream estimates first.
CalibrationReport compute_ece(const std::vector<double>& confidences,
                              const std::vector<bool>& correct, int bin_count = 15);

std::string calibration_report_json(const CalibrationReport& report);

struct Histogram {
    double lower = 0.0;
    double upper = 0.0;
    double bin_width = 0.0;
    std::vector<std::size_t> counts;
};

Histogram make_histogram(const std::vector<double>& values, double lower,
                         double upper, int bin_count);
void save_histogram_csv(const std::filesystem::path& path, const Histogram& hist);

// How often a raw expert-correctness estimate exceeds 1, and where the mass
// sits. Bin width applies above 1; the first bin collects everything <= 1.
struct PathologyStats {
    double fraction_above_one = 0.0;
    std::size_t n = 0;
    Histogram histogram;
};

PathologyStats pathology_stats(const std::vector<double>& raw_estimates,
                               double bin_width = 0.25, double upper = 4.0);

// First Wasserstein distance between the empirical distributions of two
// samples (possibly of different sizes): the area between their CDFs.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

// Per-instance predicted risk 1 - confidence.
std::vector<double> error_distribution(const std::vector<double>& confidences);

// Scalar temperature for a binary rejector head: minimizes the negative log
// likelihood of sigmoid(logit / T) by golden-section search on log T in
// [-4, 4] (tolerance 1e-6), then keeps T = 1 if it scores no worse.
double fit_temperature(const std::vector<double>& logits,
                       const std::vector<bool>& correct);

// Same search for a plain classifier: minimizes multiclass NLL of
// softmax(scores / T).
double fit_temperature_softmax(const std::vector<std::vector<double>>& scores,
                               const std::vector<int>& labels);

} // namespace l2d

#endif
