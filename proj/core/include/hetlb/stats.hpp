#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hetlb {

/// Running mean and variance (Welford), mergeable.
class RunningMoments {
public:
    void add(double x) noexcept;
    void merge(const RunningMoments& other) noexcept;

    std::uint64_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    /// Unbiased sample variance; 0 for fewer than two points.
    double variance() const noexcept;

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Point estimate with a two-sided confidence half-width.
struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t batches = 0;
};

/// Student-t interval from independent batch means (equal batch sizes).
Estimate estimate_from_batches(std::span<const double> batch_means, double confidence = 0.95);

/// Non-overlapping batch means with a batch size fixed up front. Samples
/// beyond batches * batch_size are ignored so every batch has equal weight.
class BatchMeans {
public:
    BatchMeans() = default;
    BatchMeans(std::uint64_t expected_samples, std::size_t batches);

    void add(double x) noexcept {
        if (means_.size() == batches_) return;
        sum_ += x;
        if (++filled_ == batch_size_) {
            means_.push_back(sum_ / static_cast<double>(batch_size_));
            sum_ = 0.0;
            filled_ = 0;
        }
    }

    std::span<const double> means() const noexcept { return means_; }

private:
    std::size_t batches_ = 0;
    std::uint64_t batch_size_ = 1;
    std::uint64_t filled_ = 0;
    double sum_ = 0.0;
    std::vector<double> means_;
};

/// Online least squares of y on x: slope and its t statistic.
class LinearTrend {
public:
    void add(double x, double y) noexcept;
    std::uint64_t count() const noexcept { return count_; }
    double slope() const noexcept;
    double intercept() const noexcept;
    /// slope / standard error; +inf for an exact positive fit.
    double slope_t_stat() const noexcept;

private:
    std::uint64_t count_ = 0;
    double mean_x_ = 0.0, mean_y_ = 0.0;
    double sxx_ = 0.0, syy_ = 0.0, sxy_ = 0.0;
};

/// Exact counts of a nonnegative integer statistic.
class IntHistogram {
public:
    void add(std::int64_t value);
    void merge(const IntHistogram& other);

    std::span<const std::uint64_t> counts() const noexcept { return counts_; }
    std::uint64_t total() const noexcept { return total_; }
    double mean() const noexcept;
    double variance() const noexcept;

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Kolmogorov-Smirnov distance between the empirical law of scale * K
/// (K drawn from the histogram) and Exponential(mean), both sides of every
/// jump included.
double ks_distance_exponential(const IntHistogram& hist, double scale, double mean);

}  // namespace hetlb
