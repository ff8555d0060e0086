#include "hetlb/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "hetlb/error.hpp"

namespace hetlb {

void RunningMoments::add(double x) noexcept {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
}

void RunningMoments::merge(const RunningMoments& other) noexcept {
    if (other.count_ == 0) return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(count_), nb = static_cast<double>(other.count_);
    const double delta = other.mean_ - mean_;
    const double total = na + nb;
    mean_ += delta * nb / total;
    m2_ += other.m2_ + delta * delta * na * nb / total;
    count_ += other.count_;
}

double RunningMoments::variance() const noexcept {
    return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
}

Estimate estimate_from_batches(std::span<const double> batch_means, double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence must lie in (0, 1)");
    Estimate e;
    e.batches = batch_means.size();
    if (batch_means.empty()) return e;
    RunningMoments m;
    for (double x : batch_means) m.add(x);
    e.mean = m.mean();
    if (batch_means.size() < 2) {
        e.half_width = std::numeric_limits<double>::infinity();
        return e;
    }
    const boost::math::students_t dist(static_cast<double>(batch_means.size() - 1));
    const double t = boost::math::quantile(dist, 0.5 + confidence / 2.0);
    e.half_width = t * std::sqrt(m.variance() / static_cast<double>(batch_means.size()));
    return e;
}

BatchMeans::BatchMeans(std::uint64_t expected_samples, std::size_t batches) : batches_(batches) {
    if (batches == 0) throw InvalidArgument("batch count must be positive");
    if (expected_samples < batches) throw InvalidArgument("fewer samples than batches");
    batch_size_ = expected_samples / batches;
    means_.reserve(batches);
}

void LinearTrend::add(double x, double y) noexcept {
    ++count_;
    const double k = static_cast<double>(count_);
    const double dx = x - mean_x_, dy = y - mean_y_;
    mean_x_ += dx / k;
    mean_y_ += dy / k;
    sxx_ += dx * (x - mean_x_);
    syy_ += dy * (y - mean_y_);
    sxy_ += dx * (y - mean_y_);
}

double LinearTrend::slope() const noexcept { return sxx_ > 0.0 ? sxy_ / sxx_ : 0.0; }

double LinearTrend::intercept() const noexcept { return mean_y_ - slope() * mean_x_; }

double LinearTrend::slope_t_stat() const noexcept {
    if (count_ < 3 || sxx_ <= 0.0) return 0.0;
    const double b = slope();
    const double rss = std::max(0.0, syy_ - b * sxy_);
    const double se = std::sqrt(rss / static_cast<double>(count_ - 2) / sxx_);
    if (se == 0.0) return b > 0.0 ? std::numeric_limits<double>::infinity() : (b < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
    return b / se;
}

void IntHistogram::add(std::int64_t value) {
    if (value < 0) throw InvalidArgument("histogram values must be nonnegative");
    const auto k = static_cast<std::size_t>(value);
    if (k >= counts_.size()) counts_.resize(std::max<std::size_t>(k + 1, counts_.size() * 2), 0);
    ++counts_[k];
    ++total_;
}

void IntHistogram::merge(const IntHistogram& other) {
    if (other.counts_.size() > counts_.size()) counts_.resize(other.counts_.size(), 0);
    for (std::size_t k = 0; k < other.counts_.size(); ++k) counts_[k] += other.counts_[k];
    total_ += other.total_;
}

double IntHistogram::mean() const noexcept {
    if (total_ == 0) return 0.0;
    long double s = 0.0L;
    for (std::size_t k = 0; k < counts_.size(); ++k) s += static_cast<long double>(k) * counts_[k];
    return static_cast<double>(s / total_);
}

double IntHistogram::variance() const noexcept {
    if (total_ < 2) return 0.0;
    const long double m = mean();
    long double s = 0.0L;
    for (std::size_t k = 0; k < counts_.size(); ++k) {
        const long double d = static_cast<long double>(k) - m;
        s += d * d * counts_[k];
    }
    return static_cast<double>(s / (total_ - 1));
}

double ks_distance_exponential(const IntHistogram& hist, double scale, double mean) {
    if (!(scale > 0.0) || !(mean > 0.0)) throw InvalidArgument("scale and mean must be positive");
    if (hist.total() == 0) throw InvalidArgument("empty histogram");
    const double n = static_cast<double>(hist.total());
    double below = 0.0;  // empirical CDF just left of the current atom
    double d = 0.0;
    const auto counts = hist.counts();
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) continue;
        const double x = scale * static_cast<double>(k);
        const double cdf = -std::expm1(-x / mean);
        const double above = below + static_cast<double>(counts[k]) / n;
        d = std::max({d, std::abs(cdf - below), std::abs(above - cdf)});
        below = above;
    }
    return d;
}

}  // namespace hetlb
