#include "hetlb/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "hetlb/error.hpp"

namespace hetlb {

IntPmf IntPmf::from_pairs(std::vector<std::pair<std::int64_t, double>> pairs) {
    if (pairs.empty()) throw InvalidArgument("pmf has no support points");
    std::map<std::int64_t, double> merged;
    double total = 0.0;
    for (const auto& [value, p] : pairs) {
        if (value < 0) throw InvalidArgument("pmf value " + std::to_string(value) + " is negative");
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("pmf probability outside [0,1]");
        merged[value] += p;
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw InvalidArgument("pmf probabilities sum to " + std::to_string(total) + ", expected 1");
    }
    IntPmf pmf;
    double acc = 0.0;
    for (const auto& [value, p] : merged) {
        if (p == 0.0) continue;
        pmf.values_.push_back(value);
        pmf.probs_.push_back(p);
        acc += p;
        pmf.cdf_.push_back(acc);
    }
    if (pmf.values_.empty()) throw InvalidArgument("pmf has no positive-probability points");
    pmf.cdf_.back() = 1.0;
    return pmf;
}

IntPmf IntPmf::point(std::int64_t value) { return from_pairs({{value, 1.0}}); }

double IntPmf::mean() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) m += static_cast<double>(values_[i]) * probs_[i];
    return m;
}

double IntPmf::variance() const noexcept {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double d = static_cast<double>(values_[i]) - m;
        v += d * d * probs_[i];
    }
    return v;
}

}  // namespace hetlb
