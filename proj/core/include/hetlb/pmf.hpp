#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hetlb/rng.hpp"

namespace hetlb {

/// Finitely supported distribution on the nonnegative integers.
///
/// Support points are kept sorted and distinct; zero-probability points are
/// dropped. Sampling is by inversion of the cumulative table with one uniform.
class IntPmf {
public:
    IntPmf() = default;

    /// Throws InvalidArgument unless probabilities are in [0,1], sum to 1
    /// within 1e-12 and every value is nonnegative.
    static IntPmf from_pairs(std::vector<std::pair<std::int64_t, double>> pairs);
    static IntPmf point(std::int64_t value);

    std::span<const std::int64_t> values() const noexcept { return values_; }
    std::span<const double> probabilities() const noexcept { return probs_; }

    double mean() const noexcept;
    double variance() const noexcept;
    std::int64_t min_value() const noexcept { return values_.front(); }
    std::int64_t max_value() const noexcept { return values_.back(); }
    bool is_degenerate() const noexcept { return values_.size() == 1; }

    std::int64_t sample(RngStream& rng) const noexcept {
        if (values_.size() == 1) return values_.front();
        const double u = rng.uniform01();
        std::size_t i = 0;
        while (i + 1 < cdf_.size() && u >= cdf_[i]) ++i;
        return values_[i];
    }

private:
    std::vector<std::int64_t> values_;
    std::vector<double> probs_;
    std::vector<double> cdf_;
};

}  // namespace hetlb
