#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetlb/fvector.hpp"
#include "hetlb/permutation.hpp"

namespace hetlb {

/// Relative tolerance for ties in h(eta, m) and for prefix-sum comparisons.
inline constexpr double kStabilityTolerance = 1e-9;

/// (eta, m) with m the 1-based prefix length.
struct PrefixPair {
    Permutation eta;
    std::size_t m = 0;
    auto operator<=>(const PrefixPair&) const = default;
};

/// A prefix where a majorization inequality fails.
struct PrefixWitness {
    Permutation eta;
    std::size_t m = 0;
    double prefix_f = 0.0;
    double prefix_share = 0.0;  // sum_{l<=m} mu_eta(l) / sum(mu)
};

enum class LoadVerdict { positive_recurrent, inconclusive, transient, unknown };
std::string to_string(LoadVerdict v);

struct ThroughputCheck {
    bool optimal = false;
    std::optional<PrefixWitness> witness;
};

struct MajorizationCheck {
    bool strict = false;
    std::optional<PrefixWitness> witness;
};

struct TransienceCheck {
    bool applicable = false;
    bool vacuous = false;  // every minimizer has m = n
    std::optional<double> transient_above;
    std::optional<PrefixPair> failing_minimizer;
};

struct StabilityReport {
    double h_star = 0.0;
    double total_rate = 0.0;
    std::vector<PrefixPair> minimizers;
    /// False when only representatives were listed (symmetric tables, n > 8).
    bool minimizers_complete = true;

    ThroughputCheck throughput;
    std::optional<TransienceCheck> transience;  // empty for Monte-Carlo tables
    MajorizationCheck majorization;

    /// Positive recurrent below h*, inconclusive at h*, transient above h*
    /// when the symmetry hypothesis holds at every minimizer.
    LoadVerdict classify(double n_lambda) const;
};

/// h(eta, m) = sum_{l<=m} mu_eta(l) / sum_{l<=m} f_{l,eta}; +inf when the
/// prefix dispatch fraction is zero. Throws InvalidArgument unless 1 <= m <= n.
double h_of(const FTable& table, std::span<const double> mu, const Permutation& eta, std::size_t m);

/// h* and the minimizer set (relative tolerance kStabilityTolerance). The
/// remaining report fields are left default; see analyze_stability.
StabilityReport stability_region(const FTable& table, std::span<const double> mu);

ThroughputCheck check_throughput_optimal(const FTable& table, std::span<const double> mu);
MajorizationCheck check_strict_majorization(const FTable& table, std::span<const double> mu);
/// Throws PreconditionFailed for Monte-Carlo tables.
TransienceCheck check_transience(const FTable& table, std::span<const double> mu, const StabilityReport& region);

struct MinimizerRow {
    Permutation eta;
    std::size_t m_star = 0;
    double last_ratio = 0.0;       // mu_eta(m*) / f_{m*,eta}
    double h = 0.0;                // h(eta, m*)
    double min_suffix_ratio = 0.0; // min over k > m* of the suffix ratio (+inf if none)
    bool holds = false;
};

struct MinimizerReport {
    bool applicable = false;  // requires h* < sum(mu)
    std::vector<MinimizerRow> rows;
    std::size_t violations = 0;
};

/// Checks, for every minimizing eta with largest minimizing prefix m*, that
/// mu_eta(m*)/f_{m*} <= h(eta, m*) < every suffix ratio over (m*, k].
MinimizerReport minimizer_diagnostics(const FTable& table, std::span<const double> mu, const StabilityReport& region);

/// All verdicts at once.
StabilityReport analyze_stability(const FTable& table, std::span<const double> mu);

}  // namespace hetlb
