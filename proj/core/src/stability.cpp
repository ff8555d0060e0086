#include "hetlb/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "hetlb/error.hpp"

namespace hetlb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Prefixes {
    std::vector<double> mu;  // mu[m] = sum_{l<m} mu_eta(l)
    std::vector<double> f;
};

Prefixes prefixes(const FEntry& entry, std::span<const double> mu, const Permutation& eta) {
    const std::size_t n = mu.size();
    Prefixes p{std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
    for (std::size_t l = 0; l < n; ++l) {
        p.mu[l + 1] = p.mu[l] + mu[eta[l]];
        p.f[l + 1] = p.f[l] + entry.f[l];
    }
    return p;
}

double ratio(double num, double den) { return den > 0.0 ? num / den : kInf; }

void check_sizes(const FTable& table, std::span<const double> mu) {
    if (table.n() != mu.size()) throw InvalidArgument("f-table and rate vector sizes differ");
}

// Visits every (eta, prefixes). Symmetric tables beyond the enumeration cap
// only visit the identity, which minimizes every prefix of mu because mu is
// sorted nondecreasing.
template <typename Fn>
void for_each_permutation(const FTable& table, std::span<const double> mu, Fn&& fn) {
    const std::size_t n = table.n();
    if (!table.enumerable()) {
        const auto eta = Permutation::identity(n);
        fn(eta, prefixes(table.stored().front(), mu, eta));
        return;
    }
    const std::uint64_t count = factorial(n);
    for (std::uint64_t r = 0; r < count; ++r) {
        const auto eta = Permutation::unrank(r, n);
        fn(eta, prefixes(table.entry_by_rank(r), mu, eta));
    }
}

}  // namespace

std::string to_string(LoadVerdict v) {
    switch (v) {
        case LoadVerdict::positive_recurrent: return "positive_recurrent";
        case LoadVerdict::inconclusive: return "inconclusive";
        case LoadVerdict::transient: return "transient";
        case LoadVerdict::unknown: return "unknown";
    }
    return "unknown";
}

double h_of(const FTable& table, std::span<const double> mu, const Permutation& eta, std::size_t m) {
    check_sizes(table, mu);
    if (m < 1 || m > mu.size()) throw InvalidArgument("prefix length m must lie in [1, n]");
    const auto& entry = table.entry(eta);
    double num = 0.0, den = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
        num += mu[eta[l]];
        den += entry.f[l];
    }
    return ratio(num, den);
}

StabilityReport stability_region(const FTable& table, std::span<const double> mu) {
    check_sizes(table, mu);
    const std::size_t n = mu.size();
    StabilityReport report;
    report.total_rate = std::accumulate(mu.begin(), mu.end(), 0.0);
    report.minimizers_complete = table.enumerable();

    double best = kInf;
    for_each_permutation(table, mu, [&](const Permutation&, const Prefixes& p) {
        for (std::size_t m = 1; m <= n; ++m) best = std::min(best, ratio(p.mu[m], p.f[m]));
    });
    report.h_star = best;
    const double cutoff = best * (1.0 + kStabilityTolerance);
    for_each_permutation(table, mu, [&](const Permutation& eta, const Prefixes& p) {
        for (std::size_t m = 1; m <= n; ++m) {
            if (ratio(p.mu[m], p.f[m]) <= cutoff) report.minimizers.push_back({eta, m});
        }
    });
    return report;
}

ThroughputCheck check_throughput_optimal(const FTable& table, std::span<const double> mu) {
    check_sizes(table, mu);
    const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
    ThroughputCheck out{true, std::nullopt};
    for_each_permutation(table, mu, [&](const Permutation& eta, const Prefixes& p) {
        if (!out.optimal) return;
        for (std::size_t m = 1; m <= mu.size(); ++m) {
            const double share = p.mu[m] / total;
            if (p.f[m] > share * (1.0 + kStabilityTolerance)) {
                out.optimal = false;
                out.witness = PrefixWitness{eta, m, p.f[m], share};
                return;
            }
        }
    });
    return out;
}

MajorizationCheck check_strict_majorization(const FTable& table, std::span<const double> mu) {
    check_sizes(table, mu);
    const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
    MajorizationCheck out{true, std::nullopt};
    for_each_permutation(table, mu, [&](const Permutation& eta, const Prefixes& p) {
        if (!out.strict) return;
        for (std::size_t m = 1; m < mu.size(); ++m) {
            const double share = p.mu[m] / total;
            if (!(p.f[m] < share * (1.0 - kStabilityTolerance))) {
                out.strict = false;
                out.witness = PrefixWitness{eta, m, p.f[m], share};
                return;
            }
        }
    });
    return out;
}

TransienceCheck check_transience(const FTable& table, std::span<const double> mu, const StabilityReport& region) {
    check_sizes(table, mu);
    if (table.provenance() == FProvenance::monte_carlo) {
        throw PreconditionFailed("the transience condition compares prefix sums for equality; "
                                 "Monte-Carlo f-tables are not accepted");
    }
    const std::size_t n = mu.size();
    TransienceCheck out;
    out.vacuous = std::all_of(region.minimizers.begin(), region.minimizers.end(),
                              [&](const PrefixPair& p) { return p.m == n; });

    if (table.is_symmetric()) {
        // every eta' shares the same f row, so the prefix sums coincide
        out.applicable = true;
    } else {
        // (m, leading-set mask) -> [min, max] prefix f over all eta with that leading set
        std::map<std::pair<std::size_t, std::uint32_t>, std::pair<double, double>> range;
        for_each_permutation(table, mu, [&](const Permutation& eta, const Prefixes& p) {
            std::uint32_t mask = 0;
            for (std::size_t m = 1; m <= n; ++m) {
                mask |= 1U << eta[m - 1];
                auto [it, inserted] = range.try_emplace({m, mask}, p.f[m], p.f[m]);
                if (!inserted) {
                    it->second.first = std::min(it->second.first, p.f[m]);
                    it->second.second = std::max(it->second.second, p.f[m]);
                }
            }
        });
        out.applicable = true;
        for (const auto& pair : region.minimizers) {
            std::uint32_t mask = 0;
            for (std::size_t l = 0; l < pair.m; ++l) mask |= 1U << pair.eta[l];
            const auto [lo, hi] = range.at({pair.m, mask});
            if (hi - lo > kStabilityTolerance) {
                out.applicable = false;
                out.failing_minimizer = pair;
                break;
            }
        }
    }
    if (out.applicable) out.transient_above = region.h_star;
    return out;
}

MinimizerReport minimizer_diagnostics(const FTable& table, std::span<const double> mu, const StabilityReport& region) {
    check_sizes(table, mu);
    MinimizerReport out;
    const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
    if (!(region.h_star < total * (1.0 - kStabilityTolerance))) return out;
    out.applicable = true;

    std::map<Permutation, std::size_t> m_star;
    for (const auto& p : region.minimizers) {
        auto& m = m_star[p.eta];
        m = std::max(m, p.m);
    }
    const std::size_t n = mu.size();
    for (const auto& [eta, m] : m_star) {
        const auto& entry = table.entry(eta);
        MinimizerRow row{eta, m, 0.0, h_of(table, mu, eta, m), kInf, false};
        row.last_ratio = ratio(mu[eta[m - 1]], entry.f[m - 1]);
        double suffix_mu = 0.0, suffix_f = 0.0;
        for (std::size_t k = m + 1; k <= n; ++k) {
            suffix_mu += mu[eta[k - 1]];
            suffix_f += entry.f[k - 1];
            row.min_suffix_ratio = std::min(row.min_suffix_ratio, ratio(suffix_mu, suffix_f));
        }
        row.holds = entry.f[m - 1] > 0.0 && row.last_ratio <= row.h * (1.0 + kStabilityTolerance) &&
                    row.h < row.min_suffix_ratio;
        if (!row.holds) ++out.violations;
        out.rows.push_back(std::move(row));
    }
    return out;
}

StabilityReport analyze_stability(const FTable& table, std::span<const double> mu) {
    auto report = stability_region(table, mu);
    report.throughput = check_throughput_optimal(table, mu);
    report.majorization = check_strict_majorization(table, mu);
    if (table.provenance() != FProvenance::monte_carlo) report.transience = check_transience(table, mu, report);
    return report;
}

LoadVerdict StabilityReport::classify(double n_lambda) const {
    if (n_lambda < h_star * (1.0 - kStabilityTolerance)) return LoadVerdict::positive_recurrent;
    if (n_lambda <= h_star * (1.0 + kStabilityTolerance)) return LoadVerdict::inconclusive;
    if (transience && transience->applicable) return LoadVerdict::transient;
    return LoadVerdict::unknown;
}

}  // namespace hetlb
