#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hetlb/permutation.hpp"
#include "hetlb/policy.hpp"
#include "hetlb/rng.hpp"

namespace hetlb {

inline constexpr std::size_t kMaxEnumeratedServers = 8;

enum class FProvenance { analytic, monte_carlo, file };
std::string to_string(FProvenance p);

/// Dispatch fractions under one permutation: f[l] is the expected fraction of
/// a cycle's slots sent to the (l+1)-th longest scaled queue and tau_sq[l] the
/// variance of that fraction. std_err is filled for Monte-Carlo entries only.
struct FEntry {
    std::vector<double> f;
    std::vector<double> tau_sq;
    std::vector<double> std_err;
};

/// The set of (f_eta, tau^2_eta) over all permutations eta.
///
/// Policies whose fractions do not depend on eta are stored once with the
/// symmetric flag; otherwise there is one entry per permutation in rank order,
/// which caps n at kMaxEnumeratedServers.
class FTable {
public:
    static FTable symmetric(std::size_t n, FEntry entry, FProvenance provenance, std::uint64_t cycles = 0);
    static FTable per_permutation(std::size_t n, std::vector<FEntry> entries, FProvenance provenance,
                                  std::uint64_t cycles = 0);

    std::size_t n() const noexcept { return n_; }
    bool is_symmetric() const noexcept { return symmetric_; }
    FProvenance provenance() const noexcept { return provenance_; }
    std::uint64_t cycles() const noexcept { return cycles_; }
    bool enumerable() const noexcept { return n_ <= kMaxEnumeratedServers; }

    const FEntry& entry(const Permutation& eta) const;
    const FEntry& entry_by_rank(std::uint64_t rank) const;
    /// Stored entries (one if symmetric).
    std::span<const FEntry> stored() const noexcept { return entries_; }

    /// Throws InvalidArgument if a row does not sum to 1 within 1e-9, or a
    /// fraction leaves [0,1], or a variance leaves [0,1/4] (for Monte-Carlo rows
    /// the cap is c/(c-1) times that, the range of an unbiased estimate over c cycles).
    void validate() const;

    double max_f() const noexcept;
    double max_tau_sq() const noexcept;

private:
    std::size_t n_ = 0;
    bool symmetric_ = false;
    FProvenance provenance_ = FProvenance::analytic;
    std::uint64_t cycles_ = 0;
    std::vector<FEntry> entries_;
};

/// Closed-form fractions of the built-ins. tau^2 of the i.i.d.-per-slot
/// policies (rand, weighted_rand, pod) is that of a Binomial(T, f)/T fraction;
/// round robin and the join-shortest rules are deterministic (tau^2 = 0).
/// Throws InvalidArgument for custom policies.
FTable f_analytic(const PolicySpec& spec, std::span<const double> mu);

/// Monte-Carlo estimate of one row with the order pinned to eta.
FEntry f_monte_carlo(const PolicySpec& spec, std::span<const double> mu, const Permutation& eta,
                     std::uint64_t cycles, RngStream& rng);

enum class FMode { analytic, monte_carlo };

/// Table over every permutation. Analytic mode keeps symmetric built-ins
/// compact for any n; other cases need n <= kMaxEnumeratedServers and throw
/// CapacityError beyond it. Monte-Carlo rows use one stream per permutation
/// (seed, purpose fvector, extra = rank) and run in parallel.
FTable build_ftable(const PolicySpec& spec, std::span<const double> mu, FMode mode, std::uint64_t cycles,
                    std::uint64_t seed);

/// Text format: header lines ("ftable 1", "n", "provenance", "symmetric",
/// "cycles") followed by one record per permutation: "eta" with 1-based
/// indices, "f", "tau2" and, for Monte-Carlo tables, "se". Lines starting
/// with '#' are comments. Symmetric tables with n > 8 use a single
/// "eta *" record.
void write_ftable(std::ostream& os, const FTable& table);
/// Throws InvalidArgument with the offending line number on malformed input.
FTable read_ftable(std::istream& is);

}  // namespace hetlb
