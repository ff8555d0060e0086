#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hetlb/pmf.hpp"
#include "hetlb/rng.hpp"

namespace hetlb {

enum class ArrivalKind { deterministic, two_point, binomial, pmf, moments };

std::string to_string(ArrivalKind kind);

/// Law of the total batch A(t) arriving in one slot (all of it goes to one queue).
///
/// mean() is n*lambda, variance() is n*sigma_lambda^2 and every realization is
/// at most a_max_total = n*A_max.
struct ArrivalLaw {
    ArrivalKind kind = ArrivalKind::deterministic;
    IntPmf pmf = IntPmf::point(0);
    std::int64_t a_max_total = 0;

    double mean() const noexcept { return pmf.mean(); }
    double variance() const noexcept { return pmf.variance(); }

    static ArrivalLaw deterministic(std::int64_t value);
    static ArrivalLaw two_point(std::int64_t lo, std::int64_t hi, double p_hi);
    static ArrivalLaw binomial(std::int64_t trials, double p);
    /// a_max_total < 0 means "use the largest support point".
    static ArrivalLaw from_pmf(IntPmf pmf, std::int64_t a_max_total = -1);
};

/// Integer-supported arrival law with exactly the requested mean and variance.
///
/// Writing mean = k + r with k integer and r in (0,1] (r = 1 only for integer
/// means with positive variance), the law lives on {k, k+1, k+H} where H is the
/// smallest integer >= 2 that keeps P(k+1) nonnegative:
///   s = variance + r^2,  P(k+H) = (s - r) / (H^2 - H),  P(k+1) = r - H*P(k+H).
/// When P(k+1) vanishes this is the two-point law {k, k+H}; when P(k+H)
/// vanishes it is {k, k+1}. Any integer law with mean k+r has variance at
/// least r(1-r), so smaller variances are infeasible.
///
/// Throws InfeasibleMoments if no such law fits inside [0, a_max_total].
ArrivalLaw moment_matched_arrivals(double mean, double variance, std::int64_t a_max_total);

std::int64_t sample_arrival(const ArrivalLaw& law, RngStream& rng) noexcept;

/// Service law S_l in {0, s_max} with P(S_l = s_max) = mu / s_max.
IntPmf bernoulli_batch_service(double mu, std::int64_t s_max);

/// The n-server system. Servers are stored in nondecreasing order of mean
/// service rate; original_index[l] is the position server l had in the input.
struct SystemConfig {
    std::vector<double> mu;
    std::vector<double> sigma_sq_service;
    std::vector<IntPmf> service;
    std::int64_t s_max = 1;
    ArrivalLaw arrival;
    std::uint64_t seed = 0;
    std::vector<std::size_t> original_index;

    std::size_t n() const noexcept { return mu.size(); }
    double total_service_rate() const noexcept;
    /// Heavy-traffic slack: sum(mu) - n*lambda.
    double slack() const noexcept { return total_service_rate() - arrival.mean(); }
    double arrival_variance_per_server() const noexcept {
        return arrival.variance() / static_cast<double>(n());
    }
    double a_max_per_server() const noexcept {
        return static_cast<double>(arrival.a_max_total) / static_cast<double>(n());
    }

    /// Validates and sorts. `service` is given in the caller's server order.
    static SystemConfig make(std::vector<IntPmf> service, std::int64_t s_max, ArrivalLaw arrival,
                             std::uint64_t seed);
    static SystemConfig bernoulli_batch(const std::vector<double>& mu, std::int64_t s_max,
                                        ArrivalLaw arrival, std::uint64_t seed);

    /// Copy with a different arrival law (used by load sweeps).
    SystemConfig with_arrival(ArrivalLaw law) const;
};

/// Q(t) together with the slot counter and the phase t mod T.
struct QueueState {
    std::vector<std::int64_t> q;
    std::uint64_t slot = 0;
    std::uint32_t cycle_phase = 0;

    explicit QueueState(std::size_t n = 0) : q(n, 0) {}
    std::int64_t total() const noexcept;
};

/// Dispatch action Z(t) = e_server.
struct Dispatch {
    std::size_t server = 0;
    std::vector<int> as_unit_vector(std::size_t n) const;
};

struct SlotOutcome {
    std::int64_t arrivals = 0;
    Dispatch dispatch;
    std::vector<std::int64_t> services;
    std::vector<std::int64_t> unused;
};

/// Q(t+1) = [Q(t) + A Z - S]^+ and U = Q(t+1) - (Q(t) + A Z - S).
/// Advances the slot counter and the phase modulo t_cycle. Throws QueueOverflow
/// if a queue would exceed queue_limit (the int64 range by default).
void apply_slot(QueueState& state, std::int64_t arrivals, Dispatch dispatch,
                std::span<const std::int64_t> services, std::uint32_t t_cycle, SlotOutcome& outcome,
                std::int64_t queue_limit = std::numeric_limits<std::int64_t>::max());

/// Independent per-purpose streams of one trajectory.
struct SlotStreams {
    RngStream arrivals;
    RngStream services;

    static SlotStreams for_replication(std::uint64_t seed, std::uint32_t replication,
                                       std::uint32_t extra = 0);
};

/// Samples A(t) and S(t) from the system's laws and applies one slot.
SlotOutcome step_slot(QueueState& state, Dispatch dispatch, const SystemConfig& system,
                      SlotStreams& streams, std::uint32_t t_cycle);

}  // namespace hetlb
