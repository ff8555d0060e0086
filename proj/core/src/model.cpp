#include "hetlb/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hetlb/error.hpp"

namespace hetlb {

std::string to_string(ArrivalKind kind) {
    switch (kind) {
        case ArrivalKind::deterministic: return "deterministic";
        case ArrivalKind::two_point: return "two_point";
        case ArrivalKind::binomial: return "binomial";
        case ArrivalKind::pmf: return "pmf";
        case ArrivalKind::moments: return "moments";
    }
    return "unknown";
}

ArrivalLaw ArrivalLaw::deterministic(std::int64_t value) {
    if (value < 0) throw InvalidArgument("deterministic arrivals must be nonnegative");
    return ArrivalLaw{ArrivalKind::deterministic, IntPmf::point(value), value};
}

ArrivalLaw ArrivalLaw::two_point(std::int64_t lo, std::int64_t hi, double p_hi) {
    if (lo < 0 || hi <= lo) throw InvalidArgument("two_point requires 0 <= lo < hi");
    if (!(p_hi >= 0.0 && p_hi <= 1.0)) throw InvalidArgument("two_point p_hi outside [0,1]");
    return ArrivalLaw{ArrivalKind::two_point, IntPmf::from_pairs({{lo, 1.0 - p_hi}, {hi, p_hi}}), hi};
}

ArrivalLaw ArrivalLaw::binomial(std::int64_t trials, double p) {
    if (trials < 1 || trials > 4096) throw InvalidArgument("binomial trials must be in [1, 4096]");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("binomial p outside [0,1]");
    std::vector<std::pair<std::int64_t, double>> pairs;
    pairs.reserve(static_cast<std::size_t>(trials) + 1);
    for (std::int64_t k = 0; k <= trials; ++k) {
        const double log_choose = std::lgamma(static_cast<double>(trials) + 1.0) -
                                  std::lgamma(static_cast<double>(k) + 1.0) -
                                  std::lgamma(static_cast<double>(trials - k) + 1.0);
        double prob;
        if (p == 0.0) {
            prob = k == 0 ? 1.0 : 0.0;
        } else if (p == 1.0) {
            prob = k == trials ? 1.0 : 0.0;
        } else {
            prob = std::exp(log_choose + static_cast<double>(k) * std::log(p) +
                            static_cast<double>(trials - k) * std::log1p(-p));
        }
        pairs.emplace_back(k, prob);
    }
    // lgamma rounding leaves the sum a few ulps off 1; renormalize
    double total = 0.0;
    for (const auto& pr : pairs) total += pr.second;
    for (auto& pr : pairs) pr.second /= total;
    return ArrivalLaw{ArrivalKind::binomial, IntPmf::from_pairs(std::move(pairs)), trials};
}

ArrivalLaw ArrivalLaw::from_pmf(IntPmf pmf, std::int64_t a_max_total) {
    const std::int64_t bound = a_max_total < 0 ? pmf.max_value() : a_max_total;
    if (pmf.max_value() > bound) {
        throw InvalidArgument("arrival pmf support exceeds a_max_total = " + std::to_string(bound));
    }
    return ArrivalLaw{ArrivalKind::pmf, std::move(pmf), bound};
}

ArrivalLaw moment_matched_arrivals(double mean, double variance, std::int64_t a_max_total) {
    if (!(mean >= 0.0) || !(variance >= 0.0)) {
        throw InvalidArgument("arrival mean and variance must be nonnegative");
    }
    constexpr double kTol = 1e-12;
    const double nearest = std::round(mean);
    const bool integral_mean = std::abs(mean - nearest) <= kTol;

    if (variance <= kTol * kTol) {
        if (!integral_mean) {
            throw InfeasibleMoments("zero variance requires an integer mean");
        }
        const auto value = static_cast<std::int64_t>(nearest);
        if (value > a_max_total) throw InfeasibleMoments("mean exceeds a_max_total");
        auto law = ArrivalLaw::deterministic(value);
        law.a_max_total = a_max_total;
        return law;
    }

    auto base = static_cast<std::int64_t>(std::floor(mean));
    double r = mean - static_cast<double>(base);
    if (integral_mean) {
        base = static_cast<std::int64_t>(nearest) - 1;
        r = 1.0;
        if (base < 0) throw InfeasibleMoments("mean 0 with positive variance");
    }
    if (variance < r * (1.0 - r) - kTol) {
        std::ostringstream msg;
        msg << "variance " << variance << " below the integer-support minimum " << r * (1.0 - r)
            << " for mean " << mean;
        throw InfeasibleMoments(msg.str());
    }
    const double excess = std::max(0.0, variance - r * (1.0 - r));  // = s - r
    std::int64_t h = 2;
    if (excess > 0.0) {
        h = std::max<std::int64_t>(2, static_cast<std::int64_t>(std::ceil(1.0 + excess / r - 1e-12)));
    }
    if (base + h > a_max_total) {
        std::ostringstream msg;
        msg << "no integer law with mean " << mean << " and variance " << variance
            << " fits under a_max_total = " << a_max_total << " (needs " << base + h << ")";
        throw InfeasibleMoments(msg.str());
    }
    const double hd = static_cast<double>(h);
    double p_far = excess / (hd * hd - hd);
    double p_next = r - hd * p_far;
    if (std::abs(p_next) < 1e-15) p_next = 0.0;
    if (p_next < 0.0) throw InfeasibleMoments("internal: negative probability in moment solve");
    const double p_base = 1.0 - p_next - p_far;

    auto pmf = IntPmf::from_pairs({{base, p_base}, {base + 1, p_next}, {base + h, p_far}});
    const auto kind = pmf.values().size() == 2 ? ArrivalKind::two_point : ArrivalKind::moments;
    return ArrivalLaw{kind, std::move(pmf), a_max_total};
}

std::int64_t sample_arrival(const ArrivalLaw& law, RngStream& rng) noexcept { return law.pmf.sample(rng); }

IntPmf bernoulli_batch_service(double mu, std::int64_t s_max) {
    if (s_max < 1) throw InvalidArgument("s_max must be at least 1");
    if (!(mu > 0.0) || mu > static_cast<double>(s_max)) {
        throw InvalidArgument("service rate must lie in (0, s_max]");
    }
    const double p = mu / static_cast<double>(s_max);
    return IntPmf::from_pairs({{0, 1.0 - p}, {s_max, p}});
}

double SystemConfig::total_service_rate() const noexcept {
    return std::accumulate(mu.begin(), mu.end(), 0.0);
}

SystemConfig SystemConfig::make(std::vector<IntPmf> service, std::int64_t s_max, ArrivalLaw arrival,
                                std::uint64_t seed) {
    if (service.empty()) throw InvalidArgument("system needs at least one server");
    if (s_max < 1) throw InvalidArgument("s_max must be at least 1");
    for (std::size_t l = 0; l < service.size(); ++l) {
        if (service[l].max_value() > s_max) {
            throw InvalidArgument("service law of server " + std::to_string(l + 1) + " exceeds s_max");
        }
        if (!(service[l].mean() > 0.0)) {
            throw InvalidArgument("service rate of server " + std::to_string(l + 1) + " must be positive");
        }
    }
    if (arrival.pmf.min_value() < 0 || arrival.pmf.max_value() > arrival.a_max_total) {
        throw InvalidArgument("arrival support outside [0, a_max_total]");
    }

    std::vector<std::size_t> order(service.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return service[a].mean() < service[b].mean(); });

    SystemConfig sys;
    sys.s_max = s_max;
    sys.arrival = std::move(arrival);
    sys.seed = seed;
    sys.original_index = order;
    for (std::size_t idx : order) {
        sys.mu.push_back(service[idx].mean());
        sys.sigma_sq_service.push_back(service[idx].variance());
        sys.service.push_back(service[idx]);
    }
    return sys;
}

SystemConfig SystemConfig::bernoulli_batch(const std::vector<double>& mu, std::int64_t s_max,
                                           ArrivalLaw arrival, std::uint64_t seed) {
    std::vector<IntPmf> service;
    service.reserve(mu.size());
    for (double m : mu) service.push_back(bernoulli_batch_service(m, s_max));
    return make(std::move(service), s_max, std::move(arrival), seed);
}

SystemConfig SystemConfig::with_arrival(ArrivalLaw law) const {
    SystemConfig copy = *this;
    if (law.pmf.max_value() > law.a_max_total) throw InvalidArgument("arrival support exceeds a_max_total");
    copy.arrival = std::move(law);
    return copy;
}

std::int64_t QueueState::total() const noexcept { return std::accumulate(q.begin(), q.end(), std::int64_t{0}); }

std::vector<int> Dispatch::as_unit_vector(std::size_t n) const {
    std::vector<int> z(n, 0);
    z.at(server) = 1;
    return z;
}

void apply_slot(QueueState& state, std::int64_t arrivals, Dispatch dispatch,
                std::span<const std::int64_t> services, std::uint32_t t_cycle, SlotOutcome& outcome,
                std::int64_t queue_limit) {
    const std::size_t n = state.q.size();
    outcome.arrivals = arrivals;
    outcome.dispatch = dispatch;
    outcome.services.assign(services.begin(), services.end());
    outcome.unused.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        std::int64_t incoming = state.q[l];
        if (l == dispatch.server && __builtin_add_overflow(incoming, arrivals, &incoming)) {
            throw QueueOverflow("queue " + std::to_string(l + 1) + " overflowed int64", l);
        }
        const std::int64_t raw = incoming - services[l];
        const std::int64_t next = raw > 0 ? raw : 0;
        if (next > queue_limit) {
            throw QueueOverflow("queue " + std::to_string(l + 1) + " exceeded the configured limit " +
                                    std::to_string(queue_limit),
                                l);
        }
        outcome.unused[l] = next - raw;
        state.q[l] = next;
    }
    ++state.slot;
    state.cycle_phase = t_cycle <= 1 ? 0 : (state.cycle_phase + 1) % t_cycle;
}

SlotStreams SlotStreams::for_replication(std::uint64_t seed, std::uint32_t replication, std::uint32_t extra) {
    return SlotStreams{RngStream::for_purpose(seed, replication, StreamPurpose::arrivals, extra),
                       RngStream::for_purpose(seed, replication, StreamPurpose::services, extra)};
}

SlotOutcome step_slot(QueueState& state, Dispatch dispatch, const SystemConfig& system, SlotStreams& streams,
                      std::uint32_t t_cycle) {
    if (dispatch.server >= system.n()) throw InvalidArgument("dispatch target out of range");
    const std::int64_t a = sample_arrival(system.arrival, streams.arrivals);
    std::vector<std::int64_t> s(system.n());
    for (std::size_t l = 0; l < system.n(); ++l) s[l] = system.service[l].sample(streams.services);
    SlotOutcome out;
    apply_slot(state, a, dispatch, s, t_cycle, out);
    return out;
}

}  // namespace hetlb
