#include "hetlb/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <sstream>

#include "hetlb/error.hpp"
#include "hetlb/parallel.hpp"
#include "hetlb/stability.hpp"

namespace hetlb {

Decomposition decompose(std::span<const std::int64_t> q, std::span<const double> gamma) {
    if (q.size() != gamma.size()) throw InvalidArgument("queue and gamma lengths differ");
    const std::size_t n = q.size();
    double gamma_sum = 0.0, q_sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        if (!(gamma[l] > 0.0)) throw InvalidArgument("gamma must be positive");
        gamma_sum += gamma[l];
        q_sum += static_cast<double>(q[l]);
    }
    Decomposition d{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    const double scale = q_sum / gamma_sum;
    for (std::size_t l = 0; l < n; ++l) {
        const double root = std::sqrt(gamma[l]);
        d.o[l] = static_cast<double>(q[l]) / root;
        d.o_par[l] = scale * root;
        d.o_perp[l] = d.o[l] - d.o_par[l];
    }
    return d;
}

namespace {

// Sample accumulators of one replication.
struct Accumulator {
    std::vector<BatchMeans> q;
    BatchMeans total, perp, o_sq;
    std::vector<double> share_sum;
    std::uint64_t nonempty = 0;
    std::uint64_t samples = 0;
    std::uint64_t measured_slots = 0;
    IntHistogram hist;
    double residual = 0.0;
};

struct Schedule {
    std::uint64_t cycles = 0;
    std::uint64_t first_sample = 0;
    std::uint64_t samples() const { return cycles - first_sample; }
};

Schedule schedule_for(const RunOptions& options, std::uint32_t t_cycle) {
    Schedule s;
    s.cycles = options.slots / t_cycle;
    s.first_sample = (options.burn_in + t_cycle - 1) / t_cycle;
    if (s.first_sample >= s.cycles) throw InvalidArgument("burn-in must be shorter than the run");
    if (s.samples() < options.batches) throw InvalidArgument("too few post-burn-in cycles for the batch count");
    return s;
}

Accumulator simulate_replication(const SystemConfig& system, const PolicySpec& policy, const RunOptions& options,
                                 std::uint32_t replication) {
    const std::size_t n = system.n();
    const std::uint32_t t_cycle = policy.t_cycle;
    const Schedule sched = schedule_for(options, t_cycle);

    Accumulator acc;
    acc.q.assign(n, BatchMeans(sched.samples(), options.batches));
    acc.total = acc.perp = acc.o_sq = BatchMeans(sched.samples(), options.batches);
    acc.share_sum.assign(n, 0.0);
    acc.samples = sched.samples();
    acc.measured_slots = sched.samples() * t_cycle;

    std::vector<double> root_gamma(n), inv_root_gamma(n);
    double gamma_sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        root_gamma[l] = std::sqrt(policy.gamma[l]);
        inv_root_gamma[l] = 1.0 / root_gamma[l];
        gamma_sum += policy.gamma[l];
    }

    Dispatcher dispatcher(policy, system.mu, system.seed, replication, options.stream_extra);
    auto streams = SlotStreams::for_replication(system.seed, replication, options.stream_extra);
    QueueState state(n);
    SlotOutcome outcome;
    std::vector<std::int64_t> services(n);

    for (std::uint64_t k = 0; k < sched.cycles; ++k) {
        if (k >= sched.first_sample) {
            std::int64_t total = 0;
            for (std::size_t l = 0; l < n; ++l) total += state.q[l];
            const double tot = static_cast<double>(total);
            const double scale = tot / gamma_sum;
            double o_sq = 0.0, perp = 0.0;
            for (std::size_t l = 0; l < n; ++l) {
                const double o = static_cast<double>(state.q[l]) * inv_root_gamma[l];
                const double p = o - scale * root_gamma[l];
                o_sq += o * o;
                perp += p * p;
                acc.q[l].add(static_cast<double>(state.q[l]));
            }
            acc.residual = std::max(acc.residual, std::abs(o_sq - tot * tot / gamma_sum - perp));
            acc.total.add(tot);
            acc.perp.add(perp);
            acc.o_sq.add(o_sq);
            acc.hist.add(total);
            if (total > 0) {
                ++acc.nonempty;
                for (std::size_t l = 0; l < n; ++l) acc.share_sum[l] += static_cast<double>(state.q[l]) / tot;
            }
        }
        const CyclePlan& plan = dispatcher.begin_cycle(state.q);
        for (std::uint32_t j = 0; j < t_cycle; ++j) {
            const std::int64_t a = sample_arrival(system.arrival, streams.arrivals);
            for (std::size_t l = 0; l < n; ++l) services[l] = system.service[l].sample(streams.services);
            apply_slot(state, a, Dispatch{plan.targets[j]}, services, t_cycle, outcome, options.queue_limit);
        }
    }
    return acc;
}

Estimate pooled(const std::vector<Accumulator>& reps, BatchMeans Accumulator::*member) {
    std::vector<double> all;
    for (const auto& r : reps) {
        const auto m = (r.*member).means();
        all.insert(all.end(), m.begin(), m.end());
    }
    return estimate_from_batches(all);
}

SimStats pool(const std::vector<Accumulator>& reps, std::size_t n) {
    SimStats s;
    s.mean_total = pooled(reps, &Accumulator::total);
    s.o_perp_sq_mean = pooled(reps, &Accumulator::perp);
    s.o_sq_mean = pooled(reps, &Accumulator::o_sq);
    s.per_queue_share.assign(n, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
        std::vector<double> all;
        for (const auto& r : reps) {
            const auto m = r.q[l].means();
            all.insert(all.end(), m.begin(), m.end());
        }
        s.mean_q.push_back(estimate_from_batches(all));
    }
    for (const auto& r : reps) {
        s.samples += r.samples;
        s.measured_slots += r.measured_slots;
        s.nonempty_samples += r.nonempty;
        s.total_hist.merge(r.hist);
        s.max_pythagoras_residual = std::max(s.max_pythagoras_residual, r.residual);
        for (std::size_t l = 0; l < n; ++l) s.per_queue_share[l] += r.share_sum[l];
    }
    if (s.nonempty_samples > 0) {
        for (double& x : s.per_queue_share) x /= static_cast<double>(s.nonempty_samples);
    }
    return s;
}

void check_run(const SystemConfig& system, const PolicySpec& policy, const RunOptions& options) {
    policy.validate(system.n());
    if (options.replications == 0) throw InvalidArgument("replications must be positive");
    if (options.batches < 2) throw InvalidArgument("at least two batches are needed");
}

}  // namespace

SimStats run_steady_state(const SystemConfig& system, const PolicySpec& policy, const RunOptions& options) {
    check_run(system, policy, options);
    schedule_for(options, policy.t_cycle);
    std::vector<Accumulator> reps(options.replications);
    parallel_for(options.replications, [&](std::size_t r) {
        reps[r] = simulate_replication(system, policy, options, static_cast<std::uint32_t>(r));
    });
    return pool(reps, system.n());
}

TrendReport transience_probe(const SystemConfig& system, const PolicySpec& policy, std::uint64_t slots,
                             std::span<const std::size_t> group, std::uint32_t stream_extra) {
    policy.validate(system.n());
    if (group.empty()) throw InvalidArgument("server group is empty");
    for (std::size_t l : group) {
        if (l >= system.n()) throw InvalidArgument("server group index out of range");
    }
    TrendReport report;
    report.group.assign(group.begin(), group.end());

    const std::uint32_t t_cycle = policy.t_cycle;
    Dispatcher dispatcher(policy, system.mu, system.seed, 0, stream_extra);
    auto streams = SlotStreams::for_replication(system.seed, 0, stream_extra);
    QueueState state(system.n());
    SlotOutcome outcome;
    std::vector<std::int64_t> services(system.n());
    LinearTrend trend;
    for (std::uint64_t k = 0; k < slots / t_cycle; ++k) {
        double y = 0.0;
        for (std::size_t l : group) y += static_cast<double>(state.q[l]);
        trend.add(static_cast<double>(k * t_cycle), y);
        const CyclePlan& plan = dispatcher.begin_cycle(state.q);
        for (std::uint32_t j = 0; j < t_cycle; ++j) {
            const std::int64_t a = sample_arrival(system.arrival, streams.arrivals);
            for (std::size_t l = 0; l < system.n(); ++l) services[l] = system.service[l].sample(streams.services);
            apply_slot(state, a, Dispatch{plan.targets[j]}, services, t_cycle, outcome);
        }
    }
    report.slope = trend.slope();
    report.t_stat = trend.slope_t_stat();
    report.points = trend.count();
    return report;
}

SSCConstants ssc_constants(const SystemConfig& system, const PolicySpec& policy, const FTable& table, double eps) {
    const std::size_t n = system.n();
    if (table.n() != n) throw InvalidArgument("f-table and system sizes differ");
    policy.validate(n);
    if (n < 2) throw PreconditionFailed("state-space collapse constants need at least two servers");
    const auto& mu = system.mu;
    const double mu_sum = system.total_service_rate();

    // delta* and xi* over every proper prefix of every permutation
    double delta_star = std::numeric_limits<double>::infinity();
    double xi_star = -std::numeric_limits<double>::infinity();
    auto visit = [&](const Permutation& eta, const FEntry& entry) {
        double share = 0.0, f = 0.0;
        for (std::size_t l = 0; l + 1 < n; ++l) {
            share += mu[eta[l]] / mu_sum;
            f += entry.f[l];
            delta_star = std::min(delta_star, share - f);
            xi_star = std::max(xi_star, 1.0 - f);
        }
    };
    if (table.enumerable()) {
        for (std::uint64_t r = 0; r < factorial(n); ++r) visit(Permutation::unrank(r, n), table.entry_by_rank(r));
    } else {
        // symmetric row; sorted mu makes the identity minimize every prefix share
        visit(Permutation::identity(n), table.stored().front());
    }
    if (!(delta_star > 0.0)) {
        std::ostringstream msg;
        msg << "strict majorization fails (delta* = " << delta_star << ")";
        throw PreconditionFailed(msg.str());
    }

    const double nd = static_cast<double>(n);
    const double t = static_cast<double>(policy.t_cycle);
    const auto& g = policy.gamma;
    const double g_min = *std::min_element(g.begin(), g.end());
    const double g_max = *std::max_element(g.begin(), g.end());
    const double g_sum = std::accumulate(g.begin(), g.end(), 0.0);
    const double mu_max = *std::max_element(mu.begin(), mu.end());
    const double sig_max = *std::max_element(system.sigma_sq_service.begin(), system.sigma_sq_service.end());
    const double s_max = static_cast<double>(system.s_max);
    const double a_max = system.a_max_per_server();
    const double n_lambda = mu_sum - eps;
    const double n_sig_lambda = system.arrival.variance();
    const double f_max = table.max_f();
    const double tau_max = table.max_tau_sq();
    constexpr double e = std::numbers::e;

    SSCConstants c;
    c.delta_star = delta_star;
    c.xi_star = xi_star;
    const double bracket = t * t * std::pow(n_lambda * f_max + mu_max, 2) + t * f_max * n_sig_lambda +
                           t * t * n_lambda * n_lambda * tau_max + t * sig_max;
    const double tail = t * t * n_lambda * n_lambda * f_max * f_max + t * f_max * n_sig_lambda +
                        t * t * n_lambda * n_lambda * tau_max;
    c.k1 = 2.0 * t * (nd - 1.0) * mu_max * t * s_max / g_min + bracket / g_min + (nd - 1.0) / g_min * bracket +
           (nd - 1.0) / g_min * tail;
    c.k2 = 2.0 * t * t * nd * nd * s_max * s_max / g_sum;
    c.k_total = c.k1 + c.k2;
    c.delta = delta_star * mu_sum / (2.0 * xi_star);
    c.eps_in_regime = eps <= c.delta;

    const double root = std::sqrt(nd * g_max);
    const double drift = t * xi_star * c.delta;
    c.a_level = c.k_total * root / drift;
    c.eps0 = drift / (2.0 * root);
    c.z_bound = 2.0 * t * nd * (a_max + s_max) / std::sqrt(g_min);
    const double z2 = c.z_bound * c.z_bound * (e - 2.0);
    c.eta_hajek = std::min({1.0 / c.z_bound, drift / (4.0 * root * z2), drift / (c.k_total * root)});
    c.rho = 1.0 - c.eps0 * c.eta_hajek + z2 * c.eta_hajek * c.eta_hajek;
    const double eta3 = std::pow(c.eta_hajek, 3);
    c.n_perp_sq = 4.0 * root * e * e / (drift * eta3 - 2.0 * root * z2 * eta3 * c.eta_hajek);
    return c;
}

double limit_total_mean(const SystemConfig& system) {
    const double service_var = std::accumulate(system.sigma_sq_service.begin(), system.sigma_sq_service.end(), 0.0);
    return (system.arrival.variance() + service_var) / 2.0;
}

double lower_bound_per_server(const SystemConfig& system, double eps) {
    const double nd = static_cast<double>(system.n());
    return (2.0 * limit_total_mean(system) + eps * eps - static_cast<double>(system.s_max) * eps) / (2.0 * nd);
}

double upper_bound_per_server(const SystemConfig& system, const PolicySpec& policy, double eps, double n_perp_sq) {
    const double nd = static_cast<double>(system.n());
    const double t = static_cast<double>(policy.t_cycle);
    const double g_min = *std::min_element(policy.gamma.begin(), policy.gamma.end());
    const double g_sum = std::accumulate(policy.gamma.begin(), policy.gamma.end(), 0.0);
    const double s_max = static_cast<double>(system.s_max);
    const double total = limit_total_mean(system) + eps * eps * t / 2.0 +
                         eps * (t * nd * s_max * g_min + 2.0 * t * nd * g_sum * system.a_max_per_server()) /
                             (2.0 * g_min) +
                         std::sqrt(eps) * g_sum * std::sqrt(n_perp_sq) * std::sqrt(nd * s_max) / std::sqrt(g_min);
    return total / nd;
}

DistributionFit distribution_fit(const SimStats& stats, const SystemConfig& system, std::span<const double> gamma,
                                 double eps) {
    if (stats.total_hist.total() < 1000) throw InvalidArgument("distribution fit needs at least 1000 samples");
    if (gamma.size() != system.n()) throw InvalidArgument("gamma length differs from server count");
    DistributionFit fit;
    fit.samples = stats.total_hist.total();
    fit.target_mean = limit_total_mean(system);
    const double mean_k = stats.total_hist.mean();
    fit.sample_mean = eps * mean_k;
    fit.mean_rel_error = std::abs(fit.sample_mean - fit.target_mean) / fit.target_mean;
    fit.cv2 = mean_k > 0.0 ? stats.total_hist.variance() / (mean_k * mean_k) : 0.0;
    fit.ks = ks_distance_exponential(stats.total_hist, eps, fit.target_mean);
    const double g_sum = std::accumulate(gamma.begin(), gamma.end(), 0.0);
    fit.shares = stats.per_queue_share;
    for (std::size_t l = 0; l < gamma.size(); ++l) {
        fit.target_shares.push_back(gamma[l] / g_sum);
        fit.max_share_error = std::max(fit.max_share_error, std::abs(fit.shares[l] - fit.target_shares[l]));
    }
    return fit;
}

std::uint64_t SweepConfig::burn_in_for(double eps) const {
    if (burn_in) return *burn_in;
    return std::max<std::uint64_t>(1'000'000, static_cast<std::uint64_t>(std::ceil(20.0 / (eps * eps))));
}

void SweepConfig::validate(double total_rate) const {
    if (epsilons.empty()) throw InvalidArgument("sweep needs at least one eps");
    for (double eps : epsilons) {
        if (!(eps > 0.0 && eps < total_rate)) {
            std::ostringstream msg;
            msg << "eps = " << eps << " must lie in (0, sum(mu) = " << total_rate << ")";
            throw InvalidArgument(msg.str());
        }
        if (burn_in_for(eps) >= slots_per_rep) {
            std::ostringstream msg;
            msg << "burn-in " << burn_in_for(eps) << " at eps = " << eps << " is not below slots_per_rep";
            throw InvalidArgument(msg.str());
        }
    }
    if (replications == 0) throw InvalidArgument("replications must be positive");
    if (!(variance >= 0.0)) throw InvalidArgument("arrival variance must be nonnegative");
}

SweepResult heavy_traffic_sweep(const SystemConfig& base, const PolicySpec& policy, const FTable& table,
                                const SweepConfig& sweep) {
    const double total_rate = base.total_service_rate();
    sweep.validate(total_rate);
    policy.validate(base.n());
    const std::size_t n = base.n();
    const std::size_t points = sweep.epsilons.size();

    // one arrival law per eps, all with a common bound a_max_total
    constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<ArrivalLaw> laws;
    std::int64_t bound = 0;
    for (double eps : sweep.epsilons) {
        laws.push_back(moment_matched_arrivals(total_rate - eps, sweep.variance, sweep.a_max_total.value_or(kUnbounded)));
        bound = std::max(bound, laws.back().pmf.max_value());
    }
    std::vector<SystemConfig> systems;
    for (auto& law : laws) {
        law.a_max_total = sweep.a_max_total.value_or(bound);
        systems.push_back(base.with_arrival(law));
    }

    SweepResult result;
    result.strict_majorization = check_strict_majorization(table, base.mu).strict;
    result.sandwich_limit = limit_total_mean(systems.front()) / static_cast<double>(n);

    std::vector<RunOptions> options(points);
    for (std::size_t i = 0; i < points; ++i) {
        options[i].slots = sweep.slots_per_rep;
        options[i].burn_in = sweep.burn_in_for(sweep.epsilons[i]);
        options[i].replications = sweep.replications;
        options[i].stream_extra = static_cast<std::uint32_t>(i);
        options[i].queue_limit = sweep.queue_limit;
        check_run(systems[i], policy, options[i]);
        schedule_for(options[i], policy.t_cycle);
    }

    const std::size_t reps = sweep.replications;
    std::vector<Accumulator> acc(points * reps);
    parallel_for(points * reps, [&](std::size_t job) {
        const std::size_t i = job / reps;
        try {
            acc[job] = simulate_replication(systems[i], policy, options[i], static_cast<std::uint32_t>(job % reps));
        } catch (const QueueOverflow& err) {
            std::ostringstream msg;
            msg << "eps = " << sweep.epsilons[i] << ": " << err.what();
            throw QueueOverflow(msg.str(), err.server());
        }
    });

    for (std::size_t i = 0; i < points; ++i) {
        const double eps = sweep.epsilons[i];
        SweepRow row;
        row.eps = eps;
        row.lambda = (total_rate - eps) / static_cast<double>(n);
        row.burn_in = options[i].burn_in;
        row.stats = pool({acc.begin() + static_cast<std::ptrdiff_t>(i * reps),
                          acc.begin() + static_cast<std::ptrdiff_t>((i + 1) * reps)},
                         n);
        const double scale = eps / static_cast<double>(n);
        row.eps_mean_q_per_server = {scale * row.stats.mean_total.mean, scale * row.stats.mean_total.half_width,
                                     row.stats.mean_total.batches};
        row.lb = lower_bound_per_server(systems[i], eps);
        if (result.strict_majorization && n >= 2) {
            row.constants = ssc_constants(systems[i], policy, table, eps);
            row.ub = upper_bound_per_server(systems[i], policy, eps, row.constants->n_perp_sq);
        }
        if (row.stats.total_hist.total() >= 1000) row.fit = distribution_fit(row.stats, systems[i], policy.gamma, eps);
        result.rows.push_back(std::move(row));
    }
    return result;
}

SSCVerdict ssc_empirical_check(const SweepResult& sweep) {
    if (sweep.rows.size() < 3) throw InvalidArgument("the collapse check needs at least 3 eps values");
    auto [lo, hi] = std::minmax_element(sweep.rows.begin(), sweep.rows.end(),
                                        [](const SweepRow& a, const SweepRow& b) { return a.eps < b.eps; });
    if (hi->eps < 4.0 * lo->eps) throw InvalidArgument("the eps values must span a factor of at least 4");

    SSCVerdict v;
    if (!sweep.strict_majorization) {
        v.reason = "strict majorization fails; collapse is not claimed";
        return v;
    }
    v.applicable = true;
    double perp_min = std::numeric_limits<double>::infinity(), perp_max = 0.0;
    v.below_n_perp = true;
    for (const auto& row : sweep.rows) {
        const double p = row.stats.o_perp_sq_mean.mean;
        perp_min = std::min(perp_min, p);
        perp_max = std::max(perp_max, p);
        if (row.constants && row.constants->eps_in_regime && p > row.constants->n_perp_sq) v.below_n_perp = false;
    }
    v.perp_ratio = perp_min > 0.0 ? perp_max / perp_min : std::numeric_limits<double>::infinity();
    v.o_sq_growth = lo->stats.o_sq_mean.mean / hi->stats.o_sq_mean.mean;
    v.required_growth = std::pow(hi->eps / lo->eps, 2) / 2.0;
    v.pass = v.perp_ratio <= 2.0 && v.o_sq_growth >= v.required_growth && v.below_n_perp;
    if (!v.pass) {
        std::ostringstream msg;
        if (v.perp_ratio > 2.0) msg << "perpendicular ratio " << v.perp_ratio << " > 2; ";
        if (v.o_sq_growth < v.required_growth) msg << "growth " << v.o_sq_growth << " < " << v.required_growth << "; ";
        if (!v.below_n_perp) msg << "E||O_perp||^2 above N_perp^2; ";
        v.reason = msg.str();
    }
    return v;
}

}  // namespace hetlb
