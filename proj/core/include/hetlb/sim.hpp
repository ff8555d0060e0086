#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetlb/fvector.hpp"
#include "hetlb/model.hpp"
#include "hetlb/policy.hpp"
#include "hetlb/stats.hpp"

namespace hetlb {

/// O = q / sqrt(gamma) split into its projection on c = (sqrt(gamma_l)) and
/// the orthogonal remainder.
struct Decomposition {
    std::vector<double> o;
    std::vector<double> o_par;
    std::vector<double> o_perp;
};

Decomposition decompose(std::span<const std::int64_t> q, std::span<const double> gamma);

struct RunOptions {
    std::uint64_t slots = 0;    // total slots per replication, burn-in included
    std::uint64_t burn_in = 0;  // rounded up to a cycle boundary
    std::uint32_t replications = 1;
    std::uint32_t stream_extra = 0;  // separates independent runs sharing a seed
    std::int64_t queue_limit = std::numeric_limits<std::int64_t>::max();
    std::size_t batches = 32;
};

/// Estimates from queue states sampled at cycle boundaries after burn-in.
struct SimStats {
    std::uint64_t samples = 0;
    std::uint64_t measured_slots = 0;  // post-burn-in slots over all replications
    std::vector<Estimate> mean_q;
    Estimate mean_total;
    Estimate o_perp_sq_mean;
    Estimate o_sq_mean;
    /// E[Q_l / ||Q||_1 | ||Q||_1 > 0].
    std::vector<double> per_queue_share;
    std::uint64_t nonempty_samples = 0;
    /// Exact law of ||Q||_1 at the samples; eps * k gives the scaled sample.
    IntHistogram total_hist;
    /// max | ||O||^2 - ||O_par||^2 - ||O_perp||^2 | over samples.
    double max_pythagoras_residual = 0.0;
};

/// Runs options.replications independent trajectories in parallel (streams
/// keyed by replication index) and pools their batch means.
/// Throws QueueOverflow when a queue passes options.queue_limit.
SimStats run_steady_state(const SystemConfig& system, const PolicySpec& policy, const RunOptions& options);

/// Growth test for a group of servers driven above the stability threshold.
struct TrendReport {
    std::vector<std::size_t> group;
    double slope = 0.0;   // jobs per slot
    double t_stat = 0.0;
    std::uint64_t points = 0;
};

/// Regresses the group's total queue on t over `slots` slots from empty.
TrendReport transience_probe(const SystemConfig& system, const PolicySpec& policy, std::uint64_t slots,
                             std::span<const std::size_t> group, std::uint32_t stream_extra = 0);

struct SSCConstants {
    double delta_star = 0.0;
    double xi_star = 0.0;
    double delta = 0.0;      // delta* ||mu||_1 / (2 xi*)
    double z_bound = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double k_total = 0.0;
    double eta_hajek = 0.0;
    double rho = 0.0;
    double a_level = 0.0;
    double eps0 = 0.0;
    double n_perp_sq = 0.0;
    /// eps <= delta ; outside it the bound is not claimed.
    bool eps_in_regime = false;
};

/// Explicit SSC constants at slack eps. Throws PreconditionFailed when the
/// strict majorization condition fails (delta* <= 0).
SSCConstants ssc_constants(const SystemConfig& system, const PolicySpec& policy, const FTable& table, double eps);

/// Limit of both sides of the delay sandwich for eps * E[||Q||_1].
double limit_total_mean(const SystemConfig& system);
/// Lower bound on eps * E[(1/n) sum Q_l] (any policy).
double lower_bound_per_server(const SystemConfig& system, double eps);
/// Upper bound on eps * E[(1/n) sum Q_l] with the given N_perp^2.
double upper_bound_per_server(const SystemConfig& system, const PolicySpec& policy, double eps, double n_perp_sq);

struct DistributionFit {
    std::uint64_t samples = 0;
    double target_mean = 0.0;  // mean of the limiting exponential
    double sample_mean = 0.0;  // of eps ||Q||_1
    double mean_rel_error = 0.0;
    double cv2 = 0.0;
    double ks = 0.0;
    std::vector<double> shares;
    std::vector<double> target_shares;  // gamma_l / ||gamma||_1
    double max_share_error = 0.0;
};

/// Throws InvalidArgument with fewer than 1000 samples.
DistributionFit distribution_fit(const SimStats& stats, const SystemConfig& system, std::span<const double> gamma,
                                 double eps);

struct SweepConfig {
    std::vector<double> epsilons;
    std::uint32_t replications = 8;
    std::uint64_t slots_per_rep = 0;  // burn-in included
    std::optional<std::uint64_t> burn_in;  // default max(1e6, 20 / eps^2)
    double variance = 1.0;                 // arrival variance, fixed across eps
    std::optional<std::int64_t> a_max_total;
    std::int64_t queue_limit = std::numeric_limits<std::int64_t>::max();

    std::uint64_t burn_in_for(double eps) const;
    void validate(double total_rate) const;
};

struct SweepRow {
    double eps = 0.0;
    double lambda = 0.0;  // per-server arrival rate (sum(mu) - eps) / n
    std::uint64_t burn_in = 0;
    SimStats stats;
    Estimate eps_mean_q_per_server;
    double lb = 0.0;
    std::optional<double> ub;  // needs strict majorization
    std::optional<SSCConstants> constants;
    std::optional<DistributionFit> fit;
};

struct SweepResult {
    bool strict_majorization = false;
    double sandwich_limit = 0.0;  // (n sigma_lambda^2 + sum sigma_l^2) / (2n)
    std::vector<SweepRow> rows;
};

/// Every (eps, replication) pair is an independent job; results do not
/// depend on the thread count.
SweepResult heavy_traffic_sweep(const SystemConfig& base, const PolicySpec& policy, const FTable& table,
                                const SweepConfig& sweep);

struct SSCVerdict {
    bool applicable = false;
    bool pass = false;
    double perp_ratio = 0.0;    // max/min of E||O_perp||^2
    double o_sq_growth = 0.0;   // E||O||^2 at eps_min over eps_max
    double required_growth = 0.0;
    bool below_n_perp = false;
    std::string reason;
};

/// Throws InvalidArgument unless there are at least 3 eps values spanning a
/// factor of 4.
SSCVerdict ssc_empirical_check(const SweepResult& sweep);

}  // namespace hetlb
