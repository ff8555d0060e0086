#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetlb/model.hpp"
#include "hetlb/permutation.hpp"
#include "hetlb/rng.hpp"

namespace hetlb {

enum class PolicyKind { rand, weighted_rand, round_robin, jsq, pod, jsed, custom };

std::string to_string(PolicyKind kind);
/// Accepts rand, weighted_rand, round_robin (or rr), jsq, pod, jsed, custom.
PolicyKind parse_policy_kind(const std::string& name);

/// A member of the sample-sort-decide family: every t_cycle slots the queues
/// are sampled, sorted by Q_l / gamma_l (longest first) and a plan of t_cycle
/// dispatch decisions is drawn from the resulting order and the service rates.
struct PolicySpec {
    PolicyKind kind = PolicyKind::jsq;
    std::uint32_t t_cycle = 1;
    std::vector<double> gamma;
    std::uint32_t d = 0;           // pod only
    std::string ftable_path;       // custom only

    /// Built-in with its canonical cycle length and scaling vector (gamma = mu
    /// for jsed, all-ones otherwise; round robin uses T = n). `mu` must be the
    /// sorted rate vector of the system the policy will run on.
    static PolicySpec builtin(PolicyKind kind, std::span<const double> mu, std::uint32_t d = 0);

    /// Throws InvalidArgument on gamma <= 0, d outside [1, n], T < 1, or
    /// round robin with T != n.
    void validate(std::size_t n) const;

    bool is_builtin() const noexcept { return kind != PolicyKind::custom; }
    /// Whether the decisions depend on the sampled order.
    bool uses_order() const noexcept {
        return kind == PolicyKind::jsq || kind == PolicyKind::jsed || kind == PolicyKind::pod;
    }
    /// Whether a plan consumes decision randomness W_k.
    bool randomized_decisions() const noexcept {
        return kind == PolicyKind::rand || kind == PolicyKind::weighted_rand || kind == PolicyKind::pod;
    }
    std::string describe() const;
};

struct SortResult {
    Permutation eta;
    std::vector<double> sort_keys;  // O_l = Q_l / gamma_l, indexed by server
};

/// Longest-first order of Q_l / gamma_l. Blocks of exactly equal keys are put
/// in a uniformly random order drawn from `tie_break`.
SortResult sort_scaled(std::span<const std::int64_t> q, std::span<const double> gamma, RngStream& tie_break);
/// Allocation-free form: `order` receives the permutation, `keys` the scaled lengths.
void sort_scaled_into(std::span<const std::int64_t> q, std::span<const double> gamma, RngStream& tie_break,
                      std::vector<std::uint32_t>& order, std::vector<double>& keys);

/// Decisions phi(k) for one cycle, one target server per slot.
struct CyclePlan {
    std::vector<std::uint32_t> targets;
};

/// Persistent pointer of round robin; lives with the trajectory.
struct RoundRobinState {
    std::uint32_t start = 0;
};

CyclePlan plan_cycle(const PolicySpec& spec, const Permutation& eta, std::span<const double> mu,
                     RngStream& decisions, RoundRobinState& rr);
/// Reuses plan.targets and scratch; `eta` lists servers longest first.
void plan_cycle_into(const PolicySpec& spec, std::span<const std::uint32_t> eta, std::span<const double> mu,
                     RngStream& decisions, RoundRobinState& rr, CyclePlan& plan, std::vector<std::uint32_t>& scratch);

/// Z(t) for phase t - floor(t/T)*T of the current cycle. Throws
/// std::out_of_range for phase >= T.
Dispatch dispatch_for_slot(const CyclePlan& plan, std::uint32_t phase);

/// Per-trajectory policy driver: owns the V_k / W_k streams and the
/// round-robin pointer.
class Dispatcher {
public:
    Dispatcher(PolicySpec spec, std::vector<double> mu, std::uint64_t seed, std::uint32_t replication,
               std::uint32_t extra = 0);

    /// Samples the queues at a cycle boundary and returns the plan for the
    /// next t_cycle slots.
    const CyclePlan& begin_cycle(std::span<const std::int64_t> q);

    const PolicySpec& spec() const noexcept { return spec_; }
    /// Order used by the last cycle (empty for order-free policies).
    std::span<const std::uint32_t> last_order() const noexcept { return order_; }

private:
    PolicySpec spec_;
    std::vector<double> mu_;
    RngStream sorting_;
    RngStream decisions_;
    RoundRobinState rr_;
    CyclePlan plan_;
    std::vector<std::uint32_t> order_;
    std::vector<double> keys_;
    std::vector<std::uint32_t> scratch_;
    Permutation identity_;
};

}  // namespace hetlb
