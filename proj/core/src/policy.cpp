#include "hetlb/policy.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hetlb/error.hpp"

namespace hetlb {

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::rand: return "rand";
        case PolicyKind::weighted_rand: return "weighted_rand";
        case PolicyKind::round_robin: return "round_robin";
        case PolicyKind::jsq: return "jsq";
        case PolicyKind::pod: return "pod";
        case PolicyKind::jsed: return "jsed";
        case PolicyKind::custom: return "custom";
    }
    return "unknown";
}

PolicyKind parse_policy_kind(const std::string& name) {
    if (name == "rand") return PolicyKind::rand;
    if (name == "weighted_rand") return PolicyKind::weighted_rand;
    if (name == "round_robin" || name == "rr") return PolicyKind::round_robin;
    if (name == "jsq") return PolicyKind::jsq;
    if (name == "pod") return PolicyKind::pod;
    if (name == "jsed") return PolicyKind::jsed;
    if (name == "custom") return PolicyKind::custom;
    throw InvalidArgument("unknown policy kind '" + name + "'");
}

PolicySpec PolicySpec::builtin(PolicyKind kind, std::span<const double> mu, std::uint32_t d) {
    PolicySpec spec;
    spec.kind = kind;
    spec.d = d;
    spec.t_cycle = kind == PolicyKind::round_robin ? static_cast<std::uint32_t>(mu.size()) : 1;
    if (kind == PolicyKind::jsed) {
        spec.gamma.assign(mu.begin(), mu.end());
    } else {
        spec.gamma.assign(mu.size(), 1.0);
    }
    return spec;
}

void PolicySpec::validate(std::size_t n) const {
    if (t_cycle < 1) throw InvalidArgument("cycle length T must be at least 1");
    if (gamma.size() != n) throw InvalidArgument("gamma must have one entry per server");
    for (double g : gamma) {
        if (!(g > 0.0)) throw InvalidArgument("gamma entries must be strictly positive");
    }
    if (kind == PolicyKind::pod && (d < 1 || d > n)) {
        throw InvalidArgument("pod requires 1 <= d <= n");
    }
    if (kind == PolicyKind::round_robin && t_cycle != n) {
        throw InvalidArgument("round_robin requires T = n");
    }
}

std::string PolicySpec::describe() const {
    std::ostringstream os;
    os << to_string(kind);
    if (kind == PolicyKind::pod) os << "(d=" << d << ")";
    os << " T=" << t_cycle;
    return os.str();
}

void sort_scaled_into(std::span<const std::int64_t> q, std::span<const double> gamma, RngStream& tie_break,
                      std::vector<std::uint32_t>& order, std::vector<double>& keys) {
    if (q.size() != gamma.size()) throw InvalidArgument("queue and gamma lengths differ");
    const std::size_t n = q.size();
    keys.resize(n);
    order.resize(n);
    for (std::size_t l = 0; l < n; ++l) keys[l] = static_cast<double>(q[l]) / gamma[l];

    // stable insertion sort, descending (n is small)
    for (std::size_t i = 0; i < n; ++i) {
        const auto item = static_cast<std::uint32_t>(i);
        std::size_t j = i;
        while (j > 0 && keys[order[j - 1]] < keys[item]) {
            order[j] = order[j - 1];
            --j;
        }
        order[j] = item;
    }

    // shuffle each block of equal keys
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin + 1;
        while (end < n && keys[order[end]] == keys[order[begin]]) ++end;
        for (std::size_t i = end - 1; i > begin; --i) {
            const auto j = begin + static_cast<std::size_t>(tie_break.below(i - begin + 1));
            std::swap(order[i], order[j]);
        }
        begin = end;
    }
}

SortResult sort_scaled(std::span<const std::int64_t> q, std::span<const double> gamma, RngStream& tie_break) {
    std::vector<std::uint32_t> order;
    SortResult out;
    sort_scaled_into(q, gamma, tie_break, order, out.sort_keys);
    out.eta = Permutation(std::move(order));
    return out;
}

namespace {

std::uint32_t weighted_pick(std::span<const double> mu, double total, RngStream& rng) {
    const double u = rng.uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < mu.size(); ++i) {
        acc += mu[i];
        if (u < acc) return static_cast<std::uint32_t>(i);
    }
    return static_cast<std::uint32_t>(mu.size() - 1);
}

// Largest of d distinct uniformly chosen positions in [0, n).
std::uint32_t best_of_d(std::vector<std::uint32_t>& scratch, std::uint32_t d, RngStream& rng) {
    const std::size_t n = scratch.size();
    std::iota(scratch.begin(), scratch.end(), 0U);
    std::uint32_t best = 0;
    for (std::size_t i = 0; i < d; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(scratch[i], scratch[j]);
        best = std::max(best, scratch[i]);
    }
    return best;
}

}  // namespace

void plan_cycle_into(const PolicySpec& spec, std::span<const std::uint32_t> eta, std::span<const double> mu,
                     RngStream& decisions, RoundRobinState& rr, CyclePlan& plan, std::vector<std::uint32_t>& scratch) {
    const std::size_t n = mu.size();
    if (eta.size() != n) throw InvalidArgument("permutation size does not match the system");
    plan.targets.resize(spec.t_cycle);

    RngStream slot_rng;
    if (spec.randomized_decisions()) slot_rng = RngStream::from_word(decisions.next_u64());

    switch (spec.kind) {
        case PolicyKind::rand:
            for (auto& t : plan.targets) t = static_cast<std::uint32_t>(slot_rng.below(n));
            break;
        case PolicyKind::weighted_rand: {
            const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
            for (auto& t : plan.targets) t = weighted_pick(mu, total, slot_rng);
            break;
        }
        case PolicyKind::round_robin:
            for (std::uint32_t j = 0; j < spec.t_cycle; ++j) {
                plan.targets[j] = static_cast<std::uint32_t>((rr.start + j) % n);
            }
            rr.start = static_cast<std::uint32_t>((rr.start + spec.t_cycle) % n);
            break;
        case PolicyKind::jsq:
        case PolicyKind::jsed:
            std::fill(plan.targets.begin(), plan.targets.end(), eta[n - 1]);
            break;
        case PolicyKind::pod: {
            scratch.resize(n);
            for (auto& t : plan.targets) t = eta[best_of_d(scratch, spec.d, slot_rng)];
            break;
        }
        case PolicyKind::custom:
            throw InvalidArgument("custom policies are defined by an f-table only and cannot be simulated");
    }
}

CyclePlan plan_cycle(const PolicySpec& spec, const Permutation& eta, std::span<const double> mu,
                     RngStream& decisions, RoundRobinState& rr) {
    CyclePlan plan;
    std::vector<std::uint32_t> scratch;
    plan_cycle_into(spec, eta.order(), mu, decisions, rr, plan, scratch);
    return plan;
}

Dispatch dispatch_for_slot(const CyclePlan& plan, std::uint32_t phase) {
    if (phase >= plan.targets.size()) throw std::out_of_range("cycle phase outside [0, T)");
    return Dispatch{plan.targets[phase]};
}

Dispatcher::Dispatcher(PolicySpec spec, std::vector<double> mu, std::uint64_t seed, std::uint32_t replication,
                       std::uint32_t extra)
    : spec_(std::move(spec)),
      mu_(std::move(mu)),
      sorting_(RngStream::for_purpose(seed, replication, StreamPurpose::sorting, extra)),
      decisions_(RngStream::for_purpose(seed, replication, StreamPurpose::decisions, extra)),
      identity_(Permutation::identity(mu_.size())) {
    spec_.validate(mu_.size());
    if (!spec_.is_builtin()) {
        throw InvalidArgument("custom policies are defined by an f-table only and cannot be simulated");
    }
}

const CyclePlan& Dispatcher::begin_cycle(std::span<const std::int64_t> q) {
    if (spec_.uses_order()) {
        sort_scaled_into(q, spec_.gamma, sorting_, order_, keys_);
        plan_cycle_into(spec_, order_, mu_, decisions_, rr_, plan_, scratch_);
    } else {
        plan_cycle_into(spec_, identity_.order(), mu_, decisions_, rr_, plan_, scratch_);
    }
    return plan_;
}

}  // namespace hetlb
