#include <benchmark/benchmark.h>

#include <vector>

#include "hetlb/fvector.hpp"
#include "hetlb/model.hpp"
#include "hetlb/policy.hpp"
#include "hetlb/rng.hpp"
#include "hetlb/sim.hpp"
#include "hetlb/stability.hpp"

using namespace hetlb;

static void BM_PhiloxDraw(benchmark::State& state) {
    auto rng = RngStream::for_purpose(1, 0, StreamPurpose::synthetic);
    for (auto _ : state) benchmark::DoNotOptimize(rng.next_u64());
}
BENCHMARK(BM_PhiloxDraw);

static void BM_SortScaled(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto rng = RngStream::for_purpose(2, 0, StreamPurpose::synthetic);
    std::vector<std::int64_t> q(n);
    std::vector<double> gamma(n, 1.0);
    for (std::size_t l = 0; l < n; ++l) q[l] = static_cast<std::int64_t>(rng.below(8));
    std::vector<std::uint32_t> order;
    std::vector<double> keys;
    for (auto _ : state) {
        sort_scaled_into(q, gamma, rng, order, keys);
        benchmark::DoNotOptimize(order.data());
    }
}
BENCHMARK(BM_SortScaled)->Arg(2)->Arg(8)->Arg(64);

// Simulated slots per second of a two-server system in heavy traffic.
static void BM_SlotLoop(benchmark::State& state) {
    const auto kind = static_cast<PolicyKind>(state.range(0));
    const std::vector<double> mu{0.4, 0.6};
    const auto sys = SystemConfig::bernoulli_batch(mu, 1, moment_matched_arrivals(0.98, 1.0, 6), 3);
    const auto pol = PolicySpec::builtin(kind, mu, 2);
    RunOptions run;
    run.slots = 1 << 18;
    run.burn_in = 1 << 10;
    run.replications = 1;
    for (auto _ : state) benchmark::DoNotOptimize(run_steady_state(sys, pol, run).mean_total.mean);
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(run.slots));
    state.SetLabel(to_string(kind));
}
BENCHMARK(BM_SlotLoop)
    ->Arg(static_cast<int>(PolicyKind::jsq))
    ->Arg(static_cast<int>(PolicyKind::pod))
    ->Arg(static_cast<int>(PolicyKind::rand))
    ->Unit(benchmark::kMillisecond);

static void BM_AnalyticTable(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<double> mu(n);
    for (std::size_t l = 0; l < n; ++l) mu[l] = 1.0 + static_cast<double>(l);
    const auto spec = PolicySpec::builtin(PolicyKind::weighted_rand, mu);
    for (auto _ : state) benchmark::DoNotOptimize(f_analytic(spec, mu).n());
}
BENCHMARK(BM_AnalyticTable)->DenseRange(3, 7, 2);

static void BM_StabilityAnalysis(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<double> mu(n);
    for (std::size_t l = 0; l < n; ++l) mu[l] = 1.0 + static_cast<double>(l);
    const auto table = f_analytic(PolicySpec::builtin(PolicyKind::weighted_rand, mu), mu);
    for (auto _ : state) benchmark::DoNotOptimize(analyze_stability(table, mu).h_star);
}
BENCHMARK(BM_StabilityAnalysis)->DenseRange(3, 7, 2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
