#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "hetlb/error.hpp"
#include "hetlb/sim.hpp"
#include "oracles.hpp"

using namespace hetlb;

namespace {

SystemConfig two_server(double p_hi, std::vector<double> mu = {0.4, 0.6}) {
    return SystemConfig::bernoulli_batch(mu, 1, ArrivalLaw::two_point(0, 1, p_hi), 4242);
}

RunOptions opts(std::uint64_t slots, std::uint64_t burn_in, std::uint32_t reps) {
    RunOptions o;
    o.slots = slots;
    o.burn_in = burn_in;
    o.replications = reps;
    return o;
}

double sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

TEST_SUITE("sim") {
    TEST_CASE("orthogonal decomposition examples") {
        const auto d0 = decompose(std::vector<std::int64_t>{2, 2}, std::vector<double>{1, 1});
        CHECK(sq(d0.o_perp) == doctest::Approx(0.0));
        const auto d1 = decompose(std::vector<std::int64_t>{3, 0}, std::vector<double>{1, 1});
        CHECK(d1.o_par[0] == doctest::Approx(1.5));
        CHECK(d1.o_par[1] == doctest::Approx(1.5));
        CHECK(d1.o_perp[0] == doctest::Approx(1.5));
        CHECK(d1.o_perp[1] == doctest::Approx(-1.5));
        const auto d2 = decompose(std::vector<std::int64_t>{2, 4}, std::vector<double>{1, 2});
        CHECK(d2.o[1] == doctest::Approx(4.0 / std::sqrt(2.0)));
        CHECK(d2.o_par[1] == doctest::Approx(2.0 * std::sqrt(2.0)));
        CHECK(std::abs(d2.o_perp[0]) < 1e-12);
        CHECK(std::abs(d2.o_perp[1]) < 1e-12);
        CHECK_THROWS_AS(decompose(std::vector<std::int64_t>{1}, std::vector<double>{1, 1}), InvalidArgument);
    }

    TEST_CASE("decomposition is orthogonal on random input") {
        std::mt19937_64 gen(5);
        std::uniform_int_distribution<std::int64_t> qd(0, 1000);
        std::uniform_real_distribution<double> gd(0.1, 5.0);
        for (int c = 0; c < 500; ++c) {
            const std::size_t n = 1 + static_cast<std::size_t>(c % 6);
            std::vector<std::int64_t> q(n);
            std::vector<double> g(n);
            for (std::size_t l = 0; l < n; ++l) {
                q[l] = qd(gen);
                g[l] = gd(gen);
            }
            const auto d = decompose(q, g);
            double dot = 0.0;
            for (std::size_t l = 0; l < n; ++l) {
                CHECK(d.o[l] == doctest::Approx(d.o_par[l] + d.o_perp[l]));
                dot += d.o_par[l] * d.o_perp[l];
            }
            CHECK(std::abs(dot) <= 1e-9 * (1.0 + sq(d.o)));
            CHECK(sq(d.o) == doctest::Approx(sq(d.o_par) + sq(d.o_perp)));
        }
    }

    TEST_CASE("empty system stays empty") {
        const auto sys = SystemConfig::bernoulli_batch({0.3, 0.7}, 1, ArrivalLaw::deterministic(0), 1);
        for (auto kind : {PolicyKind::rand, PolicyKind::jsq, PolicyKind::pod}) {
            const auto s = run_steady_state(sys, PolicySpec::builtin(kind, sys.mu, 1), opts(10000, 100, 2));
            CHECK(s.mean_total.mean == 0.0);
            CHECK(s.mean_q[0].mean == 0.0);
            CHECK(s.nonempty_samples == 0);
        }
    }

    TEST_CASE("single queue matches the birth-death solution") {
        const auto sys = SystemConfig::bernoulli_batch({0.5}, 1, ArrivalLaw::two_point(0, 1, 0.3), 77);
        const auto s = run_steady_state(sys, PolicySpec::builtin(PolicyKind::jsq, sys.mu), opts(2'000'000, 10'000, 4));
        const double exact = oracle::single_queue_mean(0.3, 0.5);
        CAPTURE(exact);
        CAPTURE(s.mean_total.mean);
        CHECK(std::abs(s.mean_total.mean - exact) <= 2.0 * s.mean_total.half_width);
        CHECK(s.samples == 4 * (2'000'000 - 10'000));
        CHECK(s.max_pythagoras_residual < 1e-6);
    }

    TEST_CASE("shortest queue beats random routing") {
        const auto sys = two_server(0.9, {0.5, 0.5});
        const auto o = opts(400'000, 20'000, 4);
        const auto jsq = run_steady_state(sys, PolicySpec::builtin(PolicyKind::jsq, sys.mu), o);
        const auto rnd = run_steady_state(sys, PolicySpec::builtin(PolicyKind::rand, sys.mu), o);
        CHECK(jsq.mean_total.mean + jsq.mean_total.half_width < rnd.mean_total.mean - rnd.mean_total.half_width);
    }

    TEST_CASE("more arrivals never shorten queues under state-blind routing") {
        const auto lo = two_server(0.6);
        const auto hi = two_server(0.8);
        const auto o = opts(200'000, 1000, 2);
        for (auto kind : {PolicyKind::rand, PolicyKind::weighted_rand}) {
            const auto a = run_steady_state(lo, PolicySpec::builtin(kind, lo.mu), o);
            const auto b = run_steady_state(hi, PolicySpec::builtin(kind, hi.mu), o);
            for (std::size_t l = 0; l < 2; ++l) CHECK(a.mean_q[l].mean <= b.mean_q[l].mean);
        }
    }

    TEST_CASE("results do not depend on the worker count") {
        const auto sys = two_server(0.9);
        const auto pol = PolicySpec::builtin(PolicyKind::jsed, sys.mu);
        const auto o = opts(100'000, 1000, 5);
        ::setenv("HETLB_THREADS", "1", 1);
        const auto a = run_steady_state(sys, pol, o);
        ::setenv("HETLB_THREADS", "3", 1);
        const auto b = run_steady_state(sys, pol, o);
        ::unsetenv("HETLB_THREADS");
        CHECK(a.mean_total.mean == b.mean_total.mean);
        CHECK(a.mean_total.half_width == b.mean_total.half_width);
        CHECK(a.o_perp_sq_mean.mean == b.o_perp_sq_mean.mean);
        CHECK(a.total_hist.counts().size() == b.total_hist.counts().size());
    }

    TEST_CASE("queue limit surfaces as overflow") {
        const auto sys = two_server(1.0, {0.3, 0.3});
        auto o = opts(100'000, 1000, 1);
        o.queue_limit = 500;
        CHECK_THROWS_AS(run_steady_state(sys, PolicySpec::builtin(PolicyKind::jsq, sys.mu), o), QueueOverflow);
    }

    TEST_CASE("overloaded group grows linearly") {
        const auto law = moment_matched_arrivals(2.2, 1.0, 10);
        const auto sys = SystemConfig::bernoulli_batch({1.0, 2.0}, 2, law, 9);
        const std::vector<std::size_t> group{0};
        const auto r = transience_probe(sys, PolicySpec::builtin(PolicyKind::rand, sys.mu), 1'000'000, group);
        CHECK(r.slope == doctest::Approx(0.1).epsilon(0.1));
        CHECK(r.t_stat > 5.0);
    }

    TEST_CASE("collapse constants agree with an independent derivation") {
        const std::vector<double> mu{0.4, 0.6};
        const auto law = moment_matched_arrivals(0.98, 1.0, 6);
        const auto sys = SystemConfig::bernoulli_batch(mu, 1, law, 1);
        for (auto kind : {PolicyKind::jsq, PolicyKind::jsed, PolicyKind::pod}) {
            auto pol = PolicySpec::builtin(kind, mu, 2);
            const auto table = f_analytic(pol, mu);
            for (double eps : {0.2, 0.05, 0.02}) {
                const auto c = ssc_constants(sys, pol, table, eps);
                const auto o = oracle::ssc(sys, pol, table, eps);
                CHECK(c.delta_star == doctest::Approx(o.delta_star).epsilon(1e-12));
                CHECK(c.xi_star == doctest::Approx(o.xi_star).epsilon(1e-12));
                CHECK(c.k1 == doctest::Approx(o.k1).epsilon(1e-12));
                CHECK(c.k2 == doctest::Approx(o.k2).epsilon(1e-12));
                CHECK(c.z_bound == doctest::Approx(o.z).epsilon(1e-12));
                CHECK(c.eta_hajek == doctest::Approx(o.eta).epsilon(1e-12));
                CHECK(c.rho == doctest::Approx(o.rho).epsilon(1e-12));
                CHECK(c.a_level == doctest::Approx(o.a).epsilon(1e-12));
                CHECK(c.eps0 == doctest::Approx(o.eps0).epsilon(1e-12));
                CHECK(c.n_perp_sq == doctest::Approx(o.n_perp_sq).epsilon(1e-10));
                CHECK(o.n_perp_sq == doctest::Approx(o.n_perp_sq_hajek).epsilon(1e-10));
                CHECK(c.eps_in_regime == (eps <= c.delta));
            }
        }
        const auto jsq = PolicySpec::builtin(PolicyKind::jsq, mu);
        const auto c = ssc_constants(sys, jsq, f_analytic(jsq, mu), 0.02);
        CHECK(c.delta_star == doctest::Approx(0.4));
        CHECK(c.xi_star == doctest::Approx(1.0));
        CHECK(c.delta == doctest::Approx(0.2));

        const auto wr = PolicySpec::builtin(PolicyKind::weighted_rand, mu);
        CHECK_THROWS_AS(ssc_constants(sys, wr, f_analytic(wr, mu), 0.02), PreconditionFailed);
    }

    TEST_CASE("delay bounds") {
        const auto law = moment_matched_arrivals(0.98, 1.0, 6);
        const auto sys = SystemConfig::bernoulli_batch({0.4, 0.6}, 1, law, 1);
        CHECK(limit_total_mean(sys) == doctest::Approx(0.74));
        CHECK(lower_bound_per_server(sys, 0.02) == doctest::Approx((1.48 + 0.0004 - 0.02) / 4.0));
        const auto pol = PolicySpec::builtin(PolicyKind::jsq, sys.mu);
        const auto table = f_analytic(pol, sys.mu);
        const auto ub = [&](double eps) {
            return upper_bound_per_server(sys, pol, eps, ssc_constants(sys, pol, table, eps).n_perp_sq);
        };
        double previous = std::numeric_limits<double>::infinity();
        for (double eps : {0.1, 0.01, 1e-4, 1e-6}) {
            CHECK(ub(eps) >= lower_bound_per_server(sys, eps));
            CHECK(ub(eps) <= previous);
            previous = ub(eps);
        }
        // the collapse term dominates the gap and shrinks like sqrt(eps)
        const double limit = limit_total_mean(sys) / 2.0;
        const double ratio = (ub(1e-10) - limit) / (ub(1e-12) - limit);
        CHECK(ratio == doctest::Approx(10.0).epsilon(0.01));
        CHECK(ub(1e-30) == doctest::Approx(limit).epsilon(1e-6));
    }

    TEST_CASE("sweep configuration guards") {
        SweepConfig cfg;
        cfg.epsilons = {1.0};
        cfg.slots_per_rep = 10'000;
        cfg.burn_in = 100;
        CHECK_THROWS_AS(cfg.validate(1.0), InvalidArgument);
        cfg.epsilons = {0.5};
        CHECK_NOTHROW(cfg.validate(1.0));
        cfg.burn_in.reset();
        CHECK(cfg.burn_in_for(0.02) == 1'000'000);
        CHECK(cfg.burn_in_for(0.001) == 20'000'000);
        CHECK_THROWS_AS(cfg.validate(1.0), InvalidArgument);
    }

    TEST_CASE("small sweep end to end") {
        const auto sys = two_server(0.5);
        SweepConfig cfg;
        cfg.epsilons = {0.4, 0.2, 0.1};
        cfg.replications = 3;
        cfg.slots_per_rep = 200'000;
        cfg.burn_in = 20'000;
        cfg.variance = 0.5;

        const auto jsq = PolicySpec::builtin(PolicyKind::jsq, sys.mu);
        const auto res = heavy_traffic_sweep(sys, jsq, f_analytic(jsq, sys.mu), cfg);
        CHECK(res.strict_majorization);
        REQUIRE(res.rows.size() == 3);
        for (const auto& row : res.rows) {
            CHECK(row.lambda == doctest::Approx((1.0 - row.eps) / 2.0));
            REQUIRE(row.ub);
            CHECK(*row.ub >= row.lb);
            CHECK(row.eps_mean_q_per_server.mean >= row.lb - row.eps_mean_q_per_server.half_width);
            CHECK(row.fit);
        }
        const auto verdict = ssc_empirical_check(res);
        CHECK(verdict.applicable);
        CHECK(verdict.perp_ratio >= 1.0);

        auto two = res;
        two.rows.pop_back();
        CHECK_THROWS_AS(ssc_empirical_check(two), InvalidArgument);

        const auto wr = PolicySpec::builtin(PolicyKind::weighted_rand, sys.mu);
        const auto wres = heavy_traffic_sweep(sys, wr, f_analytic(wr, sys.mu), cfg);
        CHECK_FALSE(wres.strict_majorization);
        CHECK_FALSE(wres.rows[0].ub);
        CHECK_FALSE(ssc_empirical_check(wres).applicable);
        // random routing by rate is not delay optimal: it sits well above the limit
        const auto& w = wres.rows.back();
        const auto& j = res.rows.back();
        CHECK(w.eps_mean_q_per_server.mean - w.eps_mean_q_per_server.half_width >
              j.eps_mean_q_per_server.mean + j.eps_mean_q_per_server.half_width);
        CHECK(w.eps_mean_q_per_server.mean - w.eps_mean_q_per_server.half_width > res.sandwich_limit);

        auto tight = cfg;
        tight.queue_limit = 5;
        try {
            (void)heavy_traffic_sweep(sys, jsq, f_analytic(jsq, sys.mu), tight);
            FAIL("expected an overflow");
        } catch (const QueueOverflow& e) {
            CHECK(std::string(e.what()).find("eps = ") != std::string::npos);
        }
    }

    TEST_CASE("distribution fit needs enough samples") {
        SimStats s;
        const auto sys = two_server(0.5);
        CHECK_THROWS_AS(distribution_fit(s, sys, std::vector<double>{1, 1}, 0.1), InvalidArgument);
    }
}
