// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "hetlb/config.hpp"
#include "hetlb/error.hpp"
#include "hetlb/sim.hpp"
#include "hetlb/stability.hpp"
#include "hetlb_tools/commands.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace hetlb;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ExperimentConfig load_repo_config(const std::string& name) {
    std::ifstream in(std::string(HETLB_SOURCE_DIR) + "/configs/" + name);
    if (!in) throw std::runtime_error("missing config " + name);
    return load_experiment(in);
}

// --- 1 --------------------------------------------------------------------
Outcome ftable_agreement() {
    Outcome out;
    const std::vector<double> mu{0.5, 1.0, 1.5, 2.0};
    struct Case {
        PolicyKind kind;
        std::uint32_t d;
    };
    const Case cases[] = {{PolicyKind::rand, 0},  {PolicyKind::weighted_rand, 0}, {PolicyKind::round_robin, 0},
                          {PolicyKind::jsq, 0},   {PolicyKind::jsed, 0},          {PolicyKind::pod, 1},
                          {PolicyKind::pod, 2},   {PolicyKind::pod, 3}};
    double worst = 0.0;
    std::uint64_t seed = 1000;
    for (const auto& c : cases) {
        const auto spec = PolicySpec::builtin(c.kind, mu, c.d);
        const auto mc = build_ftable(spec, mu, FMode::monte_carlo, 100'000, ++seed);
        const std::string name = spec.describe();
        for (const auto& eta : all_permutations(4)) {
            const auto expect = oracle::fractions(c.kind, mu, {eta.order().begin(), eta.order().end()},
                                                  static_cast<int>(c.d));
            const auto& e = mc.entry(eta);
            for (std::size_t l = 0; l < 4; ++l) {
                const double dev = std::abs(e.f[l] - expect[l]);
                if (e.std_err[l] > 0.0) worst = std::max(worst, dev / e.std_err[l]);
                if (dev > 4.0 * e.std_err[l] + 1e-12) {
                    out.require(false, name + " eta " + eta.to_string() + " position " + std::to_string(l + 1));
                }
                if ((c.kind == PolicyKind::round_robin || c.kind == PolicyKind::jsq) && e.tau_sq[l] != 0.0) {
                    out.require(false, name + " has nonzero tau^2");
                }
            }
        }
    }
    out.detail = (out.pass ? "" : out.detail + "; ") + "max deviation " + fmt("%.2f", worst) + " se over 8 policies x 24 orders";
    return out;
}

// --- 2 --------------------------------------------------------------------
Outcome analyzer_vs_brute_force() {
    Outcome out;
    std::mt19937_64 gen(777);
    std::size_t ties = 0, applicable = 0, violations = 0;
    for (int c = 0; c < 1000; ++c) {
        const std::size_t n = 2 + static_cast<std::size_t>(c % 3);
        const int mode = c % 4;  // grids create exact ties
        const auto mu = oracle::random_rates(n, gen, mode < 2);
        const auto table = oracle::random_table(n, gen, mode == 0 ? 4 : mode == 1 ? 6 : 0);
        const auto report = analyze_stability(table, mu);
        const auto ref = oracle::region(table, mu);
        std::set<std::pair<oracle::Order, std::size_t>> got;
        for (const auto& p : report.minimizers) got.insert({{p.eta.order().begin(), p.eta.order().end()}, p.m});
        const bool same_h = report.h_star == ref.h_star ||
                            std::abs(report.h_star - ref.h_star) <= 1e-12 * std::abs(ref.h_star);
        if (!same_h || got != ref.minimizers) out.require(false, "case " + std::to_string(c) + " differs");
        if (ref.minimizers.size() > 1) ++ties;
        const auto diag = minimizer_diagnostics(table, mu, report);
        double total = 0.0;
        for (double m : mu) total += m;
        if (ref.h_star < total * (1.0 - kStabilityTolerance)) {
            if (!diag.applicable) out.require(false, "case " + std::to_string(c) + " diagnostics skipped");
            ++applicable;
            violations += diag.violations;
        }
    }
    out.require(violations == 0, std::to_string(violations) + " diagnostic violations");
    out.detail = (out.pass ? "" : out.detail + "; ") + "1000 tables, " + std::to_string(ties) + " with tied minimizers, " +
                 std::to_string(applicable) + " with h* < sum(mu), " + std::to_string(violations) + " violations";
    return out;
}

// --- 3 --------------------------------------------------------------------
Outcome stability_vs_simulation() {
    Outcome out;
    auto cfg = load_repo_config("rand12_stability.toml");
    const auto& mu = cfg.system.mu;
    const auto table = f_analytic(cfg.policy, mu);
    const double h = stability_region(table, mu).h_star;
    out.require(std::abs(h - 2.0) < 1e-12, "h* is " + fmt("%g", h));

    RunOptions run;
    run.slots = cfg.run.slots;
    run.burn_in = cfg.run.burn_in;
    run.replications = cfg.run.replications;
    run.queue_limit = 10'000'000;
    std::ostringstream d;
    try {
        const auto below = run_steady_state(cfg.system, cfg.policy, run);
        const double rel = below.mean_total.half_width / below.mean_total.mean;
        out.require(rel < 0.05, "rand at 1.9 CI " + fmt("%.3f", rel));
        d << "rand n*lambda=1.9: E||Q||=" << fmt("%.3f", below.mean_total.mean) << " rel CI " << fmt("%.3f", rel)
          << " (" << run.slots * run.replications << " slots)";
    } catch (const QueueOverflow&) {
        out.require(false, "rand at 1.9 overflowed");
    }

    const auto over = cfg.system.with_arrival(moment_matched_arrivals(2.2, 1.0, 16));
    const std::vector<std::size_t> slow{0};
    const auto trend = transience_probe(over, cfg.policy, 10'000'000, slow);
    out.require(trend.slope > 0.0 && trend.t_stat > 5.0, "trend t = " + fmt("%.2f", trend.t_stat));
    d << "; rand n*lambda=2.2: slow-queue slope " << fmt("%.4f", trend.slope) << " t=" << fmt("%.1f", trend.t_stat);

    const auto jsq = PolicySpec::builtin(PolicyKind::jsq, mu);
    const auto near = cfg.system.with_arrival(moment_matched_arrivals(2.85, 1.0, 16));
    out.require(stability_region(f_analytic(jsq, mu), mu).h_star == 3.0, "jsq h* != 3");
    try {
        const auto s = run_steady_state(near, jsq, run);
        const double rel = s.mean_total.half_width / s.mean_total.mean;
        out.require(rel < 0.05, "jsq at 2.85 CI " + fmt("%.3f", rel));
        d << "; jsq n*lambda=2.85: E||Q||=" << fmt("%.3f", s.mean_total.mean) << " rel CI " << fmt("%.3f", rel);
    } catch (const QueueOverflow&) {
        out.require(false, "jsq at 2.85 overflowed");
    }
    out.detail = (out.pass ? "" : out.detail + "; ") + d.str();
    return out;
}

// --- 4, 5, 6 share one sweep per policy -------------------------------------
struct SweepRun {
    std::string name;
    SweepResult result;
    std::vector<double> gamma;
    double seconds = 0.0;
};

SweepRun sweep_from(const std::string& config) {
    auto cfg = load_repo_config(config);
    const auto start = std::chrono::steady_clock::now();
    SweepRun r;
    r.name = to_string(cfg.policy.kind);
    r.gamma = cfg.policy.gamma;
    r.result = heavy_traffic_sweep(cfg.system, cfg.policy, f_analytic(cfg.policy, cfg.system.mu), *cfg.sweep);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

const SweepRow& smallest_eps(const SweepResult& r) {
    return *std::min_element(r.rows.begin(), r.rows.end(),
                             [](const SweepRow& a, const SweepRow& b) { return a.eps < b.eps; });
}

Outcome delay_sandwich(const std::vector<SweepRun>& runs) {
    Outcome out;
    std::ostringstream d;
    for (const auto& run : runs) {
        const auto& row = smallest_eps(run.result);
        const double limit = run.result.sandwich_limit;
        const auto& est = row.eps_mean_q_per_server;
        const double rel = std::abs(est.mean - limit) / limit;
        out.require(row.stats.measured_slots >= 100'000'000, run.name + " has too few slots");
        out.require(rel <= 0.15, run.name + " off the limit by " + fmt("%.3f", rel));
        out.require(est.mean >= row.lb - est.half_width, run.name + " below the lower bound");
        d << run.name << " eps=" << row.eps << ": " << fmt("%.4f", est.mean) << " +- " << fmt("%.4f", est.half_width)
          << " vs limit " << fmt("%.4f", limit) << " (rel " << fmt("%.3f", rel) << "), lb " << fmt("%.4f", row.lb)
          << ", " << row.stats.measured_slots << " measured slots, sweep " << fmt("%.0f", run.seconds) << " s; ";
    }
    out.detail = (out.pass ? "" : out.detail + "; ") + d.str();
    return out;
}

Outcome collapse(const std::vector<SweepRun>& runs) {
    Outcome out;
    std::ostringstream d;
    for (const auto& run : runs) {
        const auto v = ssc_empirical_check(run.result);
        out.require(v.applicable && v.pass, run.name + ": " + v.reason);
        d << run.name << ": perp ratio " << fmt("%.2f", v.perp_ratio) << ", growth " << fmt("%.1f", v.o_sq_growth)
          << " (need " << fmt("%.1f", v.required_growth) << "), below N_perp^2 " << (v.below_n_perp ? "yes" : "no")
          << "; ";
    }
    out.detail = (out.pass ? "" : out.detail + "; ") + d.str();
    return out;
}

Outcome limiting_law(const std::vector<SweepRun>& runs, const std::map<std::string, std::vector<double>>& shares) {
    Outcome out;
    std::ostringstream d;
    for (const auto& run : runs) {
        const auto& row = smallest_eps(run.result);
        if (!row.fit) {
            out.require(false, run.name + " has no fit");
            continue;
        }
        const auto& f = *row.fit;
        out.require(f.mean_rel_error <= 0.10, run.name + " mean error " + fmt("%.3f", f.mean_rel_error));
        out.require(f.cv2 >= 0.8 && f.cv2 <= 1.2, run.name + " CV^2 " + fmt("%.3f", f.cv2));
        out.require(f.ks <= 0.05, run.name + " KS " + fmt("%.4f", f.ks));
        const auto& want = shares.at(run.name);
        for (std::size_t l = 0; l < want.size(); ++l) {
            out.require(std::abs(f.shares[l] - want[l]) <= 0.05, run.name + " share " + std::to_string(l + 1));
        }
        d << run.name << ": mean err " << fmt("%.3f", f.mean_rel_error) << ", CV^2 " << fmt("%.3f", f.cv2) << ", KS "
          << fmt("%.4f", f.ks) << ", shares (" << fmt("%.3f", f.shares[0]) << ", " << fmt("%.3f", f.shares[1])
          << "); ";
    }
    out.detail = (out.pass ? "" : out.detail + "; ") + d.str();
    return out;
}

// --- 7 --------------------------------------------------------------------
Outcome single_queue() {
    Outcome out;
    std::ostringstream d;
    const double q = 0.5;
    std::uint32_t extra = 0;
    for (double load : {0.5, 0.8, 0.95}) {
        const double p = load * q;
        const auto sys = SystemConfig::bernoulli_batch({q}, 1, ArrivalLaw::two_point(0, 1, p), 31337);
        RunOptions run;
        run.slots = 10'000'000;
        run.burn_in = 100'000;
        run.replications = 4;
        run.stream_extra = extra++;
        const auto s = run_steady_state(sys, PolicySpec::builtin(PolicyKind::jsq, sys.mu), run);
        const double exact = oracle::single_queue_mean(p, q);
        const double dev = std::abs(s.mean_total.mean - exact);
        out.require(dev <= s.mean_total.half_width, "load " + fmt("%.2f", load));
        d << "load " << load << ": " << fmt("%.4f", s.mean_total.mean) << " +- " << fmt("%.4f", s.mean_total.half_width)
          << " vs " << fmt("%.4f", exact) << "; ";
    }
    out.detail = (out.pass ? "" : out.detail + "; ") + d.str();
    return out;
}

// --- 8 --------------------------------------------------------------------
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        files[e.path().filename().string()] = os.str();
    }
    return files;
}

Outcome determinism() {
    Outcome out;
    const fs::path root = fs::temp_directory_path() / "hetlb_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path config = root / "config.toml";
    std::ofstream(config) << R"([system]
mu = [0.4, 0.6]
s_max = 1
seed = 99
[system.arrival]
kind = "moments"
mean = 0.9
variance = 1.0
[policy]
kind = "jsed"
[run]
slots = 400_000
burn_in = 10_000
replications = 4
[sweep]
epsilons = [0.4, 0.2, 0.1]
replications = 3
slots_per_rep = 150_000
burn_in = 10_000
variance = 1.0
)";
    std::size_t compared = 0;
    for (const std::string sub : {"fvector", "stability", "simulate", "sweep", "distcheck"}) {
        const fs::path dir = root / sub;
        tools::CommandOptions o;
        o.config_path = config.string();
        o.out_dir = dir.string();
        o.dump_samples = sub == "distcheck";
        if (sub == "fvector") o.monte_carlo = 5000;
        std::ostringstream log;
        ::setenv("HETLB_THREADS", "1", 1);
        const auto first = tools::run_command(sub, o, log);
        const auto a = snapshot(dir);
        ::setenv("HETLB_THREADS", "4", 1);
        const auto second = tools::run_command(sub, o, log);
        const auto b = snapshot(dir);
        out.require(first.exit_code != tools::kExitBadInput && second.exit_code == first.exit_code,
                    sub + " exit codes " + std::to_string(first.exit_code) + "/" + std::to_string(second.exit_code));
        out.require(!a.empty() && a == b, sub + " outputs differ");
        compared += a.size();
    }
    ::unsetenv("HETLB_THREADS");
    fs::remove_all(root);
    out.detail = (out.pass ? "" : out.detail + "; ") + std::to_string(compared) +
                 " files byte-identical across runs with 1 and 4 workers";
    return out;
}

int report(int id, const std::string& title, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s) [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    return o.pass ? 0 : 1;
}

}  // namespace

// With arguments, only the listed criterion numbers run.
int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    const auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };
    int failures = 0, ran = 0;
    const auto check = [&](int id, const std::string& title, const std::function<Outcome()>& body) {
        if (!wanted(id)) return;
        ++ran;
        failures += report(id, title, body);
    };
    check(1, "f-table Monte-Carlo vs closed form", ftable_agreement);
    check(2, "stability analyzer vs exhaustive search", analyzer_vs_brute_force);
    check(3, "stability region vs simulation", stability_vs_simulation);

    std::vector<SweepRun> runs;
    std::string sweep_error;
    if (wanted(4) || wanted(5) || wanted(6)) {
        try {
            runs.push_back(sweep_from("jsq2_sweep.toml"));
            runs.push_back(sweep_from("jsed2_sweep.toml"));
        } catch (const std::exception& e) {
            sweep_error = e.what();
        }
    }
    const auto guarded = [&](auto fn) {
        return [&, fn]() -> Outcome {
            if (!sweep_error.empty()) return Outcome{false, "sweep failed: " + sweep_error};
            return fn();
        };
    };
    check(4, "heavy-traffic delay sandwich", guarded([&] { return delay_sandwich(runs); }));
    check(5, "state-space collapse", guarded([&] { return collapse(runs); }));
    const std::map<std::string, std::vector<double>> shares{{"jsq", {0.5, 0.5}}, {"jsed", {0.4, 0.6}}};
    check(6, "exponential limit and shares", guarded([&] { return limiting_law(runs, shares); }));
    check(7, "single queue vs linear-solve oracle", single_queue);
    check(8, "byte-identical reruns", determinism);
    std::printf("%d of %d criteria failed\n", failures, ran);
    return failures == 0 ? 0 : 1;
}
