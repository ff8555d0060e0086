#include "hetlb_tools/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hetlb/config.hpp"
#include "hetlb/error.hpp"
#include "hetlb/fvector.hpp"
#include "hetlb/sim.hpp"
#include "hetlb/stability.hpp"
#include "report.hpp"

namespace hetlb::tools {

namespace fs = std::filesystem;

namespace {

// Verdict thresholds for the heavy-traffic checks.
constexpr double kSandwichRelTol = 0.15;
constexpr double kFitMeanRelTol = 0.10;
constexpr double kFitCv2Low = 0.8;
constexpr double kFitCv2High = 1.2;
constexpr double kFitKsMax = 0.05;
constexpr double kFitShareTol = 0.05;

struct Context {
    ExperimentConfig cfg;
    Manifest manifest;
    fs::path config_dir;
    const CommandOptions& options;
    CommandResult& result;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_output(Context& ctx, const std::string& name, const std::string& body, std::string_view comment) {
    const fs::path dir(ctx.options.out_dir);
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    if (!comment.empty()) out << ctx.manifest.header(comment);
    out << body;
    ctx.result.files.push_back(path.string());
}

void write_json(Context& ctx, const std::string& name, json body) {
    json doc;
    doc["manifest"] = {{"tool", "hetlb"},
                       {"version", ctx.manifest.tool_version},
                       {"subcommand", ctx.manifest.subcommand},
                       {"config", ctx.manifest.config_path},
                       {"config_sha1", ctx.manifest.config_sha1},
                       {"seed", ctx.manifest.seed},
                       {"out", ctx.manifest.out_dir}};
    for (auto& [k, v] : body.items()) doc[k] = v;
    doc["failures"] = ctx.result.failures;
    write_output(ctx, name, doc.dump(2) + "\n", "");
}

FTable obtain_table(Context& ctx) {
    const auto& cfg = ctx.cfg;
    if (ctx.options.ftable) {
        std::ifstream in(*ctx.options.ftable);
        if (!in) throw InvalidArgument("cannot read f-table " + *ctx.options.ftable);
        auto table = read_ftable(in);
        if (table.n() != cfg.system.n()) throw InvalidArgument("f-table size differs from the server count");
        return table;
    }
    if (cfg.policy.kind == PolicyKind::custom) {
        fs::path path(cfg.policy.ftable_path);
        if (path.is_relative()) path = ctx.config_dir / path;
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot read f-table " + path.string());
        auto table = read_ftable(in);
        if (table.n() != cfg.system.n()) throw InvalidArgument("f-table size differs from the server count");
        return table;
    }
    if (ctx.options.monte_carlo) {
        return build_ftable(cfg.policy, cfg.system.mu, FMode::monte_carlo, *ctx.options.monte_carlo, cfg.system.seed);
    }
    return build_ftable(cfg.policy, cfg.system.mu, cfg.fvector.mode, cfg.fvector.cycles, cfg.system.seed);
}

std::string system_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "servers: " << cfg.system.n() << " (sorted by rate)\nmu:";
    for (double m : cfg.system.mu) os << ' ' << num(m);
    os << "  [jobs/slot]\nsigma^2:";
    for (double s : cfg.system.sigma_sq_service) os << ' ' << num(s);
    os << "\ns_max: " << cfg.system.s_max << " [jobs/slot]\n";
    if (cfg.has_arrival) {
        os << "arrivals: " << to_string(cfg.system.arrival.kind) << ", mean " << num(cfg.system.arrival.mean())
           << ", variance " << num(cfg.system.arrival.variance()) << ", bound " << cfg.system.arrival.a_max_total
           << " [jobs/slot]\n";
    }
    os << "policy: " << cfg.policy.describe() << '\n';
    return os.str();
}

// fvector -------------------------------------------------------------------

void cmd_fvector(Context& ctx, std::ostream& log) {
    const FTable table = obtain_table(ctx);
    table.validate();
    std::ostringstream ft;
    write_ftable(ft, table);
    write_output(ctx, "ftable.txt", ft.str(), "# ");

    std::ostringstream text;
    text << system_text(ctx.cfg) << "provenance: " << to_string(table.provenance())
         << "\nsymmetric: " << (table.is_symmetric() ? "yes" : "no") << "\nrows: "
         << (table.enumerable() ? factorial(table.n()) : 1) << "\nmax f: " << num(table.max_f())
         << "\nmax tau^2: " << num(table.max_tau_sq()) << '\n';
    if (table.provenance() == FProvenance::monte_carlo) text << "cycles per row: " << table.cycles() << '\n';
    write_output(ctx, "fvector.txt", text.str(), "# ");

    json rows = json::array();
    if (table.enumerable()) {
        for (std::uint64_t r = 0; r < factorial(table.n()); ++r) {
            const auto& e = table.entry_by_rank(r);
            rows.push_back({{"eta", Permutation::unrank(r, table.n()).to_string()},
                            {"f", e.f},
                            {"tau2", e.tau_sq},
                            {"se", e.std_err}});
        }
    } else {
        const auto& e = table.stored().front();
        rows.push_back({{"eta", "*"}, {"f", e.f}, {"tau2", e.tau_sq}, {"se", e.std_err}});
    }
    write_json(ctx, "fvector.json",
               {{"provenance", to_string(table.provenance())},
                {"symmetric", table.is_symmetric()},
                {"cycles", table.cycles()},
                {"rows", rows}});
    log << text.str();
}

// stability -----------------------------------------------------------------

void cmd_stability(Context& ctx, std::ostream& log) {
    const FTable table = obtain_table(ctx);
    table.validate();
    const auto& mu = ctx.cfg.system.mu;
    const StabilityReport report = analyze_stability(table, mu);
    const MinimizerReport minimizers = minimizer_diagnostics(table, mu, report);
    if (minimizers.violations > 0) {
        ctx.result.failures.push_back("minimizer structure: " + std::to_string(minimizers.violations) + " violations");
    }
    std::ostringstream text;
    text << system_text(ctx.cfg) << "f-table: " << to_string(table.provenance()) << '\n'
         << stability_text(report, minimizers);
    json body{{"stability", to_json(report)}, {"minimizer_structure", to_json(minimizers)}};
    if (ctx.cfg.has_arrival) {
        const double load = ctx.cfg.system.arrival.mean();
        const LoadVerdict v = report.classify(load);
        text << "load n*lambda = " << num(load) << ": " << to_string(v) << '\n';
        body["load"] = {{"n_lambda", load}, {"verdict", to_string(v)}};
        if (v != LoadVerdict::positive_recurrent) {
            ctx.result.failures.push_back("load " + num(load) + " is " + to_string(v) + " (h* = " + num(report.h_star) + ")");
        }
    }
    write_output(ctx, "stability.txt", text.str(), "# ");
    write_json(ctx, "stability.json", body);
    log << text.str();
}

// simulate ------------------------------------------------------------------

void cmd_simulate(Context& ctx, std::ostream& log) {
    auto& cfg = ctx.cfg;
    if (!cfg.has_arrival) throw InvalidArgument("simulate needs a [system.arrival] section");
    RunOptions run;
    run.slots = ctx.options.slots.value_or(cfg.run.slots);
    run.burn_in = cfg.run.burn_in;
    run.replications = ctx.options.replications.value_or(cfg.run.replications);
    run.queue_limit = cfg.run.queue_limit;
    if (run.burn_in >= run.slots) throw InvalidArgument("burn_in must be below slots");

    std::ostringstream text;
    text << system_text(cfg);
    json body;
    if (cfg.policy.is_builtin()) {
        try {
            const auto table = build_ftable(cfg.policy, cfg.system.mu, FMode::analytic, 0, 0);
            const auto report = stability_region(table, cfg.system.mu);
            if (report.classify(cfg.system.arrival.mean()) != LoadVerdict::positive_recurrent) {
                text << "warning: load " << num(cfg.system.arrival.mean()) << " is not below h* = "
                     << num(report.h_star) << "; steady-state estimates are not meaningful\n";
            }
            body["h_star"] = report.h_star;
        } catch (const CapacityError&) {
            text << "note: no analytic f-table at this size; load not checked\n";
        }
    }
    const SimStats stats = run_steady_state(cfg.system, cfg.policy, run);
    text << "slots per replication: " << run.slots << " (burn-in " << run.burn_in << "), replications: "
         << run.replications << ", samples: " << stats.samples << '\n'
         << "mean total: " << num(stats.mean_total.mean) << " +- " << num(stats.mean_total.half_width) << '\n'
         << "E||O_perp||^2: " << num(stats.o_perp_sq_mean.mean) << " +- " << num(stats.o_perp_sq_mean.half_width)
         << "\nE||O||^2: " << num(stats.o_sq_mean.mean) << " +- " << num(stats.o_sq_mean.half_width) << '\n';

    std::ostringstream csv;
    csv << "server,original_index,mu,mean_q,half_width,share\n";
    for (std::size_t l = 0; l < cfg.system.n(); ++l) {
        csv << l + 1 << ',' << cfg.system.original_index[l] + 1 << ',' << num(cfg.system.mu[l]) << ','
            << num(stats.mean_q[l].mean) << ',' << num(stats.mean_q[l].half_width) << ','
            << num(stats.per_queue_share[l]) << '\n';
        text << "queue " << l + 1 << ": " << num(stats.mean_q[l].mean) << " +- " << num(stats.mean_q[l].half_width)
             << '\n';
    }
    body["run"] = {{"slots", run.slots}, {"burn_in", run.burn_in}, {"replications", run.replications}};
    body["stats"] = to_json(stats);
    write_output(ctx, "simulate.csv", csv.str(), "# ");
    write_output(ctx, "simulate.txt", text.str(), "# ");
    write_json(ctx, "simulate.json", body);
    log << text.str();
}

// sweep / distcheck -----------------------------------------------------------

SweepConfig sweep_config(Context& ctx) {
    if (!ctx.cfg.sweep) throw InvalidArgument("this subcommand needs a [sweep] section");
    SweepConfig s = *ctx.cfg.sweep;
    if (ctx.options.replications) s.replications = *ctx.options.replications;
    if (ctx.options.slots) s.slots_per_rep = *ctx.options.slots;
    s.validate(ctx.cfg.system.total_service_rate());
    return s;
}

const SweepRow& smallest_eps(const SweepResult& r) {
    return *std::min_element(r.rows.begin(), r.rows.end(), [](const auto& a, const auto& b) { return a.eps < b.eps; });
}

void fit_verdicts(const SweepRow& row, std::vector<std::string>& failures) {
    if (!row.fit) {
        failures.push_back("distribution fit: fewer than 1000 samples at eps = " + num(row.eps));
        return;
    }
    const auto& f = *row.fit;
    const std::string at = " at eps = " + num(row.eps);
    if (f.mean_rel_error > kFitMeanRelTol) failures.push_back("fit mean rel. error " + num(f.mean_rel_error) + at);
    if (f.cv2 < kFitCv2Low || f.cv2 > kFitCv2High) failures.push_back("fit CV^2 " + num(f.cv2) + at);
    if (f.ks > kFitKsMax) failures.push_back("fit KS distance " + num(f.ks) + at);
    if (f.max_share_error > kFitShareTol) failures.push_back("fit share error " + num(f.max_share_error) + at);
}

std::string fit_text(const SweepRow& row) {
    if (!row.fit) return "fit: not enough samples\n";
    const auto& f = *row.fit;
    std::ostringstream os;
    os << "eps = " << num(row.eps) << ": E[eps||Q||] = " << num(f.sample_mean) << " (target " << num(f.target_mean)
       << ", rel. error " << num(f.mean_rel_error) << "), CV^2 = " << num(f.cv2) << ", KS = " << num(f.ks)
       << ", shares";
    for (std::size_t l = 0; l < f.shares.size(); ++l) os << ' ' << num(f.shares[l]) << '/' << num(f.target_shares[l]);
    os << '\n';
    return os.str();
}

void cmd_sweep(Context& ctx, std::ostream& log, bool distcheck) {
    const SweepConfig sweep = sweep_config(ctx);
    const FTable table = obtain_table(ctx);
    const std::size_t n = ctx.cfg.system.n();
    const SweepResult res = heavy_traffic_sweep(ctx.cfg.system, ctx.cfg.policy, table, sweep);
    auto& failures = ctx.result.failures;
    const SweepRow& tight = smallest_eps(res);

    std::ostringstream text;
    text << system_text(ctx.cfg) << "arrival variance (pinned): " << num(sweep.variance)
         << "\nreplications: " << sweep.replications << ", slots per replication: " << sweep.slots_per_rep << '\n'
         << "strict majorization: " << (res.strict_majorization ? "holds" : "FAILS (policy labeled non-optimal)")
         << "\nsandwich limit (n sigma_lambda^2 + sum sigma_l^2)/(2n) = " << num(res.sandwich_limit) << '\n';

    json body;
    body["strict_majorization"] = res.strict_majorization;
    body["sandwich_limit"] = res.sandwich_limit;
    json rows = json::array();
    for (const auto& row : res.rows) {
        json r{{"eps", row.eps},
               {"lambda", row.lambda},
               {"burn_in", row.burn_in},
               {"eps_mean_q_per_server", to_json(row.eps_mean_q_per_server)},
               {"lb", row.lb},
               {"ub", row.ub ? json(*row.ub) : json()},
               {"stats", to_json(row.stats)},
               {"constants", row.constants ? to_json(*row.constants) : json()},
               {"fit", row.fit ? to_json(*row.fit) : json()}};
        rows.push_back(r);
    }
    body["rows"] = rows;

    if (!distcheck) {
        for (const auto& row : res.rows) {
            if (row.eps_mean_q_per_server.mean + row.eps_mean_q_per_server.half_width < row.lb) {
                failures.push_back("below the lower bound at eps = " + num(row.eps));
            }
        }
        text << "\neps  eps*E[mean Q] +- hw  lb  ub  E||O_perp||^2  E||O||^2\n";
        for (const auto& row : res.rows) {
            text << num(row.eps) << "  " << num(row.eps_mean_q_per_server.mean) << " +- "
                 << num(row.eps_mean_q_per_server.half_width) << "  " << num(row.lb) << "  "
                 << (row.ub ? num(*row.ub) : "n/a") << "  " << num(row.stats.o_perp_sq_mean.mean) << "  "
                 << num(row.stats.o_sq_mean.mean) << '\n';
        }
        if (res.strict_majorization) {
            const double rel = std::abs(tight.eps_mean_q_per_server.mean - res.sandwich_limit) / res.sandwich_limit;
            text << "sandwich: rel. distance " << num(rel) << " at eps = " << num(tight.eps) << '\n';
            body["sandwich_rel_distance"] = rel;
            if (rel > kSandwichRelTol) failures.push_back("sandwich rel. distance " + num(rel) + " > 0.15");
        }
        const auto [lo, hi] = std::minmax_element(res.rows.begin(), res.rows.end(),
                                                  [](const auto& a, const auto& b) { return a.eps < b.eps; });
        if (res.rows.size() >= 3 && hi->eps >= 4.0 * lo->eps) {
            const SSCVerdict v = ssc_empirical_check(res);
            body["collapse"] = {{"applicable", v.applicable}, {"pass", v.pass},
                                {"perp_ratio", v.perp_ratio}, {"o_sq_growth", v.o_sq_growth},
                                {"required_growth", v.required_growth}, {"below_n_perp", v.below_n_perp},
                                {"reason", v.reason}};
            if (v.applicable) {
                text << "collapse: perpendicular ratio " << num(v.perp_ratio) << ", growth " << num(v.o_sq_growth)
                     << " (need " << num(v.required_growth) << "), below N_perp^2: " << (v.below_n_perp ? "yes" : "no")
                     << " -> " << (v.pass ? "PASS" : "FAIL") << '\n';
                if (!v.pass) failures.push_back("collapse: " + v.reason);
            } else {
                text << "collapse: not applicable (" << v.reason << ")\n";
            }
        }
    }
    for (const auto& row : res.rows) text << fit_text(row);
    if (res.strict_majorization) fit_verdicts(tight, failures);

    std::ostringstream csv;
    if (!distcheck) {
        csv << "eps,lambda,mean_total,mean_total_hw,eps_mean_q_per_server,eps_mean_q_hw,lb,ub,o_perp_sq,o_perp_sq_hw,"
               "o_sq,o_sq_hw,ks,cv2";
        for (std::size_t l = 0; l < n; ++l) csv << ",share_" << l + 1;
        csv << ",samples,measured_slots,burn_in\n";
        for (const auto& row : res.rows) {
            const auto& s = row.stats;
            csv << num(row.eps) << ',' << num(row.lambda) << ',' << num(s.mean_total.mean) << ','
                << num(s.mean_total.half_width) << ',' << num(row.eps_mean_q_per_server.mean) << ','
                << num(row.eps_mean_q_per_server.half_width) << ',' << num(row.lb) << ','
                << (row.ub ? num(*row.ub) : "") << ',' << num(s.o_perp_sq_mean.mean) << ','
                << num(s.o_perp_sq_mean.half_width) << ',' << num(s.o_sq_mean.mean) << ','
                << num(s.o_sq_mean.half_width) << ',' << (row.fit ? num(row.fit->ks) : "") << ','
                << (row.fit ? num(row.fit->cv2) : "");
            for (double share : s.per_queue_share) csv << ',' << num(share);
            csv << ',' << s.samples << ',' << s.measured_slots << ',' << row.burn_in << '\n';
        }
        write_output(ctx, "sweep.csv", csv.str(), "# ");
    } else {
        // empirical and limiting CDFs of eps ||Q||_1 at the smallest eps
        const auto counts = tight.stats.total_hist.counts();
        const double total = static_cast<double>(tight.stats.total_hist.total());
        const double mean = limit_total_mean(ctx.cfg.system.with_arrival(
            moment_matched_arrivals(ctx.cfg.system.total_service_rate() - tight.eps, sweep.variance,
                                    std::numeric_limits<std::int64_t>::max() / 4)));
        csv << "x,empirical_cdf,exponential_cdf\n";
        double acc = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (counts[k] == 0) continue;
            acc += static_cast<double>(counts[k]);
            const double x = tight.eps * static_cast<double>(k);
            csv << num(x) << ',' << num(acc / total) << ',' << num(-std::expm1(-x / mean)) << '\n';
        }
        write_output(ctx, "distcheck.csv", csv.str(), "# ");
    }
    if (ctx.options.dump_samples) {
        for (std::size_t i = 0; i < res.rows.size(); ++i) {
            std::ostringstream h;
            h << "total,count\n";
            const auto counts = res.rows[i].stats.total_hist.counts();
            for (std::size_t k = 0; k < counts.size(); ++k) {
                if (counts[k] != 0) h << k << ',' << counts[k] << '\n';
            }
            write_output(ctx, (distcheck ? "distcheck" : "sweep") + std::string("_samples_") + std::to_string(i + 1) + ".csv",
                         h.str(), "# ");
        }
    }
    const std::string stem = distcheck ? "distcheck" : "sweep";
    write_output(ctx, stem + ".txt", text.str(), "# ");
    write_json(ctx, stem + ".json", body);
    log << text.str();
}

}  // namespace

CommandResult run_command(const std::string& subcommand, const CommandOptions& options, std::ostream& log) {
    CommandResult result;
    static const std::vector<std::string> known{"fvector", "stability", "simulate", "sweep", "distcheck"};
    if (std::find(known.begin(), known.end(), subcommand) == known.end()) {
        result.exit_code = kExitBadInput;
        result.failures.push_back("unknown subcommand " + subcommand);
        return result;
    }
    try {
        const std::string bytes = read_file(options.config_path);
        std::istringstream in(bytes);
        ExperimentConfig cfg;
        try {
            cfg = load_experiment(in);
        } catch (const InvalidArgument& err) {
            throw InvalidArgument(options.config_path + ": " + err.what());
        }
        if (options.seed) cfg.system.seed = *options.seed;
        Manifest manifest{subcommand, options.config_path, git_blob_sha1(bytes), cfg.system.seed, options.out_dir,
                          tool_version()};
        Context ctx{std::move(cfg), std::move(manifest), fs::path(options.config_path).parent_path(), options, result};
        if (subcommand == "fvector") cmd_fvector(ctx, log);
        else if (subcommand == "stability") cmd_stability(ctx, log);
        else if (subcommand == "simulate") cmd_simulate(ctx, log);
        else cmd_sweep(ctx, log, subcommand == "distcheck");
        result.exit_code = result.failures.empty() ? 0 : kExitVerdictFailed;
    } catch (const QueueOverflow& err) {
        result.exit_code = kExitUnstable;
        result.failures.push_back(std::string("overflow: ") + err.what());
    } catch (const std::invalid_argument& err) {
        result.exit_code = kExitBadInput;
        result.failures.push_back(err.what());
    } catch (const std::domain_error& err) {
        result.exit_code = kExitBadInput;
        result.failures.push_back(err.what());
    } catch (const std::length_error& err) {
        result.exit_code = kExitBadInput;
        result.failures.push_back(err.what());
    } catch (const std::logic_error& err) {
        result.exit_code = kExitBadInput;
        result.failures.push_back(err.what());
    }
    return result;
}

}  // namespace hetlb::tools
