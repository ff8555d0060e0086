#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace hetlb::tools {

std::string num(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

json to_json(const Estimate& e) { return {{"mean", e.mean}, {"half_width", e.half_width}, {"batches", e.batches}}; }

json to_json(const PrefixPair& p) { return {{"eta", p.eta.to_string()}, {"m", p.m}}; }

json to_json(const PrefixWitness& w) {
    return {{"eta", w.eta.to_string()}, {"m", w.m}, {"prefix_f", w.prefix_f}, {"prefix_share", w.prefix_share}};
}

json to_json(const StabilityReport& r) {
    json j;
    j["h_star"] = r.h_star;
    j["total_rate"] = r.total_rate;
    j["minimizers_complete"] = r.minimizers_complete;
    j["minimizers"] = json::array();
    for (const auto& p : r.minimizers) j["minimizers"].push_back(to_json(p));
    j["throughput_optimal"] = {{"verdict", r.throughput.optimal},
                               {"witness", r.throughput.witness ? to_json(*r.throughput.witness) : json()}};
    j["strict_majorization"] = {{"verdict", r.majorization.strict},
                                {"witness", r.majorization.witness ? to_json(*r.majorization.witness) : json()}};
    if (r.transience) {
        const auto& t = *r.transience;
        j["transience"] = {{"applicable", t.applicable},
                           {"vacuous", t.vacuous},
                           {"transient_above", t.transient_above ? json(*t.transient_above) : json()},
                           {"failing_minimizer", t.failing_minimizer ? to_json(*t.failing_minimizer) : json()}};
    } else {
        j["transience"] = {{"applicable", nullptr}, {"reason", "Monte-Carlo f-table"}};
    }
    return j;
}

json to_json(const MinimizerReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"eta", row.eta.to_string()},
                        {"m_star", row.m_star},
                        {"last_ratio", row.last_ratio},
                        {"h", row.h},
                        {"min_suffix_ratio", std::isinf(row.min_suffix_ratio) ? json("inf") : json(row.min_suffix_ratio)},
                        {"holds", row.holds}});
    }
    return {{"applicable", r.applicable}, {"violations", r.violations}, {"rows", rows}};
}

json to_json(const SimStats& s) {
    json mean_q = json::array();
    for (const auto& e : s.mean_q) mean_q.push_back(to_json(e));
    return {{"samples", s.samples},
            {"measured_slots", s.measured_slots},
            {"mean_q", mean_q},
            {"mean_total", to_json(s.mean_total)},
            {"o_perp_sq_mean", to_json(s.o_perp_sq_mean)},
            {"o_sq_mean", to_json(s.o_sq_mean)},
            {"per_queue_share", s.per_queue_share},
            {"nonempty_samples", s.nonempty_samples},
            {"max_pythagoras_residual", s.max_pythagoras_residual}};
}

json to_json(const SSCConstants& c) {
    return {{"delta_star", c.delta_star}, {"xi_star", c.xi_star}, {"delta", c.delta},   {"z_bound", c.z_bound},
            {"k1", c.k1},                 {"k2", c.k2},           {"k_total", c.k_total}, {"eta", c.eta_hajek},
            {"rho", c.rho},               {"a_level", c.a_level}, {"eps0", c.eps0},     {"n_perp_sq", c.n_perp_sq},
            {"eps_in_regime", c.eps_in_regime}};
}

json to_json(const DistributionFit& f) {
    return {{"samples", f.samples},       {"target_mean", f.target_mean}, {"sample_mean", f.sample_mean},
            {"mean_rel_error", f.mean_rel_error}, {"cv2", f.cv2},         {"ks", f.ks},
            {"shares", f.shares},         {"target_shares", f.target_shares},
            {"max_share_error", f.max_share_error}};
}

std::string stability_summary(const StabilityReport& r) {
    std::ostringstream os;
    os << "h* = " << num(r.h_star);
    if (r.throughput.optimal) os << " = sum(mu), throughput optimal";
    else os << ", NOT throughput optimal";
    if (r.transience && r.transience->applicable) os << ", transient above n*lambda = " << num(*r.transience->transient_above);
    os << (r.majorization.strict ? ", strict majorization holds" : ", strict majorization FAILS");
    if (!r.majorization.strict && r.majorization.witness &&
        std::abs(r.majorization.witness->prefix_f - r.majorization.witness->prefix_share) <=
            kStabilityTolerance * r.majorization.witness->prefix_share) {
        os << " (equalities)";
    }
    return os.str();
}

std::string stability_text(const StabilityReport& r, const MinimizerReport& m) {
    std::ostringstream os;
    os << "h* = " << num(r.h_star) << " jobs/slot (sum mu = " << num(r.total_rate) << ")\n";
    os << "minimizers (eta, m)" << (r.minimizers_complete ? "" : " [representatives only]") << ":";
    const std::size_t shown = std::min<std::size_t>(r.minimizers.size(), 24);
    for (std::size_t i = 0; i < shown; ++i) os << " (" << r.minimizers[i].eta.to_string() << ", " << r.minimizers[i].m << ")";
    if (shown < r.minimizers.size()) os << " ... (" << r.minimizers.size() << " total)";
    os << "\nthroughput optimal: " << (r.throughput.optimal ? "yes" : "NO");
    if (const auto& w = r.throughput.witness) {
        os << " (eta = " << w->eta.to_string() << ", m = " << w->m << ": prefix f " << num(w->prefix_f)
           << " > prefix share " << num(w->prefix_share) << ")";
    }
    os << "\ntransience: ";
    if (!r.transience) {
        os << "not evaluated for Monte-Carlo f-tables";
    } else if (r.transience->applicable) {
        os << "transient above n*lambda = " << num(*r.transience->transient_above);
        if (r.transience->vacuous) os << " (symmetry condition vacuous: every minimizer has m = n)";
    } else {
        os << "symmetry condition fails at (" << r.transience->failing_minimizer->eta.to_string() << ", "
           << r.transience->failing_minimizer->m << "); no transience claim";
    }
    os << "\nstrict majorization: " << (r.majorization.strict ? "holds" : "FAILS");
    if (const auto& w = r.majorization.witness) {
        os << " (eta = " << w->eta.to_string() << ", m = " << w->m << ": prefix f " << num(w->prefix_f)
           << " vs prefix share " << num(w->prefix_share) << ")";
    }
    os << "\nminimizer structure: ";
    if (!m.applicable) os << "not applicable (h* = sum(mu))";
    else os << m.rows.size() << " minimizing permutations, " << m.violations << " violations";
    os << "\nsummary: " << stability_summary(r) << '\n';
    return os.str();
}

}  // namespace hetlb::tools
