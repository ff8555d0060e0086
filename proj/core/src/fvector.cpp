#include "hetlb/fvector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hetlb/error.hpp"
#include "hetlb/parallel.hpp"

namespace hetlb {

std::string to_string(FProvenance p) {
    switch (p) {
        case FProvenance::analytic: return "analytic";
        case FProvenance::monte_carlo: return "monte_carlo";
        case FProvenance::file: return "file";
    }
    return "unknown";
}

FTable FTable::symmetric(std::size_t n, FEntry entry, FProvenance provenance, std::uint64_t cycles) {
    FTable t;
    t.n_ = n;
    t.symmetric_ = true;
    t.provenance_ = provenance;
    t.cycles_ = cycles;
    t.entries_.push_back(std::move(entry));
    t.validate();
    return t;
}

FTable FTable::per_permutation(std::size_t n, std::vector<FEntry> entries, FProvenance provenance,
                               std::uint64_t cycles) {
    if (n > kMaxEnumeratedServers) {
        throw CapacityError("per-permutation f-tables are limited to n <= " +
                            std::to_string(kMaxEnumeratedServers));
    }
    if (entries.size() != factorial(n)) throw InvalidArgument("f-table needs one entry per permutation");
    FTable t;
    t.n_ = n;
    t.provenance_ = provenance;
    t.cycles_ = cycles;
    t.entries_ = std::move(entries);
    t.validate();
    return t;
}

const FEntry& FTable::entry(const Permutation& eta) const {
    if (eta.size() != n_) throw InvalidArgument("permutation size does not match the f-table");
    return symmetric_ ? entries_.front() : entries_[eta.rank()];
}

const FEntry& FTable::entry_by_rank(std::uint64_t rank) const {
    return symmetric_ ? entries_.front() : entries_.at(rank);
}

void FTable::validate() const {
    // an unbiased sample variance of a [0,1] quantity can reach c/(c-1) * 1/4
    const double tau_cap = provenance_ == FProvenance::monte_carlo && cycles_ > 1
                               ? 0.25 * static_cast<double>(cycles_) / static_cast<double>(cycles_ - 1)
                               : 0.25;
    const double tau_max = tau_cap * (1.0 + 1e-12);
    for (const auto& e : entries_) {
        if (e.f.size() != n_ || e.tau_sq.size() != n_) throw InvalidArgument("f-table row has the wrong length");
        if (!e.std_err.empty() && e.std_err.size() != n_) throw InvalidArgument("f-table se row has the wrong length");
        double sum = 0.0;
        for (std::size_t l = 0; l < n_; ++l) {
            if (!(e.f[l] >= 0.0 && e.f[l] <= 1.0)) throw InvalidArgument("f-table fraction outside [0,1]");
            if (!(e.tau_sq[l] >= 0.0 && e.tau_sq[l] <= tau_max)) {
                throw InvalidArgument("f-table variance outside [0,1/4]");
            }
            sum += e.f[l];
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "f-table row sums to " << sum << ", expected 1";
            throw InvalidArgument(msg.str());
        }
    }
}

double FTable::max_f() const noexcept {
    double m = 0.0;
    for (const auto& e : entries_) m = std::max(m, *std::max_element(e.f.begin(), e.f.end()));
    return m;
}

double FTable::max_tau_sq() const noexcept {
    double m = 0.0;
    for (const auto& e : entries_) m = std::max(m, *std::max_element(e.tau_sq.begin(), e.tau_sq.end()));
    return m;
}

namespace {

double choose(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(c);
}

FEntry iid_slots_entry(std::vector<double> f, std::uint32_t t_cycle) {
    FEntry e;
    e.tau_sq.resize(f.size());
    for (std::size_t l = 0; l < f.size(); ++l) e.tau_sq[l] = f[l] * (1.0 - f[l]) / static_cast<double>(t_cycle);
    e.f = std::move(f);
    return e;
}

}  // namespace

FTable f_analytic(const PolicySpec& spec, std::span<const double> mu) {
    const std::size_t n = mu.size();
    spec.validate(n);
    const double nd = static_cast<double>(n);
    switch (spec.kind) {
        case PolicyKind::rand:
            return FTable::symmetric(n, iid_slots_entry(std::vector<double>(n, 1.0 / nd), spec.t_cycle),
                                     FProvenance::analytic);
        case PolicyKind::round_robin:
            return FTable::symmetric(n, FEntry{std::vector<double>(n, 1.0 / nd), std::vector<double>(n, 0.0), {}},
                                     FProvenance::analytic);
        case PolicyKind::jsq:
        case PolicyKind::jsed: {
            std::vector<double> f(n, 0.0);
            f.back() = 1.0;
            return FTable::symmetric(n, FEntry{std::move(f), std::vector<double>(n, 0.0), {}}, FProvenance::analytic);
        }
        case PolicyKind::pod: {
            std::vector<double> f(n);
            const double total = choose(n, spec.d);
            for (std::size_t l = 1; l <= n; ++l) f[l - 1] = choose(l - 1, spec.d - 1) / total;
            return FTable::symmetric(n, iid_slots_entry(std::move(f), spec.t_cycle), FProvenance::analytic);
        }
        case PolicyKind::weighted_rand: {
            if (n > kMaxEnumeratedServers) {
                throw CapacityError("weighted_rand f-table needs enumeration; n > " +
                                    std::to_string(kMaxEnumeratedServers));
            }
            const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
            std::vector<FEntry> entries;
            for (const auto& eta : all_permutations(n)) {
                std::vector<double> f(n);
                for (std::size_t l = 0; l < n; ++l) f[l] = mu[eta[l]] / total;
                entries.push_back(iid_slots_entry(std::move(f), spec.t_cycle));
            }
            return FTable::per_permutation(n, std::move(entries), FProvenance::analytic);
        }
        case PolicyKind::custom: break;
    }
    throw InvalidArgument("custom policies have no closed-form f-vector; supply an f-table file");
}

FEntry f_monte_carlo(const PolicySpec& spec, std::span<const double> mu, const Permutation& eta,
                     std::uint64_t cycles, RngStream& rng) {
    const std::size_t n = mu.size();
    spec.validate(n);
    if (cycles < 1) throw InvalidArgument("Monte-Carlo f estimation needs at least one cycle");
    const auto position = eta.inverse();
    const double t = static_cast<double>(spec.t_cycle);

    RoundRobinState rr;
    std::vector<double> mean(n, 0.0), m2(n, 0.0);
    std::vector<std::uint32_t> counts(n);
    for (std::uint64_t k = 1; k <= cycles; ++k) {
        const auto plan = plan_cycle(spec, eta, mu, rng, rr);
        std::fill(counts.begin(), counts.end(), 0U);
        for (auto target : plan.targets) ++counts[position[target]];
        for (std::size_t l = 0; l < n; ++l) {
            const double x = static_cast<double>(counts[l]) / t;
            const double delta = x - mean[l];
            mean[l] += delta / static_cast<double>(k);
            m2[l] += delta * (x - mean[l]);
        }
    }
    FEntry e;
    e.f = std::move(mean);
    e.tau_sq.resize(n);
    e.std_err.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        e.tau_sq[l] = cycles > 1 ? m2[l] / static_cast<double>(cycles - 1) : 0.0;
        e.std_err[l] = std::sqrt(e.tau_sq[l] / static_cast<double>(cycles));
    }
    return e;
}

FTable build_ftable(const PolicySpec& spec, std::span<const double> mu, FMode mode, std::uint64_t cycles,
                    std::uint64_t seed) {
    const std::size_t n = mu.size();
    if (mode == FMode::analytic) return f_analytic(spec, mu);
    if (n > kMaxEnumeratedServers) {
        throw CapacityError("Monte-Carlo f-table enumerates n! permutations; n > " +
                            std::to_string(kMaxEnumeratedServers) + " is not supported");
    }
    const auto perms = all_permutations(n);
    std::vector<FEntry> entries(perms.size());
    parallel_for(perms.size(), [&](std::size_t rank) {
        auto rng = RngStream::for_purpose(seed, 0, StreamPurpose::fvector, static_cast<std::uint32_t>(rank));
        entries[rank] = f_monte_carlo(spec, mu, perms[rank], cycles, rng);
    });
    const bool identical = std::all_of(entries.begin(), entries.end(), [&](const FEntry& e) {
        return e.f == entries.front().f && e.tau_sq == entries.front().tau_sq;
    });
    if (identical) return FTable::symmetric(n, entries.front(), FProvenance::monte_carlo, cycles);
    return FTable::per_permutation(n, std::move(entries), FProvenance::monte_carlo, cycles);
}

namespace {

void write_row(std::ostream& os, const char* tag, const std::vector<double>& row) {
    os << tag;
    char buf[40];
    for (double v : row) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        os << buf;
    }
    os << '\n';
}

std::vector<double> parse_row(std::istringstream& ls, std::size_t n, std::size_t line_no) {
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
        try {
            std::size_t used = 0;
            row.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw InvalidArgument("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
        }
    }
    if (row.size() != n) {
        throw InvalidArgument("line " + std::to_string(line_no) + ": expected " + std::to_string(n) + " values");
    }
    return row;
}

}  // namespace

void write_ftable(std::ostream& os, const FTable& table) {
    os << "ftable 1\n";
    os << "n " << table.n() << '\n';
    os << "provenance " << to_string(table.provenance()) << '\n';
    os << "symmetric " << (table.is_symmetric() ? 1 : 0) << '\n';
    os << "cycles " << table.cycles() << '\n';
    const auto emit = [&](const std::string& eta, const FEntry& e) {
        os << "eta " << eta << '\n';
        write_row(os, "f", e.f);
        write_row(os, "tau2", e.tau_sq);
        if (!e.std_err.empty()) write_row(os, "se", e.std_err);
    };
    if (table.is_symmetric() && !table.enumerable()) {
        emit("*", table.stored().front());
        return;
    }
    const std::uint64_t count = factorial(table.n());
    for (std::uint64_t r = 0; r < count; ++r) {
        emit(Permutation::unrank(r, table.n()).to_string(), table.entry_by_rank(r));
    }
}

FTable read_ftable(std::istream& is) {
    std::size_t n = 0;
    bool symmetric = false;
    bool have_n = false;
    std::uint64_t cycles = 0;
    FProvenance provenance = FProvenance::file;
    std::vector<std::pair<std::string, FEntry>> records;
    std::string line;
    std::size_t line_no = 0;
    const auto fail = [&](const std::string& what) {
        throw InvalidArgument("f-table line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag.empty()) continue;
        if (tag == "ftable") {
            int version = 0;
            if (!(ls >> version) || version != 1) fail("unsupported f-table version");
        } else if (tag == "n") {
            if (!(ls >> n) || n == 0) fail("bad server count");
            have_n = true;
        } else if (tag == "provenance") {
            std::string p;
            ls >> p;
            if (p == "analytic") provenance = FProvenance::analytic;
            else if (p == "monte_carlo") provenance = FProvenance::monte_carlo;
            else if (p == "file") provenance = FProvenance::file;
            else fail("unknown provenance '" + p + "'");
        } else if (tag == "symmetric") {
            int s = 0;
            if (!(ls >> s)) fail("bad symmetric flag");
            symmetric = s != 0;
        } else if (tag == "cycles") {
            if (!(ls >> cycles)) fail("bad cycle count");
        } else if (tag == "eta") {
            if (!have_n) fail("'eta' before 'n'");
            std::string rest;
            std::getline(ls, rest);
            records.emplace_back(rest, FEntry{});
        } else if (tag == "f" || tag == "tau2" || tag == "se") {
            if (records.empty()) fail("'" + tag + "' before any 'eta'");
            auto row = parse_row(ls, n, line_no);
            auto& e = records.back().second;
            (tag == "f" ? e.f : tag == "tau2" ? e.tau_sq : e.std_err) = std::move(row);
        } else {
            fail("unknown record '" + tag + "'");
        }
    }
    if (!have_n) throw InvalidArgument("f-table has no 'n' line");
    if (records.empty()) throw InvalidArgument("f-table has no records");

    const auto parse_eta = [&](const std::string& text) {
        std::istringstream es(text);
        std::vector<std::uint32_t> order;
        long v = 0;
        while (es >> v) {
            if (v < 1 || static_cast<std::size_t>(v) > n) throw InvalidArgument("f-table permutation index out of range");
            order.push_back(static_cast<std::uint32_t>(v - 1));
        }
        if (order.size() != n) throw InvalidArgument("f-table permutation has the wrong length");
        return Permutation(std::move(order));
    };

    if (records.size() == 1 && records.front().first.find('*') != std::string::npos) {
        return FTable::symmetric(n, std::move(records.front().second), provenance, cycles);
    }
    if (n > kMaxEnumeratedServers) throw CapacityError("f-table files with n > 8 must be symmetric ('eta *')");
    std::vector<FEntry> entries(factorial(n));
    std::vector<bool> seen(entries.size(), false);
    for (auto& [eta_text, e] : records) {
        const auto rank = parse_eta(eta_text).rank();
        if (seen[rank]) throw InvalidArgument("f-table lists permutation " + eta_text + " twice");
        seen[rank] = true;
        entries[rank] = std::move(e);
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw InvalidArgument("f-table does not cover every permutation");
    }
    if (symmetric) {
        const bool identical = std::all_of(entries.begin(), entries.end(), [&](const FEntry& e) {
            return e.f == entries.front().f && e.tau_sq == entries.front().tau_sq;
        });
        if (!identical) throw InvalidArgument("f-table is flagged symmetric but its rows differ");
        return FTable::symmetric(n, std::move(entries.front()), provenance, cycles);
    }
    return FTable::per_permutation(n, std::move(entries), provenance, cycles);
}

}  // namespace hetlb
