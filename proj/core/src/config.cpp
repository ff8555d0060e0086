#include "hetlb/config.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "hetlb/error.hpp"

namespace hetlb {

namespace {

[[noreturn]] void fail_at(int line, const std::string& what) {
    throw InvalidArgument("line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

bool valid_name(const std::string& s, bool dotted) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || (dotted && c == '.'))) return false;
    }
    return true;
}

class ValueParser {
public:
    ValueParser(const std::string& text, int line) : s_(text), line_(line) {}

    ConfigValue parse_all() {
        ConfigValue v = parse();
        skip_ws();
        if (pos_ != s_.size()) fail_at(line_, "unexpected trailing text '" + s_.substr(pos_) + "'");
        return v;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    ConfigValue parse() {
        skip_ws();
        if (pos_ >= s_.size()) fail_at(line_, "missing value");
        const char c = s_[pos_];
        if (c == '[') return parse_array();
        if (c == '"') return parse_string();
        return parse_scalar();
    }

    ConfigValue parse_array() {
        ++pos_;
        ConfigValue::Array items;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return {items, line_};
        }
        while (true) {
            items.push_back(parse());
            skip_ws();
            if (pos_ >= s_.size()) fail_at(line_, "unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ']') {
                    ++pos_;
                    break;
                }
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                break;
            }
            fail_at(line_, "expected ',' or ']' in array");
        }
        return {items, line_};
    }

    ConfigValue parse_string() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
            out += s_[pos_++];
        }
        if (pos_ >= s_.size()) fail_at(line_, "unterminated string");
        ++pos_;
        return {out, line_};
    }

    ConfigValue parse_scalar() {
        const auto start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' && s_[pos_] != '\t') ++pos_;
        std::string tok = s_.substr(start, pos_ - start);
        if (tok == "true") return {true, line_};
        if (tok == "false") return {false, line_};
        std::string digits;
        for (char c : tok) {
            if (c != '_') digits += c;
        }
        const bool floating = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "nan";
        try {
            std::size_t used = 0;
            if (floating) {
                const double v = std::stod(digits, &used);
                if (used == digits.size()) return {v, line_};
            } else {
                const long long v = std::stoll(digits, &used);
                if (used == digits.size()) return {static_cast<std::int64_t>(v), line_};
            }
        } catch (const std::exception&) {
        }
        fail_at(line_, "cannot parse value '" + tok + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    int line_;
};

// Typed, tracked access to one section; finish() rejects unknown keys.
class Section {
public:
    Section(const ConfigDocument& doc, std::string name) : name_(std::move(name)) {
        auto it = doc.sections.find(name_);
        if (it != doc.sections.end()) {
            entries_ = &it->second;
            line_ = doc.section_lines.count(name_) ? doc.section_lines.at(name_) : 0;
        }
    }

    bool present() const { return entries_ != nullptr; }
    bool has(const std::string& key) const { return entries_ && entries_->count(key); }

    const ConfigValue& get(const std::string& key) {
        if (!has(key)) fail_at(line_, field(key) + ": required key is missing");
        used_.insert(key);
        return entries_->at(key);
    }

    double number(const std::string& key) {
        const auto& v = get(key);
        return as_number(v, key);
    }
    double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    std::int64_t integer(const std::string& key) {
        const auto& v = get(key);
        if (auto p = std::get_if<std::int64_t>(&v.data)) return *p;
        fail_at(v.line, field(key) + ": expected an integer");
    }
    std::int64_t integer_or(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

    std::int64_t positive(const std::string& key, std::int64_t fallback) {
        const auto v = integer_or(key, fallback);
        if (v <= 0) fail_at(line_of(key), field(key) + ": must be positive");
        return v;
    }

    std::string string(const std::string& key) {
        const auto& v = get(key);
        if (auto p = std::get_if<std::string>(&v.data)) return *p;
        fail_at(v.line, field(key) + ": expected a string");
    }

    std::vector<double> numbers(const std::string& key) {
        const auto& v = get(key);
        const auto* arr = std::get_if<ConfigValue::Array>(&v.data);
        if (!arr) fail_at(v.line, field(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& item : *arr) out.push_back(as_number(item, key));
        return out;
    }

    std::vector<std::vector<double>> number_rows(const std::string& key) {
        const auto& v = get(key);
        const auto* arr = std::get_if<ConfigValue::Array>(&v.data);
        if (!arr) fail_at(v.line, field(key) + ": expected an array of arrays");
        std::vector<std::vector<double>> out;
        for (const auto& row : *arr) {
            const auto* inner = std::get_if<ConfigValue::Array>(&row.data);
            if (!inner) fail_at(v.line, field(key) + ": expected an array of arrays");
            out.emplace_back();
            for (const auto& item : *inner) out.back().push_back(as_number(item, key));
        }
        return out;
    }

    int line_of(const std::string& key) const { return has(key) ? entries_->at(key).line : line_; }
    std::string field(const std::string& key) const { return "[" + name_ + "] " + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        fail_at(line_of(key), field(key) + ": " + what);
    }

    void finish() const {
        if (!entries_) return;
        for (const auto& [key, value] : *entries_) {
            if (!used_.count(key)) fail_at(value.line, field(key) + ": unknown key");
        }
    }

private:
    double as_number(const ConfigValue& v, const std::string& key) const {
        if (auto p = std::get_if<double>(&v.data)) return *p;
        if (auto p = std::get_if<std::int64_t>(&v.data)) return static_cast<double>(*p);
        fail_at(v.line, field(key) + ": expected a number");
    }

    std::string name_;
    const std::map<std::string, ConfigValue>* entries_ = nullptr;
    int line_ = 0;
    std::set<std::string> used_;
};

IntPmf pmf_from_rows(Section& sec, const std::string& values_key, const std::vector<double>& values,
                     const std::vector<double>& probs) {
    if (values.size() != probs.size()) sec.fail(values_key, "values and probabilities differ in length");
    std::vector<std::pair<std::int64_t, double>> pairs;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != std::floor(values[i])) sec.fail(values_key, "values must be integers");
        pairs.emplace_back(static_cast<std::int64_t>(values[i]), probs[i]);
    }
    try {
        return IntPmf::from_pairs(pairs);
    } catch (const InvalidArgument& err) {
        sec.fail(values_key, err.what());
    }
}

ArrivalLaw load_arrival(Section& sec) {
    const std::string kind = sec.string("kind");
    try {
        if (kind == "deterministic") {
            auto law = ArrivalLaw::deterministic(sec.integer("value"));
            if (sec.has("a_max_total")) law.a_max_total = sec.integer("a_max_total");
            return law;
        }
        if (kind == "two_point") {
            auto law = ArrivalLaw::two_point(sec.integer("lo"), sec.integer("hi"), sec.number("p_hi"));
            if (sec.has("a_max_total")) law.a_max_total = sec.integer("a_max_total");
            return law;
        }
        if (kind == "binomial") return ArrivalLaw::binomial(sec.integer("trials"), sec.number("p"));
        if (kind == "pmf") {
            auto pmf = pmf_from_rows(sec, "values", sec.numbers("values"), sec.numbers("probs"));
            return ArrivalLaw::from_pmf(std::move(pmf), sec.integer_or("a_max_total", -1));
        }
        if (kind == "moments") {
            const double mean = sec.number("mean");
            const double variance = sec.number("variance");
            constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max() / 4;
            auto law = moment_matched_arrivals(mean, variance, sec.integer_or("a_max_total", kUnbounded));
            if (!sec.has("a_max_total")) law.a_max_total = law.pmf.max_value();
            return law;
        }
    } catch (const InvalidArgument& err) {
        sec.fail("kind", err.what());
    } catch (const InfeasibleMoments& err) {
        sec.fail("kind", err.what());
    }
    sec.fail("kind", "unknown arrival kind '" + kind + "' (deterministic, two_point, binomial, pmf, moments)");
}

}  // namespace

ConfigDocument parse_config(std::istream& is) {
    ConfigDocument doc;
    std::string current;
    doc.sections[current];
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const std::string text = trim(strip_comment(raw));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') fail_at(line, "malformed section header");
            const std::string name = trim(text.substr(1, text.size() - 2));
            if (!valid_name(name, true)) fail_at(line, "invalid section name '" + name + "'");
            if (doc.section_lines.count(name)) fail_at(line, "duplicate section [" + name + "]");
            doc.sections[name];
            doc.section_lines[name] = line;
            current = name;
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) fail_at(line, "expected 'key = value'");
        const std::string key = trim(text.substr(0, eq));
        if (!valid_name(key, false)) fail_at(line, "invalid key '" + key + "'");
        auto& section = doc.sections[current];
        if (section.count(key)) fail_at(line, "duplicate key '" + key + "'");
        section.emplace(key, ValueParser(trim(text.substr(eq + 1)), line).parse_all());
    }
    return doc;
}

ExperimentConfig load_experiment(const ConfigDocument& doc) {
    static const std::set<std::string> known{"", "system", "system.arrival", "policy", "run", "fvector", "sweep"};
    for (const auto& [name, entries] : doc.sections) {
        if (!known.count(name)) fail_at(doc.section_lines.at(name), "unknown section [" + name + "]");
        if (name.empty() && !entries.empty()) {
            fail_at(entries.begin()->second.line, "key '" + entries.begin()->first + "' outside any section");
        }
    }
    ExperimentConfig cfg;

    Section sys(doc, "system");
    if (!sys.present()) fail_at(0, "missing section [system]");
    const std::int64_t s_max = sys.positive("s_max", 1);
    const std::int64_t seed = sys.integer_or("seed", 0);
    if (seed < 0) sys.fail("seed", "must be nonnegative");

    std::vector<IntPmf> service;
    if (sys.has("service_values")) {
        if (sys.has("mu")) sys.fail("mu", "give either mu or service_values/service_probs, not both");
        const auto values = sys.number_rows("service_values");
        const auto probs = sys.number_rows("service_probs");
        if (values.size() != probs.size()) sys.fail("service_probs", "one row per server is required");
        for (std::size_t l = 0; l < values.size(); ++l) service.push_back(pmf_from_rows(sys, "service_values", values[l], probs[l]));
    } else {
        for (double m : sys.numbers("mu")) {
            try {
                service.push_back(bernoulli_batch_service(m, s_max));
            } catch (const InvalidArgument& err) {
                sys.fail("mu", err.what());
            }
        }
    }
    if (service.empty()) sys.fail("mu", "at least one server is required");

    ArrivalLaw arrival = ArrivalLaw::deterministic(0);
    Section arr(doc, "system.arrival");
    if (arr.present()) {
        arrival = load_arrival(arr);
        cfg.has_arrival = true;
        arr.finish();
    }
    try {
        cfg.system = SystemConfig::make(std::move(service), s_max, std::move(arrival), static_cast<std::uint64_t>(seed));
    } catch (const InvalidArgument& err) {
        fail_at(doc.section_lines.at("system"), std::string("[system]: ") + err.what());
    }
    sys.finish();
    const std::size_t n = cfg.system.n();

    Section pol(doc, "policy");
    if (!pol.present()) fail_at(0, "missing section [policy]");
    PolicyKind kind{};
    try {
        kind = parse_policy_kind(pol.string("kind"));
    } catch (const InvalidArgument& err) {
        pol.fail("kind", err.what());
    }
    const auto d = pol.integer_or("d", 0);
    if (d < 0) pol.fail("d", "must be nonnegative");
    if (kind == PolicyKind::custom) {
        cfg.policy.kind = kind;
        cfg.policy.gamma.assign(n, 1.0);
        cfg.policy.ftable_path = pol.string("ftable");
    } else {
        cfg.policy = PolicySpec::builtin(kind, cfg.system.mu, static_cast<std::uint32_t>(d));
    }
    if (pol.has("t_cycle")) cfg.policy.t_cycle = static_cast<std::uint32_t>(pol.positive("t_cycle", 1));
    if (pol.has("gamma")) {
        const auto gamma = pol.numbers("gamma");
        if (gamma.size() != n) pol.fail("gamma", "needs one entry per server");
        // config order -> sorted-server order
        for (std::size_t l = 0; l < n; ++l) cfg.policy.gamma[l] = gamma[cfg.system.original_index[l]];
    }
    try {
        cfg.policy.validate(n);
    } catch (const InvalidArgument& err) {
        fail_at(doc.section_lines.at("policy"), std::string("[policy]: ") + err.what());
    }
    pol.finish();

    Section run(doc, "run");
    cfg.run.slots = static_cast<std::uint64_t>(run.positive("slots", static_cast<std::int64_t>(cfg.run.slots)));
    cfg.run.burn_in = static_cast<std::uint64_t>(run.integer_or("burn_in", static_cast<std::int64_t>(cfg.run.burn_in)));
    cfg.run.replications = static_cast<std::uint32_t>(run.positive("replications", cfg.run.replications));
    cfg.run.queue_limit = run.positive("queue_limit", cfg.run.queue_limit);
    if (cfg.run.burn_in >= cfg.run.slots) run.fail("burn_in", "must be below slots");
    run.finish();

    Section fv(doc, "fvector");
    if (fv.has("mode")) {
        const auto mode = fv.string("mode");
        if (mode == "analytic") cfg.fvector.mode = FMode::analytic;
        else if (mode == "monte_carlo") cfg.fvector.mode = FMode::monte_carlo;
        else fv.fail("mode", "expected \"analytic\" or \"monte_carlo\"");
    }
    cfg.fvector.cycles = static_cast<std::uint64_t>(fv.positive("cycles", static_cast<std::int64_t>(cfg.fvector.cycles)));
    fv.finish();

    Section sw(doc, "sweep");
    if (sw.present()) {
        SweepConfig s;
        s.epsilons = sw.numbers("epsilons");
        s.replications = static_cast<std::uint32_t>(sw.positive("replications", s.replications));
        s.slots_per_rep = static_cast<std::uint64_t>(sw.positive("slots_per_rep", 1));
        if (sw.has("burn_in")) s.burn_in = static_cast<std::uint64_t>(sw.integer("burn_in"));
        s.variance = sw.number("variance");
        if (sw.has("a_max_total")) s.a_max_total = sw.positive("a_max_total", 1);
        s.queue_limit = sw.positive("queue_limit", s.queue_limit);
        try {
            s.validate(cfg.system.total_service_rate());
        } catch (const InvalidArgument& err) {
            sw.fail("epsilons", err.what());
        }
        cfg.sweep = std::move(s);
        sw.finish();
    }
    return cfg;
}

ExperimentConfig load_experiment(std::istream& is) { return load_experiment(parse_config(is)); }

}  // namespace hetlb
