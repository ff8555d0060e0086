#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hetlb/fvector.hpp"
#include "hetlb/model.hpp"
#include "hetlb/policy.hpp"
#include "hetlb/sim.hpp"

namespace hetlb {

/// Value of the TOML subset: integers, floats, strings, booleans and
/// single-line (possibly nested) arrays.
struct ConfigValue {
    using Array = std::vector<ConfigValue>;
    std::variant<std::int64_t, double, std::string, bool, Array> data;
    int line = 0;
};

/// Section name ("" for top level, dotted for nested) -> key -> value.
struct ConfigDocument {
    std::map<std::string, std::map<std::string, ConfigValue>> sections;
    std::map<std::string, int> section_lines;
};

/// Parse errors carry "line N: ..." in their message.
ConfigDocument parse_config(std::istream& is);

struct RunSection {
    std::uint64_t slots = 1'000'000;
    std::uint64_t burn_in = 100'000;
    std::uint32_t replications = 4;
    std::int64_t queue_limit = std::numeric_limits<std::int64_t>::max();
};

struct FVectorSection {
    FMode mode = FMode::analytic;
    std::uint64_t cycles = 100'000;
};

struct ExperimentConfig {
    SystemConfig system;
    PolicySpec policy;
    bool has_arrival = false;
    std::optional<SweepConfig> sweep;
    RunSection run;
    FVectorSection fvector;
};

/// Builds an experiment from sections [system], [system.arrival], [policy],
/// [run], [fvector] and [sweep]. Unknown sections or keys, missing required
/// keys and out-of-domain values throw InvalidArgument naming the line and field.
ExperimentConfig load_experiment(const ConfigDocument& doc);
ExperimentConfig load_experiment(std::istream& is);

}  // namespace hetlb
