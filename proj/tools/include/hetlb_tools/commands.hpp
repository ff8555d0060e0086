#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hetlb::tools {

/// Identity of one run; embedded at the top of every output file.
struct Manifest {
    std::string subcommand;
    std::string config_path;
    std::string config_sha1;  // git blob hash of the config bytes
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string tool_version;

    /// Lines prefixed with `comment` (e.g. "# ").
    std::string header(std::string_view comment) const;
};

/// SHA-1 of "blob <size>\0<content>", as printed by `git hash-object`.
std::string git_blob_sha1(std::string_view content);

std::string tool_version();

struct CommandOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> replications;
    std::optional<std::uint64_t> slots;
    std::optional<std::uint64_t> monte_carlo;  // cycles per permutation
    std::optional<std::string> ftable;         // precomputed f-table file
    bool dump_samples = false;
};

struct CommandResult {
    int exit_code = 0;
    std::vector<std::string> failures;
    std::vector<std::string> files;
};

inline constexpr int kExitVerdictFailed = 1;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitUnstable = 3;

/// Runs one of fvector, stability, simulate, sweep, distcheck. Progress and
/// the human-readable summary go to `log`; input errors are reported through
/// the result (kExitBadInput) rather than thrown.
CommandResult run_command(const std::string& subcommand, const CommandOptions& options, std::ostream& log);

}  // namespace hetlb::tools
