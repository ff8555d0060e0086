#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "hetlb_tools/commands.hpp"

namespace fs = std::filesystem;
using namespace hetlb::tools;

namespace {

struct Scratch {
    fs::path root;
    explicit Scratch(const std::string& name) : root(fs::temp_directory_path() / ("hetlb_cli_" + name)) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Scratch() { fs::remove_all(root); }

    std::string write(const std::string& name, const std::string& text) const {
        const auto path = root / name;
        std::ofstream(path, std::ios::binary) << text;
        return path.string();
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string repo_config(const std::string& name) { return std::string(HETLB_SOURCE_DIR) + "/configs/" + name; }

CommandResult run(const std::string& sub, CommandOptions o, std::string* log_out = nullptr) {
    std::ostringstream log;
    auto r = run_command(sub, o, log);
    if (log_out) *log_out = log.str();
    return r;
}

std::size_t count_lines_starting(const std::string& text, const std::string& prefix) {
    std::istringstream is(text);
    std::size_t c = 0;
    for (std::string line; std::getline(is, line);) c += line.rfind(prefix, 0) == 0;
    return c;
}

const char* kSmallSweep = R"([system]
mu = [0.4, 0.6]
s_max = 1
seed = 5
[policy]
kind = "jsq"
[sweep]
epsilons = [0.4, 0.2, 0.1]
replications = 2
slots_per_rep = 60_000
burn_in = 5_000
variance = 0.5
)";

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("manifest hash matches git") {
        // git hash-object of an empty file and of "hello\n"
        CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
        CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    }

    TEST_CASE("fvector writes one record per permutation") {
        Scratch s("fvector");
        CommandOptions o;
        o.config_path = repo_config("jsq3_fvector.toml");
        o.out_dir = s.root.string();
        const auto r = run("fvector", o);
        REQUIRE(r.exit_code == 0);
        const auto table = slurp(s.root / "ftable.txt");
        CHECK(count_lines_starting(table, "eta ") == 6);
        CHECK(table.find("symmetric 1") != std::string::npos);
        CHECK(table.find("# config_sha1") != std::string::npos);
        CHECK(fs::exists(s.root / "fvector.json"));

        const auto pod = s.write("pod.toml", "[system]\nmu = [1, 1, 1, 1]\n[policy]\nkind = \"pod\"\nd = 2\n");
        o.config_path = pod;
        o.monte_carlo = 2000;
        REQUIRE(run("fvector", o).exit_code == 0);
        const auto mc = slurp(s.root / "ftable.txt");
        CHECK(count_lines_starting(mc, "se ") == 24);
        CHECK(mc.find("provenance monte_carlo") != std::string::npos);
    }

    TEST_CASE("malformed config is rejected with a location") {
        Scratch s("bad");
        CommandOptions o;
        o.config_path = s.write("bad.toml", "[system]\nmu = [1.0, 2.0]\n[policy]\nkind = jsq\n");
        o.out_dir = s.root.string();
        const auto r = run("stability", o);
        CHECK(r.exit_code == kExitBadInput);
        REQUIRE(r.failures.size() == 1);
        CHECK(r.failures[0].find("line 4") != std::string::npos);
        CHECK(run("nonsense", o).exit_code == kExitBadInput);
        o.config_path = (s.root / "missing.toml").string();
        CHECK(run("fvector", o).exit_code == kExitBadInput);
    }

    TEST_CASE("stability summaries") {
        Scratch s("stability");
        CommandOptions o;
        o.out_dir = s.root.string();
        o.config_path = repo_config("rand12_stability.toml");
        std::string log;
        const auto r = run("stability", o, &log);
        CHECK(r.exit_code == 0);
        CHECK(log.find("h* = 2, NOT throughput optimal, transient above n*lambda = 2") != std::string::npos);
        CHECK(slurp(s.root / "stability.txt").find("positive_recurrent") != std::string::npos);

        o.config_path = s.write("jsq.toml", "[system]\nmu = [1.0, 2.0]\ns_max = 2\n[policy]\nkind = \"jsq\"\n");
        REQUIRE(run("stability", o, &log).exit_code == 0);
        CHECK(log.find("h* = 3 = sum(mu), throughput optimal") != std::string::npos);
        CHECK(log.find("strict majorization holds") != std::string::npos);

        o.config_path = s.write("wr.toml", "[system]\nmu = [1.0, 2.0]\ns_max = 2\n[policy]\nkind = \"weighted_rand\"\n");
        REQUIRE(run("stability", o, &log).exit_code == 0);
        CHECK(log.find("= sum(mu), throughput optimal") != std::string::npos);
        CHECK(log.find("strict majorization FAILS (equalities)") != std::string::npos);

        // a load above the threshold is reported, not silently accepted
        o.config_path = s.write("over.toml", "[system]\nmu = [1.0, 2.0]\ns_max = 2\n[system.arrival]\n"
                                             "kind = \"moments\"\nmean = 2.2\nvariance = 1.0\n[policy]\nkind = \"rand\"\n");
        const auto over = run("stability", o);
        CHECK(over.exit_code == kExitVerdictFailed);
    }

    TEST_CASE("same manifest gives identical bytes") {
        Scratch s("determinism");
        CommandOptions o;
        o.out_dir = s.root.string();
        o.config_path = s.write("sweep.toml", kSmallSweep);
        for (const std::string sub : {"stability", "sweep"}) {
            REQUIRE(run(sub, o).exit_code != kExitBadInput);
            std::map<std::string, std::string> first;
            for (const auto& e : fs::directory_iterator(s.root)) first[e.path().filename().string()] = slurp(e.path());
            REQUIRE(run(sub, o).exit_code != kExitBadInput);
            for (const auto& [name, bytes] : first) {
                CAPTURE(name);
                CHECK(slurp(s.root / name) == bytes);
            }
        }
        CHECK(count_lines_starting(slurp(s.root / "sweep.csv"), "0.") == 3);
    }

    TEST_CASE("overflow names the offending eps") {
        Scratch s("overflow");
        CommandOptions o;
        o.out_dir = s.root.string();
        o.config_path = s.write("sweep.toml", std::string(kSmallSweep) + "queue_limit = 4\n");
        const auto r = run("sweep", o);
        CHECK(r.exit_code == kExitUnstable);
        REQUIRE_FALSE(r.failures.empty());
        CHECK(r.failures[0].find("eps = ") != std::string::npos);
    }
}
