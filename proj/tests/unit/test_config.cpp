#include <doctest.h>

#include <sstream>

#include "hetlb/config.hpp"
#include "hetlb/error.hpp"

using namespace hetlb;

namespace {

ExperimentConfig load(const std::string& text) {
    std::istringstream is(text);
    return load_experiment(is);
}

/// Message of the InvalidArgument thrown while loading, or "" if none.
std::string error_of(const std::string& text) {
    try {
        (void)load(text);
    } catch (const InvalidArgument& e) {
        return e.what();
    }
    return "";
}

const char* kBase = R"(# two servers
[system]
mu = [0.6, 0.4]   # listed out of order on purpose
s_max = 1
seed = 3

[system.arrival]
kind = "two_point"
lo = 0
hi = 1
p_hi = 0.5

[policy]
kind = "jsed"
)";

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("values of every type") {
        std::istringstream is(R"([a]
i = 1_000
f = -2.5e-1
s = "x # not a comment"
b = true
arr = [1, 2.5, [3, 4], "z"]
)");
        const auto doc = parse_config(is);
        const auto& a = doc.sections.at("a");
        CHECK(std::get<std::int64_t>(a.at("i").data) == 1000);
        CHECK(std::get<double>(a.at("f").data) == -0.25);
        CHECK(std::get<std::string>(a.at("s").data) == "x # not a comment");
        CHECK(std::get<bool>(a.at("b").data));
        const auto& arr = std::get<ConfigValue::Array>(a.at("arr").data);
        REQUIRE(arr.size() == 4);
        CHECK(std::get<ConfigValue::Array>(arr[2].data).size() == 2);
        CHECK(a.at("arr").line == 6);
    }

    TEST_CASE("experiment sections") {
        const auto cfg = load(std::string(kBase) + "[run]\nslots = 5000\nburn_in = 100\nreplications = 2\n");
        CHECK(cfg.system.mu == std::vector<double>{0.4, 0.6});
        CHECK(cfg.system.original_index == std::vector<std::size_t>{1, 0});
        CHECK(cfg.system.seed == 3);
        CHECK(cfg.has_arrival);
        CHECK(cfg.system.arrival.mean() == doctest::Approx(0.5));
        CHECK(cfg.policy.kind == PolicyKind::jsed);
        CHECK(cfg.policy.gamma == cfg.system.mu);
        CHECK(cfg.run.slots == 5000);
        CHECK(cfg.run.replications == 2);
        CHECK_FALSE(cfg.sweep);
    }

    TEST_CASE("gamma is given in config order") {
        const auto cfg = load(R"([system]
mu = [0.6, 0.4]
[policy]
kind = "jsq"
gamma = [3.0, 1.0]
t_cycle = 2
)");
        CHECK(cfg.policy.gamma == std::vector<double>{1.0, 3.0});
        CHECK(cfg.policy.t_cycle == 2);
        CHECK_FALSE(cfg.has_arrival);
    }

    TEST_CASE("sweep and arrival variants") {
        const auto cfg = load(R"([system]
mu = [0.4, 0.6]
[system.arrival]
kind = "moments"
mean = 0.9
variance = 1.0
[policy]
kind = "jsq"
[sweep]
epsilons = [0.2, 0.05]
replications = 2
slots_per_rep = 3_000_000
variance = 1.0
)");
        REQUIRE(cfg.sweep);
        CHECK(cfg.sweep->epsilons.size() == 2);
        CHECK(cfg.sweep->slots_per_rep == 3'000'000);
        CHECK(cfg.system.arrival.variance() == doctest::Approx(1.0));

        const auto pmf = load(R"([system]
service_values = [[0, 2], [1]]
service_probs = [[0.5, 0.5], [1.0]]
s_max = 2
[system.arrival]
kind = "pmf"
values = [0, 3]
probs = [0.75, 0.25]
[policy]
kind = "rand"
)");
        CHECK(pmf.system.mu == std::vector<double>{1.0, 1.0});
        CHECK(pmf.system.arrival.a_max_total == 3);
    }

    TEST_CASE("errors name the line and the field") {
        CHECK(error_of("[system]\nmu = [0.5,\n").find("line 2") != std::string::npos);
        CHECK(error_of("[system]\nmu = 0.5\n[bogus]\n").find("line 3") != std::string::npos);
        const std::string unknown = error_of(std::string(kBase) + "colour = 1\n");
        CHECK(unknown.find("line 15") != std::string::npos);
        CHECK(unknown.find("colour") != std::string::npos);
        const std::string bad_kind = error_of("[system]\nmu = [1.0]\n[policy]\nkind = \"jiq\"\n");
        CHECK(bad_kind.find("line 4") != std::string::npos);
        CHECK(bad_kind.find("kind") != std::string::npos);
        CHECK(error_of("[system]\nmu = [1.0]\n").find("[policy]") != std::string::npos);
        CHECK(error_of("[system]\nmu = [2.0]\ns_max = 1\n[policy]\nkind=\"jsq\"\n").find("mu") != std::string::npos);
        CHECK(error_of("[system]\nmu = [1.0]\nmu = [2.0]\n").find("duplicate") != std::string::npos);
        CHECK(error_of(std::string(kBase) + "gamma = [1.0]\n").find("gamma") != std::string::npos);
        const std::string eps = error_of(R"([system]
mu = [0.4, 0.6]
[policy]
kind = "jsq"
[sweep]
epsilons = [1.0]
slots_per_rep = 10_000_000
variance = 1.0
)");
        CHECK(eps.find("eps") != std::string::npos);
        CHECK(eps.find("line 6") != std::string::npos);
        const std::string infeasible = error_of(R"([system]
mu = [0.4, 0.6]
[system.arrival]
kind = "moments"
mean = 0.5
variance = 0.01
[policy]
kind = "jsq"
)");
        CHECK(infeasible.find("system.arrival") != std::string::npos);
    }
}
