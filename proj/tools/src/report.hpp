#pragma once

#include <string>

#include <json.hpp>

#include "hetlb/fvector.hpp"
#include "hetlb/sim.hpp"
#include "hetlb/stability.hpp"
#include "hetlb/stats.hpp"

namespace hetlb::tools {

using json = nlohmann::ordered_json;

/// %.10g, with "inf" for infinities.
std::string num(double x);

json to_json(const Estimate& e);
json to_json(const PrefixPair& p);
json to_json(const PrefixWitness& w);
json to_json(const StabilityReport& r);
json to_json(const MinimizerReport& r);
json to_json(const SimStats& s);
json to_json(const SSCConstants& c);
json to_json(const DistributionFit& f);

/// Multi-line human-readable stability summary.
std::string stability_text(const StabilityReport& r, const MinimizerReport& m);
/// One-line verdict, e.g. "h* = 2, NOT throughput optimal, transient above n*lambda = 2".
std::string stability_summary(const StabilityReport& r);

}  // namespace hetlb::tools
