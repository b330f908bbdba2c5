#pragma once

#include <string>

#include <json.hpp>

#include "entrobound/abstraction.hpp"
#include "entrobound/bounds.hpp"
#include "entrobound/montecarlo.hpp"
#include "entrobound/synthesis.hpp"

namespace entrobound {

using json = nlohmann::ordered_json;

json abstraction_to_json(const IntervalAbstraction& abs, const std::string& model_hash);
IntervalAbstraction abstraction_from_json(const json& j, std::string* model_hash = nullptr);

json policy_to_json(const Policy& policy);
Policy policy_from_json(const json& j);

json constants_to_json(const ConstantsEcho& c);
json stats_to_json(const SolverStats& s);

json bounds_report_to_json(const BoundsReport& report);
json synthesis_report_to_json(const SynthesisReport& report);
json mc_estimate_to_json(const McEstimate& est, const std::string& kind, LogBase base);

std::string trajectories_to_csv(const std::vector<Trajectory>& trajectories);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
json read_json_file(const std::string& path);

}  // namespace entrobound
