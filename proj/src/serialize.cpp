#include "entrobound/serialize.hpp"

#include <fstream>
#include <sstream>

namespace entrobound {

namespace {

json box_to_json(const Box& box) {
  return json{{"lows", box.lows}, {"highs", box.highs}};
}

Box box_from_json(const json& j) {
  return Box(j.at("lows").get<std::vector<double>>(),
             j.at("highs").get<std::vector<double>>());
}

}  // namespace

json abstraction_to_json(const IntervalAbstraction& abs, const std::string& model_hash) {
  json j;
  j["format"] = "entrobound-abstraction-v1";
  j["model_hash"] = model_hash;
  j["partition"] = {{"box", box_to_json(abs.partition.box)}, {"counts", abs.partition.counts}};
  j["action_values"] = abs.action_values;
  j["pi"] = abs.pi;
  j["p_lower"] = abs.p_lower;
  j["p_upper"] = abs.p_upper;
  if (abs.g_lower) {
    j["g_upper"] = *abs.g_upper;
    j["g_lower"] = *abs.g_lower;
  } else {
    j["g_upper"] = nullptr;
    j["g_lower"] = nullptr;
  }
  const auto& m = abs.metadata;
  j["metadata"] = {{"quad_tol", m.quad_tol},
                   {"extremize_mesh", m.extremize_mesh},
                   {"margin_used", m.margin_used},
                   {"margin_source_grad", m.margin_source_grad},
                   {"model", m.model_description},
                   {"constants",
                    {{"sup_density", m.constants.sup_density},
                     {"grad_joint", m.constants.grad_joint},
                     {"grad_source", m.constants.grad_source},
                     {"grad_target", m.constants.grad_target},
                     {"analytic", m.constants.analytic},
                     {"safety_factor", m.constants.safety_factor}}}};
  return j;
}

IntervalAbstraction abstraction_from_json(const json& j, std::string* model_hash) {
  if (j.value("format", "") != "entrobound-abstraction-v1")
    throw ConfigError("abstraction file: unknown format tag");
  IntervalAbstraction abs;
  abs.partition = build_uniform_grid(box_from_json(j.at("partition").at("box")),
                                     j.at("partition").at("counts").get<std::vector<int>>());
  abs.action_values = j.at("action_values").get<std::vector<double>>();
  abs.pi = j.at("pi").get<std::vector<double>>();
  abs.p_lower = j.at("p_lower").get<std::vector<std::vector<double>>>();
  abs.p_upper = j.at("p_upper").get<std::vector<std::vector<double>>>();
  if (!j.at("g_lower").is_null()) {
    abs.g_lower = j.at("g_lower").get<std::vector<std::vector<double>>>();
    abs.g_upper = j.at("g_upper").get<std::vector<std::vector<double>>>();
  }
  const auto& m = j.at("metadata");
  abs.metadata.quad_tol = m.at("quad_tol").get<double>();
  abs.metadata.extremize_mesh = m.at("extremize_mesh").get<int>();
  abs.metadata.margin_used = m.at("margin_used").get<bool>();
  abs.metadata.margin_source_grad = m.at("margin_source_grad").get<double>();
  abs.metadata.model_description = m.at("model").get<std::string>();
  const auto& c = m.at("constants");
  abs.metadata.constants.sup_density = c.at("sup_density").get<double>();
  abs.metadata.constants.grad_joint = c.at("grad_joint").get<double>();
  abs.metadata.constants.grad_source = c.at("grad_source").get<double>();
  abs.metadata.constants.grad_target = c.at("grad_target").get<double>();
  abs.metadata.constants.analytic = c.at("analytic").get<bool>();
  abs.metadata.constants.safety_factor = c.at("safety_factor").get<double>();
  if (model_hash) *model_hash = j.at("model_hash").get<std::string>();
  abs.validate();
  return abs;
}

json policy_to_json(const Policy& policy) {
  json rows = json::array();
  for (int k = 0; k < policy.horizon; ++k) {
    json row = json::array();
    for (int i = 0; i < policy.num_states; ++i) row.push_back(policy.at(k, i));
    rows.push_back(row);
  }
  return json{{"format", "entrobound-policy-v1"},
              {"horizon", policy.horizon},
              {"num_states", policy.num_states},
              {"action_values", policy.action_values},
              {"actions", rows}};
}

Policy policy_from_json(const json& j) {
  if (j.value("format", "") != "entrobound-policy-v1")
    throw ConfigError("policy file: unknown format tag");
  Policy p;
  p.horizon = j.at("horizon").get<int>();
  p.num_states = j.at("num_states").get<int>();
  p.action_values = j.at("action_values").get<std::vector<double>>();
  const auto& rows = j.at("actions");
  if (static_cast<int>(rows.size()) != p.horizon)
    throw ConfigError("policy file: action table row count mismatch");
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != p.num_states)
      throw ConfigError("policy file: action table column count mismatch");
    for (const auto& a : row) p.actions.push_back(a.get<int>());
  }
  return p;
}

json constants_to_json(const ConstantsEcho& c) {
  return json{{"L_q", c.sup_density},
              {"L_grad_q", c.grad_joint},
              {"L_grad_q_source", c.grad_source},
              {"L_grad_q_target", c.grad_target},
              {"log_L", c.traj_grad_log},
              {"delta_bar", c.delta_bar},
              {"traj_dim", c.traj_dim},
              {"log_num_traj_cells", c.log_num_traj_cells},
              {"log_base", log_base_name(c.base)}};
}

json stats_to_json(const SolverStats& s) {
  return json{{"exact_rows", s.exact_rows},
              {"heuristic_rows", s.heuristic_rows},
              {"degenerate_rows", s.degenerate_rows},
              {"max_fw_gap", s.max_fw_gap},
              {"fw_debit", s.fw_debit},
              {"max_audit_gap", s.max_audit_gap}};
}

json bounds_report_to_json(const BoundsReport& report) {
  json j;
  j["format"] = "entrobound-bounds-v1";
  j["lower"] = report.lower;
  j["upper_global"] = report.upper_global;
  j["upper_local"] = report.upper_local;
  j["eps_global"] = report.eps_global;
  j["constants"] = constants_to_json(report.constants);
  j["solver_stats"] = stats_to_json(report.stats);
  j["runtime_s"] = report.runtime_seconds;
  if (report.values_lower) {
    j["values_lower"] = *report.values_lower;
    j["values_upper"] = *report.values_upper;
    j["values_local"] = *report.values_local;
  }
  return j;
}

json synthesis_report_to_json(const SynthesisReport& report) {
  auto pair_json = [](const BoundPair& p) {
    return json{{"lower", p.lower}, {"upper", p.upper}};
  };
  json j;
  j["format"] = "entrobound-synthesis-v1";
  j["sigma"] = report.sigma;
  j["mode"] = report.sigma > 0 ? "penalize-predictability" : "reward-predictability";
  j["phi"] = report.phi_scale;
  j["certified_global"] = pair_json(report.certified_global);
  j["certified_local"] = pair_json(report.certified_local);
  j["discrete_global"] = pair_json(report.discrete_global);
  j["discrete_local"] = pair_json(report.discrete_local);
  j["eps_global"] = report.eps_global;
  j["constants"] = constants_to_json(report.constants);
  j["solver_stats"] = stats_to_json(report.stats);
  j["runtime_s"] = report.runtime_seconds;
  return j;
}

json mc_estimate_to_json(const McEstimate& est, const std::string& kind, LogBase base) {
  json j;
  j["format"] = "entrobound-mc-v1";
  j["kind"] = kind;
  j["mean"] = est.mean;
  if (est.std_error)
    j["std_error"] = *est.std_error;
  else
    j["std_error"] = nullptr;
  j["samples"] = est.samples;
  j["seed"] = est.seed;
  j["log_base"] = log_base_name(base);
  return j;
}

std::string trajectories_to_csv(const std::vector<Trajectory>& trajectories) {
  std::ostringstream out;
  out.precision(17);
  if (trajectories.empty()) return "trajectory,k\n";
  const int d = trajectories[0].state_dim;
  out << "trajectory,k";
  for (int j = 0; j < d; ++j) out << ",x" << j;
  out << ",action\n";
  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    const auto& traj = trajectories[t];
    for (int k = 0; k < traj.length(); ++k) {
      out << t << "," << k;
      auto x = traj.state(k);
      for (int j = 0; j < d; ++j) out << "," << x[j];
      if (k < static_cast<int>(traj.actions.size()))
        out << "," << traj.actions[k];
      else
        out << ",";
      out << "\n";
    }
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace entrobound
