#include "entrobound/config.hpp"

#include <cmath>
#include <set>

#include "entrobound/sha256.hpp"

namespace entrobound {

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key))
      throw ConfigError(path + "." + key + ": unknown key");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, const T& fallback, json& resolved,
         const std::string& path) {
  try {
    T v = j.contains(key) ? j.at(key).get<T>() : fallback;
    resolved[key] = v;
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

template <typename T>
T require(const json& j, const std::string& key, json& resolved, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing required key");
  try {
    T v = j.at(key).get<T>();
    resolved[key] = v;
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

// Accepts a scalar (isotropic), a per-dimension list, or a full matrix;
// returns the covariance matrix sigma_scale^2 handling.
std::vector<std::vector<double>> parse_covariance(const json& j, int dim,
                                                  const std::string& path) {
  std::vector<std::vector<double>> cov(dim, std::vector<double>(dim, 0.0));
  if (j.is_number()) {
    double sd = j.get<double>();
    for (int i = 0; i < dim; ++i) cov[i][i] = sd * sd;
    return cov;
  }
  if (j.is_array() && !j.empty() && j[0].is_number()) {
    auto sds = j.get<std::vector<double>>();
    if (static_cast<int>(sds.size()) != dim)
      throw ConfigError(path + ": per-dimension sigma length mismatch");
    for (int i = 0; i < dim; ++i) cov[i][i] = sds[i] * sds[i];
    return cov;
  }
  if (j.is_array()) {
    auto m = j.get<std::vector<std::vector<double>>>();
    if (static_cast<int>(m.size()) != dim)
      throw ConfigError(path + ": covariance matrix dimension mismatch");
    return m;
  }
  throw ConfigError(path + ": expected scalar, list, or matrix");
}

Box parse_box(const json& j, const std::string& path) {
  static const std::set<std::string> keys{"lows", "highs"};
  reject_unknown_keys(j, keys, path);
  try {
    return Box(j.at("lows").get<std::vector<double>>(),
               j.at("highs").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::unique_ptr<KernelModel> parse_model(const json& j, RunConfig& config, json& resolved) {
  const std::string path = "model";
  std::string type = require<std::string>(j, "type", resolved, path);

  if (type == "clipped_gaussian") {
    reject_unknown_keys(j, {"type", "box", "sigma", "x0_mean", "x0_sigma", "horizon",
                            "sigma_sign"},
                        path);
    Box box = j.contains("box") ? parse_box(j.at("box"), path + ".box")
                                : Box({0.0, 0.0}, {1.0, 1.0});
    resolved["box"] = {{"lows", box.lows}, {"highs", box.highs}};
    int dim = box.dim();
    json sigma_j = j.contains("sigma") ? j.at("sigma") : json(1.0);
    json sigma0_j = j.contains("x0_sigma") ? j.at("x0_sigma") : json(0.6);
    resolved["sigma"] = sigma_j;
    resolved["x0_sigma"] = sigma0_j;
    std::vector<double> center(dim);
    for (int i = 0; i < dim; ++i) center[i] = 0.5 * (box.lows[i] + box.highs[i]);
    std::vector<double> mean =
        get_or<std::vector<double>>(j, "x0_mean", center, resolved, path);
    if (static_cast<int>(mean.size()) != dim)
      throw ConfigError(path + ".x0_mean: dimension mismatch");
    int horizon = get_or<int>(j, "horizon", 4, resolved, path);
    config.sigma_sign = get_or<int>(j, "sigma_sign", 1, resolved, path);
    return clipped_gaussian_model(box, parse_covariance(sigma_j, dim, path + ".sigma"),
                                  mean, parse_covariance(sigma0_j, dim, path + ".x0_sigma"),
                                  horizon);
  }

  if (type == "triangular_av") {
    reject_unknown_keys(j, {"type", "horizon", "phi", "q0", "sigma_sign"}, path);
    int horizon = get_or<int>(j, "horizon", 15, resolved, path);
    config.phi = get_or<double>(j, "phi", 2.3, resolved, path);
    config.sigma_sign = get_or<int>(j, "sigma_sign", -1, resolved, path);
    AvInitialSpec q0;
    if (j.contains("q0")) {
      const auto& q = j.at("q0");
      reject_unknown_keys(q, {"kind", "low", "mode", "high"}, path + ".q0");
      std::string kind = q.value("kind", "triangular");
      q0.kind = kind == "uniform" ? AvInitialSpec::Kind::Uniform
                                  : AvInitialSpec::Kind::Triangular;
      if (kind != "uniform" && kind != "triangular")
        throw ConfigError(path + ".q0.kind: expected 'triangular' or 'uniform'");
      q0.a = q.value("low", 0.25);
      q0.b = q.value("high", 0.5);
      q0.mode = q.value("mode", 0.5 * (q0.a + q0.b));
    }
    resolved["q0"] = {{"kind", q0.kind == AvInitialSpec::Kind::Uniform ? "uniform"
                                                                       : "triangular"},
                      {"low", q0.a},
                      {"mode", q0.mode},
                      {"high", q0.b}};
    return triangular_av_model(horizon, config.phi, q0);
  }

  if (type == "custom") {
    reject_unknown_keys(j, {"type", "box", "grid", "horizon", "q0_table", "q_tables",
                            "cost_tables", "action_values", "sup_density", "grad_bound",
                            "sigma_sign"},
                        path);
    TabulatedSpec spec;
    if (!j.contains("box")) throw ConfigError(path + ".box: missing required key");
    spec.box = parse_box(j.at("box"), path + ".box");
    resolved["box"] = {{"lows", spec.box.lows}, {"highs", spec.box.highs}};
    spec.grid = require<std::vector<int>>(j, "grid", resolved, path);
    spec.horizon = get_or<int>(j, "horizon", 1, resolved, path);
    spec.q0 = require<std::vector<double>>(j, "q0_table", resolved, path);
    spec.q = require<std::vector<std::vector<double>>>(j, "q_tables", resolved, path);
    spec.costs = get_or<std::vector<std::vector<double>>>(j, "cost_tables", {}, resolved,
                                                          path);
    spec.action_values =
        get_or<std::vector<double>>(j, "action_values", {}, resolved, path);
    spec.sup_density = require<double>(j, "sup_density", resolved, path);
    spec.grad_bound = require<double>(j, "grad_bound", resolved, path);
    config.sigma_sign = get_or<int>(j, "sigma_sign", 1, resolved, path);
    return tabulated_model(std::move(spec));
  }

  throw ConfigError(path + ".type: unknown model type '" + type + "'");
}

}  // namespace

RunConfig parse_config(const json& j) {
  reject_unknown_keys(j, {"model", "partition", "solver", "output"}, "config");
  RunConfig config;
  json resolved;

  if (!j.contains("model")) throw ConfigError("config.model: missing required key");
  resolved["model"] = json::object();
  config.model = parse_model(j.at("model"), config, resolved["model"]);
  if (config.sigma_sign != 1 && config.sigma_sign != -1)
    throw ConfigError("model.sigma_sign: must be +1 or -1");

  if (!j.contains("partition"))
    throw ConfigError("config.partition: missing required key");
  reject_unknown_keys(j.at("partition"), {"counts"}, "partition");
  resolved["partition"] = json::object();
  auto counts = require<std::vector<int>>(j.at("partition"), "counts",
                                          resolved["partition"], "partition");
  config.partition = build_uniform_grid(config.model->box(), counts);

  const json solver_j = j.contains("solver") ? j.at("solver") : json::object();
  reject_unknown_keys(solver_j,
                      {"quad_order", "quad_tol", "extremize_mesh", "soundness_margin",
                       "vertex_budget", "heuristic_starts", "fw_tol", "fw_max_iters",
                       "sup_mesh", "safety_factor", "log_base", "seed", "samples"},
                      "solver");
  resolved["solver"] = json::object();
  json& rs = resolved["solver"];
  config.abstraction.quad.order = get_or<int>(solver_j, "quad_order", 16, rs, "solver");
  config.abstraction.quad.tol = get_or<double>(solver_j, "quad_tol", 1e-9, rs, "solver");
  config.abstraction.extremize_mesh =
      get_or<int>(solver_j, "extremize_mesh", 5, rs, "solver");
  config.abstraction.soundness_margin =
      get_or<bool>(solver_j, "soundness_margin", true, rs, "solver");
  config.solver.vertex_budget =
      get_or<double>(solver_j, "vertex_budget", 1e6, rs, "solver");
  config.solver.heuristic_starts =
      get_or<int>(solver_j, "heuristic_starts", 32, rs, "solver");
  config.solver.fw_tol = get_or<double>(solver_j, "fw_tol", 1e-9, rs, "solver");
  config.solver.fw_max_iters = get_or<int>(solver_j, "fw_max_iters", 10000, rs, "solver");
  config.sup_mesh = get_or<int>(solver_j, "sup_mesh", 21, rs, "solver");
  config.safety_factor = get_or<double>(solver_j, "safety_factor", 1.1, rs, "solver");
  std::string base = get_or<std::string>(solver_j, "log_base", "natural", rs, "solver");
  if (base == "natural")
    config.base = LogBase::Natural;
  else if (base == "base2")
    config.base = LogBase::Base2;
  else
    throw ConfigError("solver.log_base: expected 'natural' or 'base2'");
  config.seed = get_or<std::uint64_t>(solver_j, "seed", 20250801ULL, rs, "solver");
  config.solver.seed = config.seed;
  config.samples = get_or<std::uint64_t>(solver_j, "samples", 100000ULL, rs, "solver");

  if (config.abstraction.quad.order < 2)
    throw ConfigError("solver.quad_order: must be >= 2");
  if (config.abstraction.extremize_mesh < 1)
    throw ConfigError("solver.extremize_mesh: must be >= 1");
  if (config.solver.fw_tol <= 0) throw ConfigError("solver.fw_tol: must be positive");
  if (config.safety_factor < 1.0)
    throw ConfigError("solver.safety_factor: must be >= 1");
  if (config.samples < 1) throw ConfigError("solver.samples: must be >= 1");

  const json out_j = j.contains("output") ? j.at("output") : json::object();
  reject_unknown_keys(out_j, {"dir", "write_values", "trajectory_csv"}, "output");
  resolved["output"] = json::object();
  config.out_dir = get_or<std::string>(out_j, "dir", ".", resolved["output"], "output");
  config.write_values =
      get_or<bool>(out_j, "write_values", false, resolved["output"], "output");
  config.trajectory_csv =
      get_or<bool>(out_j, "trajectory_csv", false, resolved["output"], "output");

  config.resolved = std::move(resolved);
  config.input_hash =
      sha256_hex(config.resolved.dump() + "|" + config.model->describe());
  return config;
}

RunConfig load_config_file(const std::string& path) {
  return parse_config(read_json_file(path));
}

GradientConstants resolve_constants(const RunConfig& config) {
  return estimate_sup_bounds(*config.model, config.sup_mesh, config.safety_factor);
}

EntropyGeometry make_geometry(const GridPartition& partition,
                              const GradientConstants& constants, LogBase base) {
  return EntropyGeometry::from_partition(partition, constants.grad_target, base);
}

ConstantsEcho make_constants_echo(const GradientConstants& constants,
                                  const GridPartition& partition, int horizon,
                                  LogBase base) {
  ConstantsEcho echo;
  echo.sup_density = constants.sup_density;
  echo.grad_joint = constants.grad_joint;
  echo.grad_source = constants.grad_source;
  echo.grad_target = constants.grad_target;
  echo.traj_grad_log =
      trajectory_gradient_bound(constants.sup_density, constants.grad_joint, horizon)
          .log_value;
  auto ts = trajectory_space_measures(partition, horizon);
  echo.delta_bar = ts.max_side;
  echo.traj_dim = ts.dim;
  echo.log_num_traj_cells = ts.log_cell_count;
  echo.base = base;
  return echo;
}

}  // namespace entrobound
