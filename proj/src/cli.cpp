#include "entrobound/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "entrobound/config.hpp"
#include "entrobound/sha256.hpp"

namespace entrobound::cli {

namespace {

namespace fs = std::filesystem;

void write_output(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_text_file(path, content);
}

std::string cache_key(const RunConfig& config) {
  json key;
  key["model"] = config.model->describe();
  key["counts"] = config.partition.counts;
  key["quad_order"] = config.abstraction.quad.order;
  key["quad_tol"] = config.abstraction.quad.tol;
  key["extremize_mesh"] = config.abstraction.extremize_mesh;
  key["soundness_margin"] = config.abstraction.soundness_margin;
  key["sup_mesh"] = config.sup_mesh;
  key["safety_factor"] = config.safety_factor;
  return sha256_hex(key.dump());
}

struct Built {
  IntervalAbstraction abs;
  GradientConstants constants;
  bool from_cache = false;
};

Built obtain_abstraction(const RunConfig& config, const std::string& file,
                         const std::string& cache) {
  const std::string key = cache_key(config);
  auto load = [&](const std::string& path, bool strict) -> std::optional<Built> {
    if (!fs::exists(path)) return std::nullopt;
    std::string stored_hash;
    IntervalAbstraction abs = abstraction_from_json(read_json_file(path), &stored_hash);
    if (stored_hash != key) {
      if (strict)
        throw ConfigError("abstraction file " + path +
                          " was built from a different model/settings");
      return std::nullopt;
    }
    Built built;
    built.constants = abs.metadata.constants;
    built.abs = std::move(abs);
    built.from_cache = true;
    return built;
  };
  if (!file.empty()) {
    auto built = load(file, /*strict=*/true);
    if (!built) throw ConfigError("abstraction file not found: " + file);
    return std::move(*built);
  }
  if (!cache.empty()) {
    if (auto built = load(cache, /*strict=*/false)) {
      std::cerr << "[entrobound] reusing cached abstraction " << cache
                << " (integration skipped)\n";
      return std::move(*built);
    }
  }
  Built built;
  built.constants = resolve_constants(config);
  built.abs = build_abstraction(*config.model, config.partition, built.constants,
                                config.abstraction);
  if (!cache.empty())
    write_output(cache, abstraction_to_json(built.abs, key).dump(2) + "\n");
  return built;
}

void attach_provenance(json& j, const RunConfig& config) {
  j["config"] = config.resolved;
  j["input_hash"] = config.input_hash;
}

int cmd_abstract(const std::string& config_path, std::string out) {
  RunConfig config = load_config_file(config_path);
  if (out.empty()) out = (fs::path(config.out_dir) / "abstraction.json").string();
  Built built = obtain_abstraction(config, "", "");
  json j = abstraction_to_json(built.abs, cache_key(config));
  write_output(out, j.dump(2) + "\n");
  std::cout << out << "\n";
  return 0;
}

int cmd_bounds(const std::string& config_path, const std::string& abstraction_file,
               const std::string& cache, const std::string& sweep, std::string out,
               std::string sweep_csv) {
  RunConfig config = load_config_file(config_path);
  if (config.model->controlled())
    throw ConfigError("bounds: the configured model has actions; "
                      "use synthesize, or configure a chain model");
  if (out.empty()) out = (fs::path(config.out_dir) / "bounds.json").string();

  BoundsSettings settings;
  settings.solver = config.solver;
  settings.retain_values = config.write_values;

  auto run_at = [&](const GridPartition& partition, const Built& built) {
    EntropyGeometry geom = make_geometry(partition, built.constants, config.base);
    ConstantsEcho echo = make_constants_echo(built.constants, partition,
                                             config.model->horizon(), config.base);
    return compute_bounds(built.abs, config.model->horizon(), geom, echo, settings);
  };

  if (!sweep.empty()) {
    auto sep = sweep.find("..");
    if (sep == std::string::npos)
      throw ConfigError("--sweep expects the form A..B, e.g. 2..10");
    int lo = std::stoi(sweep.substr(0, sep));
    int hi = std::stoi(sweep.substr(sep + 2));
    if (lo < 1 || hi < lo) throw ConfigError("--sweep range is empty or invalid");
    std::vector<std::pair<int, BoundsReport>> reports;
    for (int n = lo; n <= hi; ++n) {
      RunConfig cfg = load_config_file(config_path);
      std::vector<int> counts(cfg.partition.dim(), n);
      cfg.partition = build_uniform_grid(cfg.model->box(), counts);
      Built built;
      built.constants = resolve_constants(cfg);
      built.abs = build_abstraction(*cfg.model, cfg.partition, built.constants,
                                    cfg.abstraction);
      EntropyGeometry geom = make_geometry(cfg.partition, built.constants, cfg.base);
      ConstantsEcho echo = make_constants_echo(built.constants, cfg.partition,
                                               cfg.model->horizon(), cfg.base);
      reports.emplace_back(n, compute_bounds(built.abs, cfg.model->horizon(), geom,
                                             echo, settings));
    }
    if (sweep_csv.empty())
      sweep_csv = (fs::path(config.out_dir) / "sweep.csv").string();
    write_output(sweep_csv, mean_width_csv(reports));
    json j;
    j["format"] = "entrobound-sweep-v1";
    json rows = json::array();
    for (const auto& [n, r] : reports) {
      json row = bounds_report_to_json(r);
      row["N"] = n;
      rows.push_back(row);
    }
    j["reports"] = rows;
    attach_provenance(j, config);
    write_output(out, j.dump(2) + "\n");
    std::cout << out << "\n" << sweep_csv << "\n";
    return 0;
  }

  Built built = obtain_abstraction(config, abstraction_file, cache);
  BoundsReport report = run_at(config.partition, built);
  json j = bounds_report_to_json(report);
  j["abstraction_cached"] = built.from_cache;
  attach_provenance(j, config);
  write_output(out, j.dump(2) + "\n");
  std::cout << out << "\n";
  return 0;
}

int cmd_synthesize(const std::string& config_path, const std::string& cache,
                   std::string out, std::string policy_prefix) {
  RunConfig config = load_config_file(config_path);
  if (!config.model->controlled())
    throw ConfigError("synthesize: the configured model has no actions");
  if (out.empty()) out = (fs::path(config.out_dir) / "synthesis.json").string();
  if (policy_prefix.empty())
    policy_prefix = (fs::path(config.out_dir) / "policy").string();

  Built built = obtain_abstraction(config, "", cache);
  EntropyGeometry geom = make_geometry(config.partition, built.constants, config.base);
  ConstantsEcho echo = make_constants_echo(built.constants, config.partition,
                                           config.model->horizon(), config.base);
  SynthesisReport report = synthesize(built.abs, config.model->horizon(), geom, echo,
                                      config.sigma_sign, config.solver);
  report.phi_scale = config.phi;
  Policy dp = unregularized_policy(built.abs, config.model->horizon());

  const std::string global_path = policy_prefix + "_global.json";
  const std::string local_path = policy_prefix + "_local.json";
  const std::string dp_path = policy_prefix + "_dp.json";
  write_output(global_path, policy_to_json(report.policy_global).dump(2) + "\n");
  write_output(local_path, policy_to_json(report.policy_local).dump(2) + "\n");
  write_output(dp_path, policy_to_json(dp).dump(2) + "\n");

  json j = synthesis_report_to_json(report);
  j["policy_files"] = {{"global", global_path}, {"local", local_path}, {"dp", dp_path}};
  attach_provenance(j, config);
  write_output(out, j.dump(2) + "\n");
  std::cout << out << "\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& policy_path,
                 const std::string& report_path, std::uint64_t seed_override,
                 bool has_seed, std::uint64_t samples_override, bool has_samples,
                 std::string out, std::string trajectories_csv) {
  RunConfig config = load_config_file(config_path);
  if (out.empty()) out = (fs::path(config.out_dir) / "mc.json").string();
  std::uint64_t seed = has_seed ? seed_override : config.seed;
  std::uint64_t samples = has_samples ? samples_override : config.samples;

  std::optional<Policy> policy;
  if (!policy_path.empty()) policy = policy_from_json(read_json_file(policy_path));
  if (config.model->controlled() && !policy)
    throw ConfigError("simulate: controlled model requires --policy");
  if (policy && policy->num_states != config.partition.cell_count())
    throw ConfigError("simulate: policy shape does not match the configured partition");

  const GridPartition* partition = policy ? &config.partition : nullptr;
  const Policy* pol = policy ? &*policy : nullptr;

  json j;
  j["format"] = "entrobound-mc-v1";
  McEstimate kl = mc_kl_to_uniform(*config.model, partition, pol, samples, seed,
                                   config.base);
  j["kl_to_uniform"] = mc_estimate_to_json(kl, "kl_to_uniform", config.base);
  std::optional<McEstimate> objective;
  if (config.model->has_costs() && pol) {
    McEstimate cost = mc_expected_cost(*config.model, partition, pol, samples, seed);
    j["expected_cost"] = mc_estimate_to_json(cost, "expected_cost", config.base);
    objective = mc_objective(*config.model, partition, pol, config.sigma_sign, samples,
                             seed, config.base);
    j["objective"] = mc_estimate_to_json(*objective, "objective", config.base);
  }

  if (!report_path.empty()) {
    json report = read_json_file(report_path);
    json bracket;
    auto se3 = [](const McEstimate& e) {
      return e.std_error ? 3.0 * *e.std_error : 0.0;
    };
    if (report.value("format", "") == "entrobound-bounds-v1") {
      double lo = report.at("lower").get<double>();
      double hi = std::min(report.at("upper_global").get<double>(),
                           report.at("upper_local").get<double>());
      bracket["quantity"] = "kl_to_uniform";
      bracket["lower"] = lo;
      bracket["upper"] = hi;
      bracket["estimate"] = kl.mean;
      bracket["holds"] = (lo - se3(kl) <= kl.mean) && (kl.mean <= hi + se3(kl));
    } else if (report.value("format", "") == "entrobound-synthesis-v1" && objective) {
      bracket["quantity"] = "objective";
      bracket["estimate"] = objective->mean;
      for (const std::string pair : {"certified_global", "certified_local",
                                     "discrete_global", "discrete_local"}) {
        double lo = report.at(pair).at("lower").get<double>();
        double hi = report.at(pair).at("upper").get<double>();
        bracket[pair] = {{"lower", lo},
                         {"upper", hi},
                         {"holds", lo - se3(*objective) <= objective->mean &&
                                       objective->mean <= hi + se3(*objective)}};
      }
    } else {
      throw ConfigError("--report: unsupported report format for bracket checking");
    }
    j["bracket"] = bracket;
  }

  if (!trajectories_csv.empty() || config.trajectory_csv) {
    if (trajectories_csv.empty())
      trajectories_csv = (fs::path(config.out_dir) / "trajectories.csv").string();
    auto trajectories = simulate(*config.model, partition, pol,
                                 std::min<std::uint64_t>(samples, 1000), seed);
    write_output(trajectories_csv, trajectories_to_csv(trajectories));
  }

  attach_provenance(j, config);
  write_output(out, j.dump(2) + "\n");
  std::cout << out << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"entrobound: certified trajectory-entropy bounds and "
               "entropy-regularized policy synthesis for continuous-state "
               "Markov systems via interval abstractions"};
  app.require_subcommand(1);

  std::string config_path, out, abstraction_file, cache, sweep, sweep_csv;
  std::string policy_path, report_path, policy_prefix, trajectories_csv;
  std::uint64_t seed = 0, samples = 0;

  auto* abstract = app.add_subcommand("abstract", "Build and store the interval abstraction");
  abstract->add_option("--config", config_path, "Run configuration (JSON)")->required();
  abstract->add_option("--out", out, "Output abstraction file");

  auto* bounds = app.add_subcommand("bounds", "Entropy bounds for a chain model");
  bounds->add_option("--config", config_path, "Run configuration (JSON)")->required();
  bounds->add_option("--abstraction", abstraction_file, "Load a stored abstraction");
  bounds->add_option("--cache", cache, "Abstraction cache file (reuse when it matches)");
  bounds->add_option("--sweep", sweep, "Resolution sweep A..B");
  bounds->add_option("--sweep-csv", sweep_csv, "CSV output for the sweep");
  bounds->add_option("--out", out, "Report output file");

  auto* synth = app.add_subcommand("synthesize", "Entropy-regularized policy synthesis");
  synth->add_option("--config", config_path, "Run configuration (JSON)")->required();
  synth->add_option("--cache", cache, "Abstraction cache file");
  synth->add_option("--out", out, "Report output file");
  synth->add_option("--policy-prefix", policy_prefix, "Prefix for policy files");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo validation");
  sim->add_option("--config", config_path, "Run configuration (JSON)")->required();
  sim->add_option("--policy", policy_path, "Policy file (required for MDP models)");
  sim->add_option("--report", report_path, "Bounds/synthesis report for bracket checks");
  auto* seed_opt = sim->add_option("--seed", seed, "Override the configured seed");
  auto* samples_opt = sim->add_option("--samples", samples, "Override sample count");
  sim->add_option("--out", out, "Estimate output file");
  sim->add_option("--trajectories", trajectories_csv, "Trajectory CSV dump");

  try {
    app.parse(argc, argv);
    if (abstract->parsed()) return cmd_abstract(config_path, out);
    if (bounds->parsed())
      return cmd_bounds(config_path, abstraction_file, cache, sweep, out, sweep_csv);
    if (synth->parsed()) return cmd_synthesize(config_path, cache, out, policy_prefix);
    if (sim->parsed())
      return cmd_simulate(config_path, policy_path, report_path, seed,
                          seed_opt->count() > 0, samples, samples_opt->count() > 0, out,
                          trajectories_csv);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const GuardError& e) {
    std::cerr << "guard violation: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace entrobound::cli
