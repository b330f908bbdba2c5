#pragma once

#include <memory>
#include <string>

#include "entrobound/serialize.hpp"

namespace entrobound {

/// Fully resolved run configuration. Unknown keys are rejected with their
/// field path; defaults are documented in the README.
struct RunConfig {
  std::unique_ptr<KernelModel> model;
  GridPartition partition;

  int sigma_sign = 1;
  double phi = 1.0;  // AV cost scale echo

  AbstractionSettings abstraction;
  SolverSettings solver;
  int sup_mesh = 21;
  double safety_factor = 1.1;
  LogBase base = LogBase::Natural;
  std::uint64_t seed = 20250801;
  std::uint64_t samples = 100000;

  std::string out_dir = ".";
  bool write_values = false;
  bool trajectory_csv = false;

  json resolved;            // the full configuration after defaulting
  std::string input_hash;   // content hash of resolved config + model identity
};

RunConfig parse_config(const json& j);
RunConfig load_config_file(const std::string& path);

/// Density/gradient constants for the configured model (analytic when the
/// model provides them, sampled with the safety factor otherwise).
GradientConstants resolve_constants(const RunConfig& config);

EntropyGeometry make_geometry(const GridPartition& partition,
                              const GradientConstants& constants, LogBase base);

ConstantsEcho make_constants_echo(const GradientConstants& constants,
                                  const GridPartition& partition, int horizon,
                                  LogBase base);

}  // namespace entrobound
