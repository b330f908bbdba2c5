#pragma once

#include <optional>
#include <string>
#include <vector>

#include "entrobound/abstraction.hpp"
#include "entrobound/credal.hpp"

namespace entrobound {

struct ConstantsEcho {
  double sup_density = 0.0;     // L_q
  double grad_joint = 0.0;      // L_grad_q
  double grad_source = 0.0;
  double grad_target = 0.0;
  double traj_grad_log = 0.0;   // ln L = ln(2 L_q^K L_grad_q)
  double delta_bar = 0.0;
  int traj_dim = 0;             // n = (K+1) n_x
  double log_num_traj_cells = 0.0;  // ln |S|
  LogBase base = LogBase::Natural;
};

struct SolverStats {
  int exact_rows = 0;
  int heuristic_rows = 0;
  int degenerate_rows = 0;
  double max_fw_gap = 0.0;
  double fw_debit = 0.0;        // soundness debit subtracted from the lower bound
  double max_audit_gap = -1.0;  // worst exact-vs-heuristic difference, when audited
};

/// Output of the three value recursions: certified lower bound, globally
/// corrected upper bound, locally corrected upper bound.
struct BoundsReport {
  double lower = 0.0;
  double upper_global = 0.0;
  double upper_local = 0.0;
  double eps_global = 0.0;
  ConstantsEcho constants;
  SolverStats stats;
  double runtime_seconds = 0.0;
  // Per-step value vectors (index k), retained on request.
  std::optional<std::vector<std::vector<double>>> values_lower;
  std::optional<std::vector<std::vector<double>>> values_upper;
  std::optional<std::vector<std::vector<double>>> values_local;
};

struct BoundsSettings {
  SolverSettings solver;
  bool retain_values = false;
  bool audit_heuristic = false;  // re-solve exact rows heuristically and record the gap
};

/// Backward value iteration over the interval abstraction (single kernel):
/// lower = Phi(pi, V_lower) - debit, upper_local = Phi^eps(pi, V_local),
/// upper_global = Phi(pi, V_upper) + eps(uniform).
BoundsReport compute_bounds(const IntervalAbstraction& abs, int horizon,
                            const EntropyGeometry& geom, const ConstantsEcho& constants,
                            const BoundsSettings& settings = {});

/// Direct evaluation of the discrete KL divergence to uniform over all
/// |X|^(K+1) trajectories of an explicit chain (test oracle; guarded).
double enumerate_discrete_kl(const std::vector<double>& pi,
                             const std::vector<std::vector<double>>& kernels_per_step,
                             const std::vector<double>& cell_volumes, double box_volume,
                             int horizon, LogBase base = LogBase::Natural);

/// CSV rows (N, lower, upper_global, upper_local, eps_global, runtime_s)
/// for a resolution sweep; requires at least two reports.
std::string mean_width_csv(const std::vector<std::pair<int, BoundsReport>>& reports);

}  // namespace entrobound
