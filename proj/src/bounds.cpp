#include "entrobound/bounds.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>

#include "entrobound/parallel.hpp"

namespace entrobound {

BoundsReport compute_bounds(const IntervalAbstraction& abs, int horizon,
                            const EntropyGeometry& geom, const ConstantsEcho& constants,
                            const BoundsSettings& settings) {
  if (horizon < 1) throw GuardError("compute_bounds: horizon must be >= 1");
  if (abs.num_action_slots() != 1)
    throw GuardError("compute_bounds: abstraction must have a single kernel; "
                     "pin an action or use synthesize for controlled models");
  const int n = abs.num_states();
  const auto start_time = std::chrono::steady_clock::now();

  BoundsReport report;
  report.constants = constants;

  std::vector<double> v_lower(n, 0.0), v_upper(n, 0.0), v_local(n, 0.0);
  std::vector<double> next_lower(n), next_upper(n), next_local(n);
  if (settings.retain_values) {
    report.values_lower.emplace();
    report.values_upper.emplace();
    report.values_local.emplace();
  }

  std::vector<AmbiguityRow> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = abs.row(i, 0);

  std::mutex stats_mutex;
  for (int k = horizon - 1; k >= 0; --k) {
    std::vector<double> step_gaps(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
      const std::uint64_t stream = (static_cast<std::uint64_t>(k) * n + i) * 4;
      auto lo = robust_min_convex(rows[i], v_lower, geom, settings.solver);
      auto up = robust_max_convex(rows[i], v_upper, geom, /*use_eps=*/false,
                                  settings.solver, stream);
      auto loc = robust_max_convex(rows[i], v_local, geom, /*use_eps=*/true,
                                   settings.solver, stream + 1);
      next_lower[i] = lo.value;
      next_upper[i] = up.value;
      next_local[i] = loc.value;
      step_gaps[i] = lo.cert_gap;

      double audit_gap = -1.0;
      if (settings.audit_heuristic && up.mode == OptimizerMode::Exact) {
        SolverSettings forced = settings.solver;
        forced.force_heuristic = true;
        auto up_h = robust_max_convex(rows[i], v_upper, geom, false, forced, stream + 2);
        auto loc_h = robust_max_convex(rows[i], v_local, geom, true, forced, stream + 3);
        audit_gap = std::max(std::abs(up.value - up_h.value),
                             std::abs(loc.value - loc_h.value));
      }
      {
        std::lock_guard<std::mutex> lock(stats_mutex);
        auto count = [&](OptimizerMode m) {
          if (m == OptimizerMode::Exact)
            ++report.stats.exact_rows;
          else if (m == OptimizerMode::Heuristic)
            ++report.stats.heuristic_rows;
          else
            ++report.stats.degenerate_rows;
        };
        count(up.mode);
        count(loc.mode);
        report.stats.max_fw_gap = std::max(report.stats.max_fw_gap, lo.cert_gap);
        report.stats.max_audit_gap = std::max(report.stats.max_audit_gap, audit_gap);
      }
    });
    double step_debit = settings.solver.fw_tol;
    for (double g : step_gaps) step_debit = std::max(step_debit, g);
    report.stats.fw_debit += step_debit;
    v_lower.swap(next_lower);
    v_upper.swap(next_upper);
    v_local.swap(next_local);
    if (settings.retain_values) {
      report.values_lower->push_back(v_lower);
      report.values_upper->push_back(v_upper);
      report.values_local->push_back(v_local);
    }
  }

  report.eps_global = global_epsilon_log(constants.traj_dim, constants.log_num_traj_cells,
                                         constants.traj_grad_log, constants.delta_bar,
                                         geom.base);
  report.lower = phi(abs.pi, v_lower, geom) - report.stats.fw_debit;
  report.upper_global = phi(abs.pi, v_upper, geom) + report.eps_global;
  report.upper_local = phi_eps(abs.pi, v_local, geom);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return report;
}

double enumerate_discrete_kl(const std::vector<double>& pi,
                             const std::vector<std::vector<double>>& kernels_per_step,
                             const std::vector<double>& cell_volumes, double box_volume,
                             int horizon, LogBase base) {
  const int n = static_cast<int>(pi.size());
  if (horizon < 1) throw GuardError("enumerate_discrete_kl: horizon must be >= 1");
  double traj_count = std::pow(static_cast<double>(n), horizon + 1);
  if (traj_count > 1e6)
    throw GuardError("enumerate_discrete_kl: |X|^(K+1) exceeds the 1e6 guard");
  if (static_cast<int>(cell_volumes.size()) != n)
    throw GuardError("enumerate_discrete_kl: cell volume size mismatch");
  for (const auto& kernel : kernels_per_step)
    if (static_cast<int>(kernel.size()) != n * n)
      throw GuardError("enumerate_discrete_kl: kernel size mismatch");

  std::vector<double> log_vol(n);
  for (int j = 0; j < n; ++j) log_vol[j] = std::log(cell_volumes[j]);
  const double log_box = std::log(box_volume);

  auto kernel_at = [&](int k) -> const std::vector<double>& {
    return kernels_per_step.size() == 1 ? kernels_per_step[0]
                                        : kernels_per_step.at(k);
  };

  double sum = 0.0;
  std::vector<int> idx(horizon + 1, 0);
  for (;;) {
    double mass = pi[idx[0]];
    double log_cell = log_vol[idx[0]];
    for (int k = 1; k <= horizon && mass > 0.0; ++k) {
      mass *= kernel_at(k - 1)[static_cast<std::size_t>(idx[k - 1]) * n + idx[k]];
      log_cell += log_vol[idx[k]];
    }
    if (mass > 0.0)
      sum += mass * (std::log(mass) + (horizon + 1) * log_box - log_cell);
    int k = horizon;
    while (k >= 0 && ++idx[k] == n) idx[k--] = 0;
    if (k < 0) break;
  }
  return sum / log_base_divisor(base);
}

std::string mean_width_csv(const std::vector<std::pair<int, BoundsReport>>& reports) {
  if (reports.size() < 2)
    throw GuardError("mean_width_csv: need >=2 reports");
  std::ostringstream out;
  out.precision(17);
  out << "N,lower,upper_global,upper_local,eps_global,runtime_s\n";
  for (const auto& [n, r] : reports) {
    out << n << "," << r.lower << "," << r.upper_global << "," << r.upper_local << ","
        << r.eps_global << "," << r.runtime_seconds << "\n";
  }
  return out.str();
}

}  // namespace entrobound
