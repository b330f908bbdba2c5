#include "entrobound/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>

#include "entrobound/parallel.hpp"

namespace entrobound {

namespace {

struct StepValue {
  double value = 0.0;
  double fw_gap = 0.0;  // certificate slack when a conditional-gradient solve is involved
  OptimizerMode mode = OptimizerMode::Exact;
};

std::vector<double> negate(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = -v[j];
  return out;
}

// Worst case of sigma*KL(p) + p.V over the row (adversary inflates the
// objective the policy must pay for).
StepValue pessimistic_step(const AmbiguityRow& row, std::span<const double> v, int sigma,
                           bool use_eps, const EntropyGeometry& geom,
                           const SolverSettings& solver, std::uint64_t stream) {
  if (sigma > 0) {
    auto res = robust_max_convex(row, v, geom, use_eps, solver, stream);
    return {res.value, 0.0, res.mode};
  }
  // max(-KL + p.V) = -min(KL + p.(-V)); the FW value overshoots the min by
  // at most its certificate, which the caller adds back to stay an upper bound.
  auto res = robust_min_convex(row, negate(v), geom, solver);
  return {-res.value, res.cert_gap, res.mode};
}

// Best case of sigma*KL(p) + p.V over the row (policy evaluation side).
StepValue optimistic_step(const AmbiguityRow& row, std::span<const double> v, int sigma,
                          bool use_eps, const EntropyGeometry& geom,
                          const SolverSettings& solver, std::uint64_t stream) {
  if (sigma > 0) {
    auto res = robust_min_convex(row, v, geom, solver);
    return {res.value, res.cert_gap, res.mode};
  }
  // min(-KL - eps + p.V) = -max(KL + eps + p.(-V)).
  auto res = robust_max_convex(row, negate(v), geom, use_eps, solver, stream);
  return {-res.value, 0.0, res.mode};
}

struct VariantResult {
  Policy policy;
  double upper_raw = 0.0;   // sigma*KL(pi) (+eps(pi) when folded) + pi.V_upper
  double lower_raw = 0.0;
  double upper_debit = 0.0;
  double lower_debit = 0.0;
  SolverStats stats;
};

// One full backward pass for one correction variant (global or local).
VariantResult run_variant(const IntervalAbstraction& abs, int horizon,
                          const EntropyGeometry& geom, int sigma, bool local,
                          const SolverSettings& solver) {
  const int n = abs.num_states();
  const int actions = abs.num_action_slots();
  // eps placement: sigma=+1 folds it into the pessimistic (upper) recursion
  // of the local variant; sigma=-1 into the optimistic (lower) evaluation.
  const bool eps_in_upper = local && sigma > 0;
  const bool eps_in_lower = local && sigma < 0;

  VariantResult out;
  out.policy.horizon = horizon;
  out.policy.num_states = n;
  out.policy.action_values = abs.action_values;
  out.policy.actions.assign(static_cast<std::size_t>(horizon) * n, 0);

  std::vector<double> v_upper(n, 0.0), v_lower(n, 0.0);
  std::vector<double> next_upper(n), next_lower(n);
  std::mutex stats_mutex;

  for (int k = horizon - 1; k >= 0; --k) {
    std::vector<double> upper_gaps(n, 0.0), lower_gaps(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
      const std::uint64_t stream = (static_cast<std::uint64_t>(k) * n + i) * 4;
      int best_action = 0;
      double best_value = std::numeric_limits<double>::infinity();
      double best_gap = 0.0;
      for (int a = 0; a < actions; ++a) {
        AmbiguityRow row = abs.row(static_cast<int>(i), a);
        StepValue worst = pessimistic_step(row, v_upper, sigma, eps_in_upper, geom,
                                           solver, stream + (local ? 1 : 0));
        double cand = (*abs.g_upper)[a][i] + worst.value;
        if (cand < best_value) {  // strict: ties keep the lowest action index
          best_value = cand;
          best_action = a;
          best_gap = worst.fw_gap;
        }
      }
      out.policy.at(k, static_cast<int>(i)) = best_action;
      next_upper[i] = best_value;
      upper_gaps[i] = best_gap;

      AmbiguityRow row = abs.row(static_cast<int>(i), best_action);
      StepValue best_case = optimistic_step(row, v_lower, sigma, eps_in_lower, geom,
                                            solver, stream + 2 + (local ? 1 : 0));
      next_lower[i] = (*abs.g_lower)[best_action][i] + best_case.value;
      lower_gaps[i] = best_case.fw_gap;
      {
        std::lock_guard<std::mutex> lock(stats_mutex);
        out.stats.max_fw_gap =
            std::max({out.stats.max_fw_gap, best_gap, best_case.fw_gap});
        if (best_case.mode == OptimizerMode::Exact)
          ++out.stats.exact_rows;
        else if (best_case.mode == OptimizerMode::Heuristic)
          ++out.stats.heuristic_rows;
        else
          ++out.stats.degenerate_rows;
      }
    });
    double upper_step = 0.0, lower_step = 0.0;
    for (int i = 0; i < n; ++i) {
      upper_step = std::max(upper_step, upper_gaps[i]);
      lower_step = std::max(lower_step, lower_gaps[i]);
    }
    if (sigma < 0) out.upper_debit += std::max(solver.fw_tol, upper_step);
    if (sigma > 0) out.lower_debit += std::max(solver.fw_tol, lower_step);
    v_upper.swap(next_upper);
    v_lower.swap(next_lower);
  }

  if (sigma > 0) {
    out.upper_raw = eps_in_upper ? phi_eps(abs.pi, v_upper, geom) : phi(abs.pi, v_upper, geom);
    out.lower_raw = phi(abs.pi, v_lower, geom);
  } else {
    out.upper_raw = -phi(abs.pi, negate(v_upper), geom);
    out.lower_raw = eps_in_lower ? -phi_eps(abs.pi, negate(v_lower), geom)
                                 : -phi(abs.pi, negate(v_lower), geom);
  }
  return out;
}

}  // namespace

SynthesisReport synthesize(const IntervalAbstraction& abs, int horizon,
                           const EntropyGeometry& geom, const ConstantsEcho& constants,
                           int sigma, const SolverSettings& solver) {
  if (horizon < 1) throw GuardError("synthesize: horizon must be >= 1");
  if (sigma != 1 && sigma != -1) throw GuardError("synthesize: sigma must be +1 or -1");
  if (!abs.g_lower || !abs.g_upper)
    throw GuardError("synthesize: abstraction carries no stage-cost tables");
  const auto start_time = std::chrono::steady_clock::now();

  SynthesisReport report;
  report.sigma = sigma;
  report.constants = constants;
  report.eps_global = global_epsilon_log(constants.traj_dim, constants.log_num_traj_cells,
                                         constants.traj_grad_log, constants.delta_bar,
                                         geom.base);

  VariantResult global = run_variant(abs, horizon, geom, sigma, /*local=*/false, solver);
  VariantResult local = run_variant(abs, horizon, geom, sigma, /*local=*/true, solver);

  report.policy_global = std::move(global.policy);
  report.policy_local = std::move(local.policy);
  report.stats = global.stats;
  report.stats.exact_rows += local.stats.exact_rows;
  report.stats.heuristic_rows += local.stats.heuristic_rows;
  report.stats.degenerate_rows += local.stats.degenerate_rows;
  report.stats.max_fw_gap = std::max(global.stats.max_fw_gap, local.stats.max_fw_gap);
  report.stats.fw_debit = global.lower_debit + global.upper_debit;

  // Discrete sandwiches: sound for cost + discrete KL.
  report.discrete_global = {global.lower_raw - global.lower_debit,
                            global.upper_raw + global.upper_debit};
  report.discrete_local = {local.lower_raw - local.lower_debit,
                           local.upper_raw + local.upper_debit};

  // Certified sandwiches for the continuous objective: the side that
  // over-approximates the +KL quantity picks up the correction term.
  if (sigma > 0) {
    report.certified_global = {report.discrete_global.lower,
                               report.discrete_global.upper + report.eps_global};
    report.certified_local = report.discrete_local;  // eps folded per step already
  } else {
    report.certified_global = {report.discrete_global.lower - report.eps_global,
                               report.discrete_global.upper};
    report.certified_local = report.discrete_local;  // eps folded into the lower side
  }

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return report;
}

Policy unregularized_policy(const IntervalAbstraction& abs, int horizon) {
  if (horizon < 1) throw GuardError("unregularized_policy: horizon must be >= 1");
  if (!abs.g_lower || !abs.g_upper)
    throw GuardError("unregularized_policy: abstraction carries no stage-cost tables");
  const int n = abs.num_states();
  const int actions = abs.num_action_slots();

  Policy policy;
  policy.horizon = horizon;
  policy.num_states = n;
  policy.action_values = abs.action_values;
  policy.actions.assign(static_cast<std::size_t>(horizon) * n, 0);

  std::vector<double> value(n, 0.0), next(n);
  for (int k = horizon - 1; k >= 0; --k) {
    parallel_for(n, [&](std::size_t i) {
      int best_action = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < actions; ++a) {
        AmbiguityRow row = abs.row(static_cast<int>(i), a);
        auto worst = linear_extreme(row, value, ExtremeSense::Max);
        double cand = (*abs.g_upper)[a][i] + worst.value;
        if (cand < best) {
          best = cand;
          best_action = a;
        }
      }
      policy.at(k, static_cast<int>(i)) = best_action;
      next[i] = best;
    });
    value.swap(next);
  }
  return policy;
}

}  // namespace entrobound
