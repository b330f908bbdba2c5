#pragma once

#include <optional>
#include <string>
#include <vector>

#include "entrobound/credal.hpp"
#include "entrobound/geometry.hpp"
#include "entrobound/kernels.hpp"

namespace entrobound {

struct AbstractionSettings {
  QuadratureSettings quad;
  int extremize_mesh = 5;     // tensor sample points per dimension of a source cell
  bool soundness_margin = true;  // Lipschitz inflation of sampled extrema
  double pi_drift_abort = 1e-6;  // quadrature drift on sum(pi) that aborts
};

struct AbstractionMetadata {
  double quad_tol = 0.0;
  int extremize_mesh = 0;
  bool margin_used = true;
  double margin_source_grad = 0.0;  // gradient constant behind the margin
  std::string model_description;
  GradientConstants constants;
};

/// The finite IMC/IMDP the value recursions consume: initial distribution,
/// per-action interval transition matrices, optional conservative costs.
struct IntervalAbstraction {
  GridPartition partition;
  std::vector<double> pi;
  std::vector<double> action_values;             // empty for chains
  std::vector<std::vector<double>> p_lower;      // [action][i * |X| + j]
  std::vector<std::vector<double>> p_upper;
  std::optional<std::vector<std::vector<double>>> g_lower;  // [action][i]
  std::optional<std::vector<std::vector<double>>> g_upper;
  AbstractionMetadata metadata;

  int num_states() const { return partition.cell_count(); }
  int num_action_slots() const { return static_cast<int>(p_lower.size()); }
  AmbiguityRow row(int state, int action_slot) const;
  /// Checks the interval invariants (ordering, row feasibility, pi simplex).
  void validate() const;
};

/// pi_i = integral of q0 over cell i, renormalized to sum exactly to one.
std::vector<double> initial_distribution(const KernelModel& model,
                                         const GridPartition& partition,
                                         const AbstractionSettings& settings = {});

/// One action's interval transition matrix pair: mesh extremization of
/// x -> integral_cell_j q(x,.) over each source cell, inflated by the
/// Lipschitz margin grad_source * lambda(X_j) * (sum_d h_d)/2, clamped
/// and row-repaired.
std::pair<std::vector<double>, std::vector<double>> transition_intervals(
    const KernelModel& model, const GridPartition& partition, int action,
    double grad_source, const AbstractionSettings& settings = {});

/// Conservative stage-cost tables (g_upper, g_lower) per state and action.
std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
abstract_costs(const KernelModel& model, const GridPartition& partition,
               const AbstractionSettings& settings = {});

/// Full abstraction build (parallel over rows).
IntervalAbstraction build_abstraction(const KernelModel& model,
                                      const GridPartition& partition,
                                      const GradientConstants& constants,
                                      const AbstractionSettings& settings = {});

}  // namespace entrobound
