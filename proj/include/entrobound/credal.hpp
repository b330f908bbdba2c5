#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "entrobound/common.hpp"
#include "entrobound/geometry.hpp"

namespace entrobound {

/// One abstraction row: the transition-interval set
/// { p in simplex : lower <= p <= upper }.
struct AmbiguityRow {
  std::vector<double> lower;
  std::vector<double> upper;

  int size() const { return static_cast<int>(lower.size()); }
  bool degenerate() const;
  /// Throws NumericalError when the set is empty or malformed.
  void validate() const;
};

/// Measure bookkeeping shared by every entropy functional of a run:
/// cell volumes, dimension, resolution, gradient constant for the
/// per-step correction, and the logarithm base applied uniformly.
struct EntropyGeometry {
  int state_dim = 1;
  double delta_bar = 0.0;
  double grad_bound = 0.0;  // bound on |grad q(x,.)| feeding the per-step eps
  LogBase base = LogBase::Natural;
  double log_lambda = 0.0;                 // ln lambda(X)
  std::vector<double> log_cell_volumes;    // ln lambda(X_j)
  double ln_base_div = 1.0;
  double eps_coeff = 0.0;  // (n_x/2) * grad_bound * delta_bar^(n_x+1)

  static EntropyGeometry from_partition(const GridPartition& partition,
                                        double grad_bound, LogBase base);
};

/// Phi(p, V) = sum_j p_j log(p_j lambda(X)/lambda(X_j)) + sum_j p_j V_j,
/// with the 0 log 0 = 0 convention.
double phi(std::span<const double> p, std::span<const double> V,
           const EntropyGeometry& geom);

/// Phi with the per-step discretization correction folded in:
/// Phi(p,V) + epsilon(p, n_x, grad_bound, delta_bar).
double phi_eps(std::span<const double> p, std::span<const double> V,
               const EntropyGeometry& geom);

/// Discretization-difference bound
/// eps(p,n,L,db) = sum_t p_t log(1 + (n/(2 p_t)) L db^(n+1)).
/// Terms with p_t = 0 contribute 0; evaluated via log1p identities.
double epsilon_correction(std::span<const double> p, int n, double grad_bound,
                          double delta_bar, LogBase base = LogBase::Natural);

/// Worst-case (uniform-weights) value log(1 + (n/2)|S| L db^(n+1)),
/// taking log|S| and log L so astronomically large counts stay finite.
double global_epsilon_log(int n, double log_num_cells, double log_grad_bound,
                          double delta_bar, LogBase base = LogBase::Natural);
double global_epsilon(int n, double log_num_cells, double grad_bound,
                      double delta_bar, LogBase base = LogBase::Natural);

/// Maximal density value attainable inside one cell by a distribution
/// with mass p_t, cell volume lambda_t = prod(deltas), and gradient
/// bound L: p_t/lambda_t + (L/2) * sum_j deltas_j.
double cell_max_density(double mass, double cell_volume, double grad_bound,
                        std::span<const double> deltas);

enum class ExtremeSense { Min, Max };

struct LinearExtremeResult {
  double value;
  std::vector<double> p;
};

/// Greedy optimizer of sum_j c_j p_j over an ambiguity row. Slack is
/// poured in order of descending (max) or ascending (min) coefficient,
/// ties broken by lowest index; the result is an extreme point.
LinearExtremeResult linear_extreme(const AmbiguityRow& row, std::span<const double> c,
                                   ExtremeSense sense);

enum class OptimizerMode { Degenerate, Exact, Heuristic };

struct SolverSettings {
  double vertex_budget = 1e6;   // max enumeration work before heuristic fallback
  int heuristic_starts = 32;
  double fw_tol = 1e-9;
  int fw_max_iters = 10000;
  std::uint64_t seed = 20250801;
  bool force_heuristic = false;  // audit switch
};

struct RowOptResult {
  double value = 0.0;
  std::vector<double> p;
  OptimizerMode mode = OptimizerMode::Degenerate;
  double cert_gap = 0.0;  // certified distance to the true optimum
  int iterations = 0;
};

/// Maximizes Phi (or Phi^eps) over the row. The objective is separable
/// convex, so the maximum is attained at an extreme point: exact mode
/// enumerates all extreme points when the work fits the vertex budget,
/// otherwise multi-start steepest ascent over vertex neighborhoods.
RowOptResult robust_max_convex(const AmbiguityRow& row, std::span<const double> V,
                               const EntropyGeometry& geom, bool use_eps,
                               const SolverSettings& settings, std::uint64_t stream = 0);

/// Minimizes the convex Phi over the row by away-step conditional
/// gradient with linear_extreme as the direction oracle. Stops when a
/// Lagrangian dual certificate puts the primal within fw_tol of the
/// minimum (cert_gap reports the achieved certificate).
RowOptResult robust_min_convex(const AmbiguityRow& row, std::span<const double> V,
                               const EntropyGeometry& geom,
                               const SolverSettings& settings);

}  // namespace entrobound
