#pragma once

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "entrobound/geometry.hpp"

namespace entrobound {

struct QuadratureSettings {
  int order = 16;
  double tol = 1e-9;
};

/// Supremum constants of a model's densities, per argument slot.
/// grad_joint is the Assumption-style bound over both arguments;
/// grad_source bounds d/dx of q(x, .) (interval extremization margins);
/// grad_target bounds d/dx' of q(., x') (per-step discretization eps).
struct GradientConstants {
  double sup_density = 0.0;   // L_q, covers q, q0 and every q^u
  double grad_joint = 0.0;    // L_grad_q
  double grad_source = 0.0;
  double grad_target = 0.0;
  bool analytic = false;
  double safety_factor = 1.0;
};

/// L = 2 (L_q)^K L_grad_q, kept alongside its logarithm since the power
/// overflows for long horizons.
struct GradientBound {
  double value;
  double log_value;
};
GradientBound trajectory_gradient_bound(double sup_density, double grad_bound, int horizon);

/// A continuous-state Markov system on a box: initial density, per-action
/// transition densities, optional stage cost, and samplers. Immutable and
/// shareable; samplers take caller-owned generators.
class KernelModel {
 public:
  virtual ~KernelModel() = default;

  const Box& box() const { return box_; }
  int state_dim() const { return box_.dim(); }
  int horizon() const { return horizon_; }

  /// 0 for chains; controlled models report their finite action count.
  virtual int num_actions() const = 0;
  bool controlled() const { return num_actions() > 0; }
  virtual std::vector<double> action_values() const { return {}; }

  virtual double initial_density(std::span<const double> x) const = 0;
  virtual double transition_density(std::span<const double> x,
                                    std::span<const double> xp, int action) const = 0;

  /// Integral of q0 over a cell; default is checked quadrature.
  virtual double initial_cell_mass(const Box& cell, const QuadratureSettings& quad) const;
  /// Integral of q^u(x, .) over a cell; default is checked quadrature.
  virtual double cell_mass(std::span<const double> x, const Box& cell, int action,
                           const QuadratureSettings& quad) const;

  virtual bool has_costs() const { return false; }
  virtual double stage_cost(std::span<const double>, int) const {
    throw GuardError("model has no stage cost");
  }
  /// Exact per-cell cost extrema (min, max) when the model can provide them
  /// (e.g. costs monotone per coordinate); nullopt falls back to sampling.
  virtual std::optional<std::pair<double, double>> cost_range(const Box&, int) const {
    return std::nullopt;
  }
  virtual std::optional<double> cost_lipschitz() const { return std::nullopt; }

  virtual void sample_initial(std::mt19937_64& rng, std::span<double> out) const = 0;
  virtual void sample_step(std::span<const double> x, int action, std::mt19937_64& rng,
                           std::span<double> out) const = 0;

  /// Outer enclosure of the union of supp q^u(x, .) over x in `source`,
  /// when the model knows one. Target cells outside it carry exactly zero
  /// mass, so interval extremization can pin them to [0, 0] without margin.
  virtual std::optional<Box> transition_support(const Box&, int) const {
    return std::nullopt;
  }

  /// Full analytic constants, when the model knows them.
  virtual std::optional<GradientConstants> analytic_bounds() const { return std::nullopt; }
  /// Analytic density supremum alone (kept even when gradients are sampled).
  virtual std::optional<double> analytic_sup_density() const { return std::nullopt; }

  /// Stable textual identity used for cache keys and provenance hashes.
  virtual std::string describe() const = 0;

 protected:
  KernelModel(Box box, int horizon) : box_(std::move(box)), horizon_(horizon) {
    if (horizon_ < 0) throw ConfigError("model: horizon must be >= 0");
  }
  Box box_;
  int horizon_;
};

/// Gaussian random walk on a box with out-of-box mass placed back
/// uniformly. Diagonal covariances take analytic CDF-product paths.
std::unique_ptr<KernelModel> clipped_gaussian_model(
    const Box& box, const std::vector<std::vector<double>>& sigma,
    const std::vector<double>& x0_mean, const std::vector<std::vector<double>>& sigma0,
    int horizon);

struct AvInitialSpec {
  enum class Kind { Triangular, Uniform } kind = Kind::Triangular;
  double a = 0.25;     // left edge
  double b = 0.5;      // right edge
  double mode = 0.375;  // triangular only
};

/// 1-D velocity model: v' = 0.8 v + 0.01 u + w with triangular
/// velocity-dependent noise, actions {0,5,10,15,20}, cost -phi*v.
std::unique_ptr<KernelModel> triangular_av_model(int horizon, double phi,
                                                 const AvInitialSpec& q0 = {});

/// Piecewise-constant densities tabulated on a uniform grid, with
/// user-supplied density/gradient constants.
struct TabulatedSpec {
  Box box;
  std::vector<int> grid;                         // tabulation resolution
  std::vector<double> q0;                        // per tab cell
  std::vector<std::vector<double>> q;            // [action][src*G+dst]
  std::vector<std::vector<double>> costs;        // [action][src], may be empty
  std::vector<double> action_values;             // legend; empty = chain
  int horizon = 1;
  double sup_density = 0.0;
  double grad_bound = 0.0;
};
std::unique_ptr<KernelModel> tabulated_model(TabulatedSpec spec);

/// Sampled density/gradient suprema over a tensor mesh, inflated by the
/// safety factor; analytic values from the model take precedence.
GradientConstants estimate_sup_bounds(const KernelModel& model, int mesh_per_dim,
                                      double safety_factor);

}  // namespace entrobound
