#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "entrobound/geometry.hpp"
#include "entrobound/kernels.hpp"
#include "entrobound/synthesis.hpp"

namespace entrobound {

struct Trajectory {
  int state_dim = 0;
  std::vector<double> states;  // (K+1) * n_x, flat
  std::vector<int> actions;    // K entries for controlled runs, else empty

  std::span<const double> state(int k) const {
    return {states.data() + static_cast<std::size_t>(k) * state_dim,
            static_cast<std::size_t>(state_dim)};
  }
  int length() const { return static_cast<int>(states.size()) / state_dim; }
};

struct McEstimate {
  double mean = 0.0;
  std::optional<double> std_error;  // absent for single-sample runs
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

/// Ancestral sampling of M trajectories. Controlled models require a policy
/// (consulted through cell_of at every step) and the matching partition.
/// Reproducible: trajectory t draws from a stream derived from (seed, t),
/// so results are identical for any worker count.
std::vector<Trajectory> simulate(const KernelModel& model, const GridPartition* partition,
                                 const Policy* policy, std::uint64_t samples,
                                 std::uint64_t seed);

/// Plug-in estimate of KL(T||U): sample mean of
/// log q0(x0) + sum_k log q^(u_k)(x_k, x_{k+1}) + (K+1) log lambda(X).
McEstimate mc_kl_to_uniform(const KernelModel& model, const GridPartition* partition,
                            const Policy* policy, std::uint64_t samples,
                            std::uint64_t seed, LogBase base = LogBase::Natural);

/// Sample mean of the cumulative stage cost sum_k g(x_k, u_k).
McEstimate mc_expected_cost(const KernelModel& model, const GridPartition* partition,
                            const Policy* policy, std::uint64_t samples,
                            std::uint64_t seed);

/// Joint estimate of the regularized objective
/// sum_k g(x_k,u_k) + sigma * (log T(s) + log lambda(S)) per trajectory,
/// so the standard error accounts for the correlation of the two terms.
McEstimate mc_objective(const KernelModel& model, const GridPartition* partition,
                        const Policy* policy, int sigma, std::uint64_t samples,
                        std::uint64_t seed, LogBase base = LogBase::Natural);

}  // namespace entrobound
