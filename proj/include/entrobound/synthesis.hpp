#pragma once

#include <vector>

#include "entrobound/bounds.hpp"

namespace entrobound {

/// Deterministic time-varying policy on the abstract states.
struct Policy {
  int horizon = 0;
  int num_states = 0;
  std::vector<double> action_values;  // legend
  std::vector<int> actions;           // horizon x num_states, row-major

  int& at(int k, int i) { return actions[static_cast<std::size_t>(k) * num_states + i]; }
  int at(int k, int i) const { return actions[static_cast<std::size_t>(k) * num_states + i]; }
};

struct BoundPair {
  double lower = 0.0;
  double upper = 0.0;
};

/// Two bound-minimizing policies with their certified objective sandwiches.
/// `certified_*` are valid for the continuous system (discretization
/// corrections included on the side that needs them, which depends on the
/// regularization sign); `discrete_*` are the plain interval-DP sandwiches
/// on cost plus discrete KL, mirroring the values the backward recursion
/// produces before any continuous-correction term.
struct SynthesisReport {
  Policy policy_global;
  Policy policy_local;
  int sigma = 1;
  double phi_scale = 0.0;  // cost scale echo, set by the caller
  BoundPair certified_global;
  BoundPair certified_local;
  BoundPair discrete_global;
  BoundPair discrete_local;
  double eps_global = 0.0;
  ConstantsEcho constants;
  SolverStats stats;
  double runtime_seconds = 0.0;
};

/// Backward robust dynamic programming on the IMDP for the objective
/// E[sum g] + sigma * KL(T||U). The pessimistic recursion selects the
/// policy; the optimistic recursion evaluates it. sigma=+1 penalizes
/// predictability (upper side carries the corrections); sigma=-1 rewards
/// it (corrections move to the lower side, and both policies coincide).
SynthesisReport synthesize(const IntervalAbstraction& abs, int horizon,
                           const EntropyGeometry& geom, const ConstantsEcho& constants,
                           int sigma, const SolverSettings& solver = {});

/// Baseline: robust (min over actions of worst-case expectation) value
/// iteration on the stage costs alone.
Policy unregularized_policy(const IntervalAbstraction& abs, int horizon);

}  // namespace entrobound
