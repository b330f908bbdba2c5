#include "entrobound/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>

#include "entrobound/parallel.hpp"

namespace entrobound {

AmbiguityRow IntervalAbstraction::row(int state, int action_slot) const {
  const int n = num_states();
  AmbiguityRow r;
  r.lower.assign(p_lower[action_slot].begin() + static_cast<std::size_t>(state) * n,
                 p_lower[action_slot].begin() + static_cast<std::size_t>(state + 1) * n);
  r.upper.assign(p_upper[action_slot].begin() + static_cast<std::size_t>(state) * n,
                 p_upper[action_slot].begin() + static_cast<std::size_t>(state + 1) * n);
  return r;
}

void IntervalAbstraction::validate() const {
  const int n = num_states();
  if (static_cast<int>(pi.size()) != n)
    throw NumericalError("abstraction: pi size mismatch");
  double pi_sum = 0.0;
  for (double v : pi) {
    if (v < 0.0) throw NumericalError("abstraction: negative pi entry");
    pi_sum += v;
  }
  if (std::abs(pi_sum - 1.0) > 1e-9)
    throw NumericalError("abstraction: pi does not sum to one");
  for (int a = 0; a < num_action_slots(); ++a) {
    for (int i = 0; i < n; ++i) {
      double sum_lo = 0.0, sum_hi = 0.0;
      for (int j = 0; j < n; ++j) {
        double lo = p_lower[a][static_cast<std::size_t>(i) * n + j];
        double hi = p_upper[a][static_cast<std::size_t>(i) * n + j];
        if (lo < 0.0 || hi > 1.0 || lo > hi)
          throw NumericalError("abstraction: interval entry out of order");
        sum_lo += lo;
        sum_hi += hi;
      }
      if (sum_lo > 1.0 + 1e-9 || sum_hi < 1.0 - 1e-9) {
        std::ostringstream msg;
        msg << "abstraction: infeasible row " << i << " (action slot " << a << ")";
        throw NumericalError(msg.str());
      }
    }
  }
  if (g_lower.has_value() != g_upper.has_value())
    throw NumericalError("abstraction: cost tables must come in pairs");
  if (g_lower) {
    for (std::size_t a = 0; a < g_lower->size(); ++a)
      for (int i = 0; i < n; ++i)
        if ((*g_lower)[a][i] > (*g_upper)[a][i])
          throw NumericalError("abstraction: g_lower exceeds g_upper");
  }
}

std::vector<double> initial_distribution(const KernelModel& model,
                                         const GridPartition& partition,
                                         const AbstractionSettings& settings) {
  const int n = partition.cell_count();
  std::vector<double> pi(n);
  parallel_for(n, [&](std::size_t i) {
    pi[i] = model.initial_cell_mass(partition.cell_box(static_cast<int>(i)), settings.quad);
  });
  double sum = 0.0;
  for (double& v : pi) {
    v = std::max(0.0, v);
    sum += v;
  }
  double drift = std::abs(sum - 1.0);
  if (drift > settings.pi_drift_abort) {
    std::ostringstream msg;
    msg << "initial distribution drift " << drift << " exceeds " << settings.pi_drift_abort
        << "; quadrature on q0 is not resolving the cells";
    throw NumericalError(msg.str());
  }
  for (double& v : pi) v /= sum;
  return pi;
}

namespace {

// Tensor mesh over a cell with endpoints included; h_d = side_d / (mesh-1).
std::vector<std::vector<double>> cell_mesh(const Box& cell, int mesh) {
  const int d = cell.dim();
  std::vector<std::vector<double>> points;
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  for (;;) {
    for (int j = 0; j < d; ++j)
      x[j] = mesh == 1 ? 0.5 * (cell.lows[j] + cell.highs[j])
                       : cell.lows[j] + cell.side(j) * idx[j] / (mesh - 1);
    points.push_back(x);
    int j = d - 1;
    while (j >= 0 && ++idx[j] == mesh) idx[j--] = 0;
    if (j < 0) break;
  }
  return points;
}

void repair_row(std::span<double> lower, std::span<double> upper, int row_index) {
  double sum_lo = 0.0, sum_hi = 0.0;
  for (std::size_t j = 0; j < lower.size(); ++j) {
    sum_lo += lower[j];
    sum_hi += upper[j];
  }
  // Widening only: raise uppers toward 1 / lower lowers toward 0 until the
  // row admits a distribution again.
  if (sum_hi < 1.0) {
    double deficit = 1.0 - sum_hi;
    for (std::size_t j = 0; j < upper.size() && deficit > 0.0; ++j) {
      double add = std::min(deficit, 1.0 - upper[j]);
      upper[j] += add;
      deficit -= add;
    }
    if (deficit > 1e-12) {
      std::ostringstream msg;
      msg << "row " << row_index << " infeasible after repair (sum of uppers "
          << sum_hi << "); margin too large for this partition";
      throw NumericalError(msg.str());
    }
  }
  if (sum_lo > 1.0) {
    double excess = sum_lo - 1.0;
    for (std::size_t j = 0; j < lower.size() && excess > 0.0; ++j) {
      double cut = std::min(excess, lower[j]);
      lower[j] -= cut;
      excess -= cut;
    }
  }
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> transition_intervals(
    const KernelModel& model, const GridPartition& partition, int action,
    double grad_source, const AbstractionSettings& settings) {
  const int n = partition.cell_count();
  std::vector<double> lower(static_cast<std::size_t>(n) * n);
  std::vector<double> upper(static_cast<std::size_t>(n) * n);

  std::vector<Box> cells;
  cells.reserve(n);
  for (int j = 0; j < n; ++j) cells.push_back(partition.cell_box(j));

  const int mesh = std::max(1, settings.extremize_mesh);
  // Nearest mesh node is within h_d/2 per dimension, so |m(x) - m(node)| is
  // bounded by grad_source * lambda(cell_j) * sum_d h_d / 2.
  double half_l1_spacing = 0.0;
  for (int d = 0; d < partition.dim(); ++d) {
    double h = mesh == 1 ? partition.cell_side(d) : partition.cell_side(d) / (mesh - 1);
    half_l1_spacing += 0.5 * h;
  }

  parallel_for(n, [&](std::size_t i) {
    auto support = model.transition_support(cells[i], action);
    auto reachable = [&](const Box& target) {
      if (!support) return true;
      for (int d = 0; d < target.dim(); ++d)
        if (target.highs[d] <= support->lows[d] || target.lows[d] >= support->highs[d])
          return false;
      return true;
    };
    auto points = cell_mesh(cells[i], mesh);
    std::vector<double> row_lo(n, std::numeric_limits<double>::infinity());
    std::vector<double> row_hi(n, -std::numeric_limits<double>::infinity());
    for (const auto& x : points) {
      for (int j = 0; j < n; ++j) {
        if (!reachable(cells[j])) continue;
        double m = model.cell_mass(x, cells[j], action, settings.quad);
        row_lo[j] = std::min(row_lo[j], m);
        row_hi[j] = std::max(row_hi[j], m);
      }
    }
    for (int j = 0; j < n; ++j) {
      if (!reachable(cells[j])) {
        // provably zero mass: no margin needed
        lower[i * n + j] = 0.0;
        upper[i * n + j] = 0.0;
        continue;
      }
      double margin = settings.soundness_margin
                          ? grad_source * cells[j].volume() * half_l1_spacing
                          : 0.0;
      lower[i * n + j] = std::clamp(row_lo[j] - margin, 0.0, 1.0);
      upper[i * n + j] = std::clamp(row_hi[j] + margin, 0.0, 1.0);
    }
    repair_row({lower.data() + i * n, static_cast<std::size_t>(n)},
               {upper.data() + i * n, static_cast<std::size_t>(n)}, static_cast<int>(i));
  });
  return {std::move(lower), std::move(upper)};
}

std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
abstract_costs(const KernelModel& model, const GridPartition& partition,
               const AbstractionSettings& settings) {
  if (!model.has_costs()) throw GuardError("abstract_costs: model has no stage cost");
  const int n = partition.cell_count();
  const int actions = std::max(1, model.num_actions());
  std::vector<std::vector<double>> g_up(actions, std::vector<double>(n));
  std::vector<std::vector<double>> g_lo(actions, std::vector<double>(n));
  for (int a = 0; a < actions; ++a) {
    for (int i = 0; i < n; ++i) {
      Box cell = partition.cell_box(i);
      if (auto range = model.cost_range(cell, a)) {
        g_lo[a][i] = range->first;
        g_up[a][i] = range->second;
        continue;
      }
      auto lip = model.cost_lipschitz();
      if (!lip)
        throw GuardError(
            "abstract_costs: model provides neither exact cost ranges nor a "
            "cost Lipschitz constant");
      auto points = cell_mesh(cell, std::max(2, settings.extremize_mesh));
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& x : points) {
        double g = model.stage_cost(x, a);
        lo = std::min(lo, g);
        hi = std::max(hi, g);
      }
      double half_l1 = 0.0;
      for (int d = 0; d < partition.dim(); ++d)
        half_l1 += 0.5 * cell.side(d) / (std::max(2, settings.extremize_mesh) - 1);
      g_lo[a][i] = lo - *lip * half_l1;
      g_up[a][i] = hi + *lip * half_l1;
    }
  }
  return {g_up, g_lo};
}

IntervalAbstraction build_abstraction(const KernelModel& model,
                                      const GridPartition& partition,
                                      const GradientConstants& constants,
                                      const AbstractionSettings& settings) {
  IntervalAbstraction abs;
  abs.partition = partition;
  abs.pi = initial_distribution(model, partition, settings);
  abs.action_values = model.action_values();
  const int slots = std::max(1, model.num_actions());
  abs.p_lower.resize(slots);
  abs.p_upper.resize(slots);
  for (int a = 0; a < slots; ++a) {
    auto [lo, hi] =
        transition_intervals(model, partition, a, constants.grad_source, settings);
    abs.p_lower[a] = std::move(lo);
    abs.p_upper[a] = std::move(hi);
  }
  if (model.has_costs()) {
    auto [up, lo] = abstract_costs(model, partition, settings);
    abs.g_upper = std::move(up);
    abs.g_lower = std::move(lo);
  }
  abs.metadata.quad_tol = settings.quad.tol;
  abs.metadata.extremize_mesh = settings.extremize_mesh;
  abs.metadata.margin_used = settings.soundness_margin;
  abs.metadata.margin_source_grad = constants.grad_source;
  abs.metadata.model_description = model.describe();
  abs.metadata.constants = constants;
  abs.validate();
  return abs;
}

}  // namespace entrobound
