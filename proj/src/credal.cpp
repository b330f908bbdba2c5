#include "entrobound/credal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "entrobound/rng.hpp"

namespace entrobound {

namespace {

constexpr double kFeasTol = 1e-12;
constexpr double kLogFloor = 1e-300;

}  // namespace

bool AmbiguityRow::degenerate() const {
  for (int j = 0; j < size(); ++j)
    if (upper[j] - lower[j] > 0.0) return false;
  return true;
}

void AmbiguityRow::validate() const {
  if (lower.size() != upper.size() || lower.empty())
    throw NumericalError("ambiguity row: bound vectors empty or mismatched");
  double sum_lo = 0.0, sum_hi = 0.0;
  for (int j = 0; j < size(); ++j) {
    if (!(lower[j] >= -kFeasTol) || !(upper[j] <= 1.0 + kFeasTol) ||
        lower[j] > upper[j] + kFeasTol)
      throw NumericalError("ambiguity row: entry bounds out of order");
    sum_lo += lower[j];
    sum_hi += upper[j];
  }
  if (sum_lo > 1.0 + 1e-9 || sum_hi < 1.0 - 1e-9) {
    std::ostringstream msg;
    msg << "infeasible ambiguity row: sum lower = " << sum_lo
        << ", sum upper = " << sum_hi;
    throw NumericalError(msg.str());
  }
}

EntropyGeometry EntropyGeometry::from_partition(const GridPartition& partition,
                                                double grad_bound, LogBase base) {
  EntropyGeometry g;
  g.state_dim = partition.dim();
  g.delta_bar = partition.max_side();
  g.grad_bound = grad_bound;
  g.base = base;
  g.ln_base_div = log_base_divisor(base);
  g.log_lambda = std::log(partition.box.volume());
  g.log_cell_volumes.resize(partition.cell_count());
  double log_cell = std::log(partition.cell_volume());
  std::fill(g.log_cell_volumes.begin(), g.log_cell_volumes.end(), log_cell);
  g.eps_coeff = 0.5 * g.state_dim * grad_bound *
                std::pow(g.delta_bar, g.state_dim + 1);
  return g;
}

namespace {

// Separable objective sum_j f_j(x_j) with
//   f_j(x) = x * log_b((x + C) lambda / lambda_j) + x V_j.
// C = 0 gives plain Phi; C = geom.eps_coeff folds the per-step eps in
// (the identity x log(x l/l_j) + x log(1 + C/x) = x log((x+C) l/l_j)
// keeps the eps-corrected objective separable convex).
struct PhiObjective {
  const EntropyGeometry* geom;
  std::span<const double> V;
  double C;

  double term(int j, double x) const {
    if (x <= 0.0) return 0.0;
    double ln_arg = std::log(x + C) + geom->log_lambda - geom->log_cell_volumes[j];
    return x * (ln_arg / geom->ln_base_div + V[j]);
  }
  double grad(int j, double x) const {
    double xs = std::max(x, kLogFloor);
    double ln_arg = std::log(xs + C) + geom->log_lambda - geom->log_cell_volumes[j];
    return (ln_arg + xs / (xs + C)) / geom->ln_base_div + V[j];
  }
  double eval(std::span<const double> p) const {
    double s = 0.0;
    for (int j = 0; j < static_cast<int>(p.size()); ++j) s += term(j, p[j]);
    return s;
  }
};

}  // namespace

double phi(std::span<const double> p, std::span<const double> V,
           const EntropyGeometry& geom) {
  PhiObjective f{&geom, V, 0.0};
  return f.eval(p);
}

double phi_eps(std::span<const double> p, std::span<const double> V,
               const EntropyGeometry& geom) {
  PhiObjective f{&geom, V, geom.eps_coeff};
  return f.eval(p);
}

double epsilon_correction(std::span<const double> p, int n, double grad_bound,
                          double delta_bar, LogBase base) {
  if (grad_bound <= 0.0 || delta_bar <= 0.0) return 0.0;
  double log_c = std::log(0.5 * n) + std::log(grad_bound) +
                 (n + 1) * std::log(delta_bar);
  double sum = 0.0;
  for (double pt : p) {
    if (pt <= 0.0) continue;
    sum += pt * softplus(log_c - std::log(pt));
  }
  return sum / log_base_divisor(base);
}

double global_epsilon_log(int n, double log_num_cells, double log_grad_bound,
                          double delta_bar, LogBase base) {
  if (std::isinf(log_grad_bound) && log_grad_bound < 0) return 0.0;
  if (delta_bar <= 0.0) return 0.0;
  double z = std::log(0.5 * n) + log_num_cells + log_grad_bound +
             (n + 1) * std::log(delta_bar);
  return softplus(z) / log_base_divisor(base);
}

double global_epsilon(int n, double log_num_cells, double grad_bound,
                      double delta_bar, LogBase base) {
  if (grad_bound <= 0.0) return 0.0;
  return global_epsilon_log(n, log_num_cells, std::log(grad_bound), delta_bar, base);
}

double cell_max_density(double mass, double cell_volume, double grad_bound,
                        std::span<const double> deltas) {
  double prod = 1.0;
  double side_sum = 0.0;
  for (double d : deltas) {
    prod *= d;
    side_sum += d;
  }
  if (std::abs(prod - cell_volume) > 1e-10 * std::max(1.0, std::abs(cell_volume)))
    throw NumericalError("cell_max_density: cell volume does not match side product");
  return mass / cell_volume + 0.5 * grad_bound * side_sum;
}

LinearExtremeResult linear_extreme(const AmbiguityRow& row, std::span<const double> c,
                                   ExtremeSense sense) {
  row.validate();
  const int n = row.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (c[a] != c[b]) return sense == ExtremeSense::Max ? c[a] > c[b] : c[a] < c[b];
    return a < b;
  });
  LinearExtremeResult res;
  res.p = row.lower;
  double slack = 1.0;
  for (int j = 0; j < n; ++j) slack -= row.lower[j];
  for (int j : order) {
    if (slack <= 0.0) break;
    double add = std::min(slack, row.upper[j] - row.lower[j]);
    res.p[j] += add;
    slack -= add;
  }
  res.value = 0.0;
  for (int j = 0; j < n; ++j) res.value += c[j] * res.p[j];
  return res;
}

namespace {

// ---- exact extreme-point enumeration for the convex maximum ----

struct VertexEnumerator {
  const AmbiguityRow& row;
  const PhiObjective& f;
  std::vector<int> free_idx;
  double fixed_value = 0.0;  // objective over degenerate coordinates
  double total_low = 0.0;    // sum of all lower bounds

  VertexEnumerator(const AmbiguityRow& r, const PhiObjective& obj) : row(r), f(obj) {
    for (int j = 0; j < row.size(); ++j) {
      total_low += row.lower[j];
      if (row.upper[j] - row.lower[j] > 0.0)
        free_idx.push_back(j);
      else
        fixed_value += f.term(j, row.lower[j]);
    }
  }

  double work_estimate() const {
    double m = static_cast<double>(free_idx.size());
    if (m == 0) return 1.0;
    return m * std::ldexp(1.0, static_cast<int>(std::min(m - 1, 1000.0)));
  }

  // Returns best (value, p). Enumerates, for every free slot f chosen as
  // the fractional coordinate, all upper/lower assignments of the other
  // free coordinates via Gray code with incremental sums.
  RowOptResult run() const {
    RowOptResult best;
    best.value = -std::numeric_limits<double>::infinity();
    const int m = static_cast<int>(free_idx.size());
    if (m == 0) {
      best.p = row.lower;
      best.value = fixed_value;
      best.mode = OptimizerMode::Degenerate;
      return best;
    }
    int best_slot = -1;
    std::uint64_t best_bits = 0;
    double best_frac = 0.0;
    for (int slot = 0; slot < m; ++slot) {
      const int fj = free_idx[slot];
      std::vector<int> others;
      others.reserve(m - 1);
      for (int s = 0; s < m; ++s)
        if (s != slot) others.push_back(free_idx[s]);

      double mass_rest = total_low - row.lower[fj];  // all others at lower
      double val_rest = fixed_value;
      for (int j : others) val_rest += f.term(j, row.lower[j]);

      const std::uint64_t subsets = 1ULL << others.size();
      std::uint64_t gray = 0;
      for (std::uint64_t g = 0;; ++g) {
        double pf = 1.0 - mass_rest;
        if (pf >= row.lower[fj] - kFeasTol && pf <= row.upper[fj] + kFeasTol) {
          double pfc = std::clamp(pf, row.lower[fj], row.upper[fj]);
          double value = val_rest + f.term(fj, pfc);
          if (value > best.value) {
            best.value = value;
            best_slot = slot;
            best_bits = gray;
            best_frac = pfc;
          }
        }
        if (g + 1 == subsets) break;
        std::uint64_t next_gray = (g + 1) ^ ((g + 1) >> 1);
        std::uint64_t flipped = gray ^ next_gray;
        int bit = std::countr_zero(flipped);
        int j = others[bit];
        if (next_gray & flipped) {  // lower -> upper
          mass_rest += row.upper[j] - row.lower[j];
          val_rest += f.term(j, row.upper[j]) - f.term(j, row.lower[j]);
        } else {
          mass_rest -= row.upper[j] - row.lower[j];
          val_rest -= f.term(j, row.upper[j]) - f.term(j, row.lower[j]);
        }
        gray = next_gray;
      }
    }
    if (best_slot < 0)
      throw NumericalError("vertex enumeration found no feasible extreme point");
    // Rebuild the winning vertex.
    best.p = row.lower;
    int bit = 0;
    for (int s = 0; s < m; ++s) {
      if (s == best_slot) continue;
      if (best_bits & (1ULL << bit)) best.p[free_idx[s]] = row.upper[free_idx[s]];
      ++bit;
    }
    best.p[free_idx[best_slot]] = best_frac;
    best.mode = OptimizerMode::Exact;
    return best;
  }
};

// ---- steepest-ascent local search over the vertex graph ----

struct VertexSearch {
  const AmbiguityRow& row;
  const PhiObjective& f;

  int fractional_of(const std::vector<double>& p) const {
    for (int j = 0; j < row.size(); ++j)
      if (p[j] > row.lower[j] + kFeasTol && p[j] < row.upper[j] - kFeasTol) return j;
    return -1;
  }

  // Maximal mass transfer from donor d to receiver r; returns the value delta.
  double move_delta(const std::vector<double>& p, int d, int r, double& t) const {
    t = std::min(p[d] - row.lower[d], row.upper[r] - p[r]);
    if (t <= kFeasTol) return 0.0;
    return f.term(d, p[d] - t) + f.term(r, p[r] + t) - f.term(d, p[d]) - f.term(r, p[r]);
  }

  double ascend(std::vector<double>& p) const {
    const int n = row.size();
    double value = f.eval(p);
    const int max_moves = 10 * n + 100;
    for (int it = 0; it < max_moves; ++it) {
      int frac = fractional_of(p);
      int best_d = -1, best_r = -1;
      double best_delta = 1e-13, best_t = 0.0;
      auto consider = [&](int d, int r) {
        if (d == r) return;
        double t;
        double delta = move_delta(p, d, r, t);
        if (delta > best_delta) {
          best_delta = delta;
          best_d = d;
          best_r = r;
          best_t = t;
        }
      };
      if (frac >= 0) {
        for (int j = 0; j < n; ++j) {
          consider(frac, j);
          consider(j, frac);
        }
      } else {
        for (int d = 0; d < n; ++d)
          for (int r = 0; r < n; ++r) consider(d, r);
      }
      if (best_d < 0) break;
      p[best_d] -= best_t;
      p[best_r] += best_t;
      // Snap to bounds so vertex bookkeeping stays exact.
      if (std::abs(p[best_d] - row.lower[best_d]) < kFeasTol) p[best_d] = row.lower[best_d];
      if (std::abs(p[best_r] - row.upper[best_r]) < kFeasTol) p[best_r] = row.upper[best_r];
      value += best_delta;
    }
    value = f.eval(p);
    return value;
  }
};

RowOptResult heuristic_max(const AmbiguityRow& row, const PhiObjective& f,
                           const SolverSettings& settings, std::uint64_t stream) {
  const int n = row.size();
  VertexSearch search{row, f};
  auto rng = make_stream(settings.seed, stream);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RowOptResult best;
  best.value = -std::numeric_limits<double>::infinity();
  best.mode = OptimizerMode::Heuristic;

  std::vector<double> c(n);
  const int starts = std::max(2, settings.heuristic_starts);
  for (int s = 0; s < starts; ++s) {
    if (s == 0) {
      // marginal-gain direction: prefer coordinates whose full interval
      // contributes most per unit mass
      for (int j = 0; j < n; ++j) {
        double w = row.upper[j] - row.lower[j];
        c[j] = w > 0 ? (f.term(j, row.upper[j]) - f.term(j, row.lower[j])) / w
                     : -std::numeric_limits<double>::infinity();
      }
    } else if (s == 1) {
      for (int j = 0; j < n; ++j) c[j] = f.grad(j, row.upper[j]);
    } else {
      for (int j = 0; j < n; ++j) c[j] = gauss(rng);
    }
    auto start = linear_extreme(row, c, ExtremeSense::Max);
    double value = search.ascend(start.p);
    if (value > best.value) {
      best.value = value;
      best.p = std::move(start.p);
    }
    ++best.iterations;
  }
  return best;
}

// ---- Lagrangian dual for the convex minimum ----

// For any multiplier nu, D(nu) = nu + sum_j min_{x in [l_j,u_j]} (f_j(x) - nu x)
// lower-bounds the constrained minimum (weak duality). The inner minimizers
// have the closed form x_j(nu) = clamp(exp(ln_b (nu - V_j) - d_j - 1), l, u).
struct DualBound {
  const AmbiguityRow& row;
  const PhiObjective& f;
  const EntropyGeometry& geom;
  std::span<const double> V;

  double primal_candidate(double nu, std::vector<double>& x) const {
    double sum = 0.0;
    for (int j = 0; j < row.size(); ++j) {
      double ln_x = geom.ln_base_div * (nu - V[j]) -
                    (geom.log_lambda - geom.log_cell_volumes[j]) - 1.0;
      double xj = ln_x > 3.0 ? row.upper[j] : std::exp(ln_x);
      x[j] = std::clamp(xj, row.lower[j], row.upper[j]);
      sum += x[j];
    }
    return sum;
  }

  double value(double nu, std::vector<double>& x) const {
    primal_candidate(nu, x);
    double d = nu;
    for (int j = 0; j < row.size(); ++j) d += f.term(j, x[j]) - nu * x[j];
    return d;
  }

  // Bisect on sum x_j(nu) = 1 (monotone in nu); returns the best dual value
  // seen and leaves the associated candidate in x.
  double solve(std::vector<double>& x) const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < row.size(); ++j) {
      lo = std::min(lo, f.grad(j, std::max(row.lower[j], 1e-12)));
      hi = std::max(hi, f.grad(j, std::max(row.upper[j], 1e-12)));
    }
    lo -= 1.0;
    hi += 1.0;
    std::vector<double> tmp(row.size());
    for (int guard = 0; guard < 64 && primal_candidate(lo, tmp) > 1.0; ++guard)
      lo -= std::max(1.0, hi - lo);
    for (int guard = 0; guard < 64 && primal_candidate(hi, tmp) < 1.0; ++guard)
      hi += std::max(1.0, hi - lo);
    double nu = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      nu = 0.5 * (lo + hi);
      if (primal_candidate(nu, tmp) >= 1.0)
        hi = nu;
      else
        lo = nu;
      if (hi - lo < 1e-15 * std::max(1.0, std::abs(nu))) break;
    }
    return value(nu, x);
  }
};

// Repairs the dual primal candidate into the feasible set (sum to one).
void repair_to_simplex(const AmbiguityRow& row, std::vector<double>& p) {
  double sum = 0.0;
  for (double v : p) sum += v;
  double resid = 1.0 - sum;
  for (int j = 0; j < row.size() && std::abs(resid) > 0.0; ++j) {
    double adj = resid > 0 ? std::min(resid, row.upper[j] - p[j])
                           : std::max(resid, row.lower[j] - p[j]);
    p[j] += adj;
    resid -= adj;
  }
  if (std::abs(resid) > 1e-9)
    throw NumericalError("infeasible ambiguity row: simplex repair failed");
}

}  // namespace

RowOptResult robust_max_convex(const AmbiguityRow& row, std::span<const double> V,
                               const EntropyGeometry& geom, bool use_eps,
                               const SolverSettings& settings, std::uint64_t stream) {
  row.validate();
  PhiObjective f{&geom, V, use_eps ? geom.eps_coeff : 0.0};
  if (row.degenerate()) {
    RowOptResult res;
    res.p = row.lower;
    res.value = f.eval(res.p);
    res.mode = OptimizerMode::Degenerate;
    return res;
  }
  VertexEnumerator enumerator(row, f);
  if (!settings.force_heuristic && enumerator.free_idx.size() <= 62 &&
      enumerator.work_estimate() <= settings.vertex_budget) {
    return enumerator.run();
  }
  return heuristic_max(row, f, settings, stream);
}

RowOptResult robust_min_convex(const AmbiguityRow& row, std::span<const double> V,
                               const EntropyGeometry& geom,
                               const SolverSettings& settings) {
  row.validate();
  PhiObjective f{&geom, V, 0.0};
  if (row.degenerate()) {
    RowOptResult res;
    res.p = row.lower;
    res.value = f.eval(res.p);
    res.mode = OptimizerMode::Degenerate;
    return res;
  }
  const int n = row.size();

  DualBound dual{row, f, geom, V};
  std::vector<double> candidate(n);
  double dual_value = dual.solve(candidate);

  // Warm start from the (repaired) dual candidate, then away-step
  // conditional gradient until the certificate closes.
  std::vector<double> p = candidate;
  repair_to_simplex(row, p);
  double value = f.eval(p);

  std::vector<std::pair<std::vector<double>, double>> atoms;
  atoms.emplace_back(p, 1.0);

  std::vector<double> grad(n), dir(n);
  RowOptResult res;
  res.mode = OptimizerMode::Exact;

  auto line_search = [&](const std::vector<double>& base, const std::vector<double>& d,
                         double gmax) {
    auto dh = [&](double g) {
      double s = 0.0;
      for (int j = 0; j < n; ++j)
        if (d[j] != 0.0) s += f.grad(j, base[j] + g * d[j]) * d[j];
      return s;
    };
    if (dh(gmax) <= 0.0) return gmax;
    double lo = 0.0, hi = gmax;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      if (dh(mid) <= 0.0)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };

  int it = 0;
  for (; it < settings.fw_max_iters; ++it) {
    res.cert_gap = value - dual_value;
    if (res.cert_gap <= settings.fw_tol) break;

    for (int j = 0; j < n; ++j) grad[j] = f.grad(j, p[j]);
    auto lmo = linear_extreme(row, grad, ExtremeSense::Min);

    // Away atom: maximal inner product with the gradient.
    std::size_t away = 0;
    double away_score = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += grad[j] * atoms[a].first[j];
      if (s > away_score) {
        away_score = s;
        away = a;
      }
    }
    double fw_score = 0.0, p_score = 0.0;
    for (int j = 0; j < n; ++j) {
      fw_score += grad[j] * lmo.p[j];
      p_score += grad[j] * p[j];
    }

    bool fw_step = (p_score - fw_score) >= (away_score - p_score);
    double gmax;
    if (fw_step) {
      for (int j = 0; j < n; ++j) dir[j] = lmo.p[j] - p[j];
      gmax = 1.0;
    } else {
      for (int j = 0; j < n; ++j) dir[j] = p[j] - atoms[away].first[j];
      double alpha = atoms[away].second;
      if (alpha >= 1.0 - 1e-15) {
        // Away direction degenerate; fall back to the FW step.
        for (int j = 0; j < n; ++j) dir[j] = lmo.p[j] - p[j];
        fw_step = true;
        gmax = 1.0;
      } else {
        gmax = alpha / (1.0 - alpha);
      }
    }
    double norm = 0.0;
    for (int j = 0; j < n; ++j) norm += std::abs(dir[j]);
    if (norm < 1e-16 || gmax <= 0.0) break;  // stationary within fp resolution

    double gamma = line_search(p, dir, gmax);
    if (gamma <= 0.0) break;
    for (int j = 0; j < n; ++j)
      p[j] = std::clamp(p[j] + gamma * dir[j], row.lower[j], row.upper[j]);

    if (fw_step) {
      bool found = false;
      for (auto& a : atoms) {
        a.second *= (1.0 - gamma);
        if (!found && a.first == lmo.p) {
          a.second += gamma;
          found = true;
        }
      }
      if (!found) atoms.emplace_back(lmo.p, gamma);
    } else {
      for (std::size_t a = 0; a < atoms.size(); ++a)
        atoms[a].second *= (1.0 + gamma);
      atoms[away].second -= gamma;
      if (atoms[away].second < 1e-14) atoms.erase(atoms.begin() + away);
    }
    value = f.eval(p);
  }
  res.value = value;
  res.p = std::move(p);
  res.cert_gap = std::max(0.0, value - dual_value);
  res.iterations = it;
  return res;
}

}  // namespace entrobound
