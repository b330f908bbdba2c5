// Acceptance suite: one check per criterion, each printing a PASS/FAIL line.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "entrobound/abstraction.hpp"
#include "entrobound/bounds.hpp"
#include "entrobound/config.hpp"
#include "entrobound/montecarlo.hpp"
#include "entrobound/rng.hpp"
#include "entrobound/synthesis.hpp"

using namespace entrobound;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int criterion, const char* name, bool pass, double seconds,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%.1f s) %s\n", pass ? "PASS" : "FAIL", criterion,
              name, seconds, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

std::vector<double> random_stochastic(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unif(1e-3, 1.0);
  std::vector<double> m(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += (m[static_cast<std::size_t>(i) * n + j] = unif(rng));
    for (int j = 0; j < n; ++j) m[static_cast<std::size_t>(i) * n + j] /= sum;
  }
  return m;
}

std::vector<double> random_distribution(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unif(1e-3, 1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& v : p) sum += (v = unif(rng));
  for (double& v : p) v /= sum;
  return p;
}

// Documented defaults for the 2-D clipped-Gaussian study (the source text
// leaves Sigma, x0, Sigma0 open): unit square, Sigma = I, x0 = center,
// Sigma0 = 0.36 I, horizon 4.
std::unique_ptr<KernelModel> example1_model() {
  Box box({0.0, 0.0}, {1.0, 1.0});
  return clipped_gaussian_model(box, {{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.5},
                                {{0.36, 0.0}, {0.0, 0.36}}, 4);
}

// Documented defaults for the AV study (horizon and q0 left open by the
// source text): horizon 15, triangular q0 on [0.25, 0.5] with mode 0.375.
constexpr int kAvHorizon = 15;
std::unique_ptr<KernelModel> av_model(double phi) {
  return triangular_av_model(kAvHorizon, phi, {});
}

struct Pipeline {
  GridPartition grid;
  GradientConstants constants;
  IntervalAbstraction abs;
  EntropyGeometry geom;
  ConstantsEcho echo;
};

Pipeline build_pipeline(const KernelModel& model, int cells_per_dim, int extremize_mesh,
                        int sup_mesh) {
  Pipeline p;
  std::vector<int> counts(model.state_dim(), cells_per_dim);
  p.grid = build_uniform_grid(model.box(), counts);
  p.constants = estimate_sup_bounds(model, sup_mesh, 1.1);
  AbstractionSettings settings;
  settings.extremize_mesh = extremize_mesh;
  p.abs = build_abstraction(model, p.grid, p.constants, settings);
  p.geom = EntropyGeometry::from_partition(p.grid, p.constants.grad_target,
                                           LogBase::Natural);
  p.echo = make_constants_echo(p.constants, p.grid, model.horizon(), LogBase::Natural);
  return p;
}

// ---------------------------------------------------------------------------

void criterion1_recursion_vs_enumeration() {
  Timer timer;
  auto rng = make_stream(1001, 0);
  double worst = 0.0;
  bool pass = true;
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(trial % 3);      // |X| <= 4
    int horizon = 1 + static_cast<int>(trial % 3);  // K <= 3
    auto grid = build_uniform_grid(Box({0.0}, {1.0}), {n});
    auto pi = random_distribution(rng, n);
    auto kernel = random_stochastic(rng, n);
    auto geom = EntropyGeometry::from_partition(grid, 0.0, LogBase::Natural);

    // Markov-entropy recursion Phi(pi, V_0)
    std::vector<double> v(n, 0.0);
    for (int k = horizon - 1; k >= 0; --k) {
      std::vector<double> next(n);
      for (int i = 0; i < n; ++i) {
        std::span<const double> row{kernel.data() + static_cast<std::size_t>(i) * n,
                                    static_cast<std::size_t>(n)};
        next[i] = phi(row, v, geom);
      }
      v.swap(next);
    }
    double recursion = phi(pi, v, geom);
    std::vector<double> vols(n, grid.cell_volume());
    double direct = enumerate_discrete_kl(pi, {kernel}, vols, 1.0, horizon);
    worst = std::max(worst, std::abs(recursion - direct));
  }
  pass = worst <= 1e-9 && timer.seconds() < 10.0;
  report(1, "recursion equals trajectory enumeration", pass, timer.seconds(),
         fmt("max |difference| = %.2e (tol 1e-9)", worst));
}

void criterion2_sandwich_and_agreement() {
  Timer timer;
  auto model = example1_model();
  auto mc = mc_kl_to_uniform(*model, nullptr, nullptr, 100000, 2024);
  double se3 = 3.0 * mc.std_error.value();

  bool pass = true;
  std::string detail = fmt("mc = %.4f +- %.4f;", mc.mean, se3 / 3.0);
  for (int n : {2, 3, 4}) {
    auto pipe = build_pipeline(*model, n, 5, 15);
    BoundsSettings settings;
    settings.audit_heuristic = true;
    auto r = compute_bounds(pipe.abs, model->horizon(), pipe.geom, pipe.echo, settings);
    bool bracket = (r.lower - se3 <= mc.mean) &&
                   (mc.mean <= std::min(r.upper_global, r.upper_local) + se3);
    bool agreement = r.stats.max_audit_gap <= 1e-6;
    bool exact_used = r.stats.exact_rows > 0 && r.stats.heuristic_rows == 0;
    pass = pass && bracket && agreement && exact_used;
    detail += fmt(" N=%d: lower=%.4f upper_g=%.4f upper_l=%.4f audit=%.1e;", n, r.lower,
                  r.upper_global, r.upper_local, r.stats.max_audit_gap);
  }
  pass = pass && timer.seconds() < 300.0;
  report(2, "MC sandwich and exact-heuristic agreement (2-D Gaussian)", pass,
         timer.seconds(), detail);
}

void criterion3_convergence_trend() {
  Timer timer;
  auto model = example1_model();
  double gap_global_first = 0.0, gap_local_first = 0.0;
  double gap_global_last = 0.0, gap_local_last = 0.0;
  for (int n = 2; n <= 10; ++n) {
    auto pipe = build_pipeline(*model, n, 5, 15);
    auto r = compute_bounds(pipe.abs, model->horizon(), pipe.geom, pipe.echo, {});
    if (n == 2) {
      gap_global_first = r.upper_global - r.lower;
      gap_local_first = r.upper_local - r.lower;
    }
    if (n == 10) {
      gap_global_last = r.upper_global - r.lower;
      gap_local_last = r.upper_local - r.lower;
    }
  }
  bool pass = gap_global_last < 0.5 * gap_global_first &&
              gap_local_last < 0.5 * gap_local_first && timer.seconds() < 900.0;
  report(3, "bound gaps halve from N=2 to N=10", pass, timer.seconds(),
         fmt("global: %.4f -> %.4f; local: %.4f -> %.4f", gap_global_first,
             gap_global_last, gap_local_first, gap_local_last));
}

void criterion4_epsilon_inequalities() {
  Timer timer;
  auto rng = make_stream(1004, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  bool pass = true;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 1 + static_cast<int>(unif(rng) * 12);
    int bins = 2 + static_cast<int>(unif(rng) * 40);
    double grad = unif(rng) * 20.0;
    double delta = 0.02 + unif(rng);
    std::vector<double> p(bins);
    double sum = 0.0;
    for (double& x : p) sum += (x = -std::log(unif(rng)));
    for (double& x : p) x /= sum;
    double eps = epsilon_correction(p, n, grad, delta);
    double cap = global_epsilon(n, std::log(static_cast<double>(bins)), grad, delta);
    pass = pass && eps >= 0.0 && eps <= cap + 1e-12;
  }
  // refinement schedule |S| delta^(n+1) -> 0: delta halves, |S| = delta^-n
  const int n = 3;
  const double grad = 5.0;
  double last = 1e300;
  for (int level = 1; level <= 40; ++level) {
    double delta = std::pow(0.5, level);
    double log_cells = -n * std::log(delta);
    double eps = global_epsilon(n, log_cells, grad, delta);
    pass = pass && (eps <= last + 1e-15);
    last = eps;
  }
  pass = pass && last < 1e-6 && timer.seconds() < 5.0;
  report(4, "eps correction inequalities and vanishing schedule", pass, timer.seconds(),
         fmt("final schedule value %.2e (target < 1e-6)", last));
}

void criterion5_gradient_bound() {
  Timer timer;
  auto rng = make_stream(1005, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto check_model = [&](const KernelModel& model, int actions, double& worst_ratio) {
    auto consts = estimate_sup_bounds(model, model.state_dim() > 1 ? 15 : 41, 1.1);
    double bound = trajectory_gradient_bound(consts.sup_density, consts.grad_joint,
                                             model.horizon()).value;
    const int d = model.state_dim();
    const int horizon = model.horizon();
    bool ok = true;
    for (int trial = 0; trial < 10000; ++trial) {
      std::vector<std::vector<double>> s(horizon + 1, std::vector<double>(d));
      for (auto& sk : s)
        for (int j = 0; j < d; ++j)
          sk[j] = model.box().lows[j] + unif(rng) * model.box().side(j);
      std::vector<int> acts(horizon, 0);
      for (int& a : acts) a = actions > 0 ? static_cast<int>(unif(rng) * actions) : 0;
      auto density = [&]() {
        double t = model.initial_density(s[0]);
        for (int k = 0; k < horizon; ++k)
          t *= model.transition_density(s[k], s[k + 1], acts[k]);
        return t;
      };
      int k = static_cast<int>(unif(rng) * (horizon + 1));
      int j = static_cast<int>(unif(rng) * d);
      double h = model.box().side(j) * 1e-7;
      double keep = s[k][j];
      if (keep < model.box().lows[j] + h || keep > model.box().highs[j] - h) continue;
      s[k][j] = keep + h;
      double up = density();
      s[k][j] = keep - h;
      double dn = density();
      s[k][j] = keep;
      double fd = std::abs(up - dn) / (2.0 * h);
      worst_ratio = std::max(worst_ratio, fd / bound);
      ok = ok && fd <= bound * (1.0 + 1e-6);
    }
    return ok;
  };

  double ratio_gauss = 0.0, ratio_av = 0.0;
  bool pass = check_model(*example1_model(), 0, ratio_gauss);
  pass = check_model(*av_model(2.3), 5, ratio_av) && pass;
  pass = pass && timer.seconds() < 30.0;
  report(5, "sampled |grad T| stays within 2 Lq^K Lgrad", pass, timer.seconds(),
         fmt("max fd/bound: gaussian %.2e, av %.2e", ratio_gauss, ratio_av));
}

void criterion6_av_synthesis() {
  Timer timer;
  const std::uint64_t mc_samples = 100000;
  const std::uint64_t seed = 7777;

  struct PolicyRun {
    SynthesisReport report;
    McEstimate kl;
    McEstimate objective;
    GridPartition grid;
  };

  Policy dp_policy;
  McEstimate dp_kl;
  std::vector<PolicyRun> runs;
  for (double phi : {2.56, 2.3}) {
    auto model = av_model(phi);
    auto pipe = build_pipeline(*model, 80, 129, 101);
    auto report = synthesize(pipe.abs, kAvHorizon, pipe.geom, pipe.echo, -1, {});
    report.phi_scale = phi;
    if (runs.empty()) {
      dp_policy = unregularized_policy(pipe.abs, kAvHorizon);
      dp_kl = mc_kl_to_uniform(*model, &pipe.grid, &dp_policy, mc_samples, seed);
    }
    PolicyRun run{std::move(report), {}, {}, pipe.grid};
    run.kl = mc_kl_to_uniform(*model, &run.grid, &run.report.policy_global, mc_samples,
                              seed + 1);
    run.objective = mc_objective(*model, &run.grid, &run.report.policy_global, -1,
                                 mc_samples, seed + 2);
    runs.push_back(std::move(run));
  }

  // strict KL ordering at 3-SE separation: dp < mu(2.56) < mu(2.3)
  auto separated = [](const McEstimate& lo, const McEstimate& hi) {
    double se = std::sqrt(*lo.std_error * *lo.std_error + *hi.std_error * *hi.std_error);
    return hi.mean - lo.mean > 3.0 * se;
  };
  bool ordering = separated(dp_kl, runs[0].kl) && separated(runs[0].kl, runs[1].kl);

  bool brackets = true, gaps = true;
  std::string detail = fmt("KL: dp=%.2f, phi2.56=%.2f, phi2.3=%.2f;", dp_kl.mean,
                           runs[0].kl.mean, runs[1].kl.mean);
  for (const auto& run : runs) {
    double se3 = 3.0 * run.objective.std_error.value();
    // The interval-DP sandwich is the reported bound display (the quantity
    // whose gap the 10% target addresses); the certified pairs additionally
    // carry the continuous-correction debt on the lower side and must
    // bracket as well.
    const BoundPair& discrete = run.report.discrete_global;
    bool bracket = discrete.lower - se3 <= run.objective.mean &&
                   run.objective.mean <= discrete.upper + se3;
    for (const BoundPair* pair :
         {&run.report.certified_global, &run.report.certified_local}) {
      bracket = bracket && pair->lower - se3 <= run.objective.mean &&
                run.objective.mean <= pair->upper + se3;
    }
    double rel_gap = (discrete.upper - discrete.lower) / std::abs(discrete.upper);
    brackets = brackets && bracket;
    gaps = gaps && rel_gap <= 0.10;
    detail += fmt(" phi=%.2f: obj=%.2f in [%.2f, %.2f], rel gap %.1f%% (certified lower %.2f);",
                  run.report.phi_scale, run.objective.mean, discrete.lower, discrete.upper,
                  100.0 * rel_gap, run.report.certified_local.lower);
  }
  bool pass = ordering && brackets && gaps && timer.seconds() < 600.0;
  report(6, "AV synthesis ordering, bracketing, and bound gap", pass, timer.seconds(),
         detail);
}

void criterion7_optimizer_oracles() {
  Timer timer;
  auto rng = make_stream(1007, 0);
  std::normal_distribution<double> gauss(0.0, 1.5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto grid = build_uniform_grid(Box({0.0}, {1.0}), {5});
  auto geom = EntropyGeometry::from_partition(grid, 1.0, LogBase::Natural);
  SolverSettings settings;

  double worst_max = 0.0, worst_min = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(unif(rng) * 4);  // row size <= 5
    auto sub_grid = build_uniform_grid(Box({0.0}, {1.0}), {n});
    auto sub_geom = EntropyGeometry::from_partition(sub_grid, 1.0, LogBase::Natural);
    AmbiguityRow row;
    for (;;) {
      row.lower.clear();
      row.upper.clear();
      for (int j = 0; j < n; ++j) {
        double a = unif(rng), b = unif(rng);
        row.lower.push_back(std::min(a, b) / n);
        row.upper.push_back(std::max(a, b));
      }
      double lo = 0.0, hi = 0.0;
      for (int j = 0; j < n; ++j) {
        lo += row.lower[j];
        hi += row.upper[j];
      }
      if (lo <= 1.0 && hi >= 1.0) break;
    }
    std::vector<double> v(n);
    for (double& x : v) x = gauss(rng);

    // full vertex enumeration oracle for the maximum
    double oracle_max = -1e300;
    for (int frac = 0; frac < n; ++frac) {
      for (int mask = 0; mask < (1 << n); ++mask) {
        if (mask & (1 << frac)) continue;
        std::vector<double> p(row.lower);
        for (int j = 0; j < n; ++j)
          if (mask & (1 << j)) p[j] = row.upper[j];
        double rest = 0.0;
        for (int j = 0; j < n; ++j)
          if (j != frac) rest += p[j];
        p[frac] = 1.0 - rest;
        if (p[frac] < row.lower[frac] - 1e-12 || p[frac] > row.upper[frac] + 1e-12)
          continue;
        p[frac] = std::clamp(p[frac], row.lower[frac], row.upper[frac]);
        oracle_max = std::max(oracle_max, phi(p, v, sub_geom));
      }
    }
    auto max_res = robust_max_convex(row, v, sub_geom, false, settings, trial);
    worst_max = std::max(worst_max, std::abs(max_res.value - oracle_max));

    // Dense simplex grid for the minimum: full lattice over the row boxes
    // with the widest coordinate absorbing the simplex constraint, refined
    // by projected pairwise golden-section transfers (exact for a convex
    // separable objective: pairwise stationarity implies global optimality).
    int absorb = 0;
    for (int j = 1; j < n; ++j)
      if (row.upper[j] - row.lower[j] > row.upper[absorb] - row.lower[absorb]) absorb = j;
    std::vector<double> best_p(n);
    {  // feasible fallback start: lower bounds plus slack poured left to right
      double slack = 1.0;
      for (int j = 0; j < n; ++j) slack -= (best_p[j] = row.lower[j]);
      for (int j = 0; j < n && slack > 0; ++j) {
        double add = std::min(slack, row.upper[j] - best_p[j]);
        best_p[j] += add;
        slack -= add;
      }
    }
    double oracle_min = phi(best_p, v, sub_geom);
    const int steps = 10;
    std::vector<int> idx(n, 0);
    for (;;) {
      std::vector<double> p(n);
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == absorb) continue;
        p[j] = row.lower[j] +
               (row.upper[j] - row.lower[j]) * idx[j] / static_cast<double>(steps);
        sum += p[j];
      }
      p[absorb] = 1.0 - sum;
      if (p[absorb] >= row.lower[absorb] - 1e-15 &&
          p[absorb] <= row.upper[absorb] + 1e-15) {
        p[absorb] = std::clamp(p[absorb], row.lower[absorb], row.upper[absorb]);
        double val = phi(p, v, sub_geom);
        if (val < oracle_min) {
          oracle_min = val;
          best_p = p;
        }
      }
      int j = n - 1;
      if (j == absorb) --j;
      while (j >= 0 && ++idx[j] > steps) {
        idx[j--] = 0;
        if (j == absorb) --j;
      }
      if (j < 0) break;
    }
    for (int sweep = 0; sweep < 400; ++sweep) {
      bool improved = false;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          if (a == b) continue;
          double tmax = std::min(best_p[a] - row.lower[a], row.upper[b] - best_p[b]);
          if (tmax <= 1e-15) continue;
          auto shift = [&](double t) {
            std::vector<double> q(best_p);
            q[a] -= t;
            q[b] += t;
            return phi(q, v, sub_geom);
          };
          double lo = 0.0, hi = tmax;
          const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
          double t1 = hi - gr * (hi - lo), t2 = lo + gr * (hi - lo);
          double f1 = shift(t1), f2 = shift(t2);
          for (int it = 0; it < 90; ++it) {
            if (f1 < f2) {
              hi = t2; t2 = t1; f2 = f1;
              t1 = hi - gr * (hi - lo);
              f1 = shift(t1);
            } else {
              lo = t1; t1 = t2; f1 = f2;
              t2 = lo + gr * (hi - lo);
              f2 = shift(t2);
            }
          }
          double t = 0.5 * (lo + hi);
          if (t > 1e-15 && shift(t) < oracle_min - 1e-15) {
            best_p[a] -= t;
            best_p[b] += t;
            oracle_min = phi(best_p, v, sub_geom);
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    auto min_res = robust_min_convex(row, v, sub_geom, settings);
    worst_min = std::max(worst_min, std::abs(min_res.value - oracle_min));
  }
  bool pass = worst_max <= 1e-6 && worst_min <= 1e-6 && timer.seconds() < 30.0;
  report(7, "robust optimizers agree with brute-force oracles", pass, timer.seconds(),
         fmt("max |max-diff| = %.2e, max |min-diff| = %.2e", worst_max, worst_min));
}

void criterion8_cell_max_density() {
  Timer timer;
  auto rng = make_stream(1008, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    double alpha = unif(rng) * 2.0 - 1.0;
    double delta = 0.05 + unif(rng);
    double beta = alpha + delta;
    double mass = 0.01 + unif(rng);
    double grad = unif(rng) * 10.0;
    double scan = -1e300;
    for (int i = 0; i <= 1000; ++i) {
      double c = alpha + delta * i / 1000.0;
      scan = std::max(scan, mass / delta +
                                0.5 * grad / delta *
                                    ((c - alpha) * (c - alpha) + (beta - c) * (beta - c)));
    }
    std::vector<double> deltas{delta};
    double closed = cell_max_density(mass, delta, grad, deltas);
    worst = std::max(worst, std::abs(closed - scan));
  }
  bool pass = worst <= 1e-8 && timer.seconds() < 5.0;
  report(8, "cell density cap equals the scanned per-peak maximum", pass,
         timer.seconds(), fmt("max |difference| = %.2e (tol 1e-8)", worst));
}

}  // namespace

int main() {
  criterion1_recursion_vs_enumeration();
  criterion2_sandwich_and_agreement();
  criterion3_convergence_trend();
  criterion4_epsilon_inequalities();
  criterion5_gradient_bound();
  criterion6_av_synthesis();
  criterion7_optimizer_oracles();
  criterion8_cell_max_density();
  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
