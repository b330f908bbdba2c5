#include <doctest.h>

#include <cmath>
#include <random>

#include "entrobound/abstraction.hpp"
#include "entrobound/quadrature.hpp"
#include "entrobound/rng.hpp"

using namespace entrobound;

namespace {

std::vector<std::vector<double>> diag2(double s0, double s1) {
  return {{s0 * s0, 0.0}, {0.0, s1 * s1}};
}

std::unique_ptr<KernelModel> uniform_chain(int horizon = 2) {
  // state-independent kernel q(x, .) = q0 = 1 on the unit interval
  TabulatedSpec spec;
  spec.box = Box({0.0}, {1.0});
  spec.grid = {8};
  spec.horizon = horizon;
  spec.q0 = std::vector<double>(8, 1.0);
  spec.q = {std::vector<double>(64, 1.0)};
  spec.sup_density = 1.0;
  spec.grad_bound = 0.0;
  return tabulated_model(spec);
}

}  // namespace

TEST_CASE("uniform initial density gives a uniform pi") {
  auto model = uniform_chain();
  auto grid = build_uniform_grid(model->box(), {4});
  auto pi = initial_distribution(*model, grid);
  for (double v : pi) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("concentrated initial density gives an indicator pi") {
  TabulatedSpec spec;
  spec.box = Box({0.0}, {1.0});
  spec.grid = {4};
  spec.horizon = 1;
  spec.q0 = {0.0, 4.0, 0.0, 0.0};
  spec.q = {std::vector<double>(16, 1.0)};
  spec.sup_density = 4.0;
  spec.grad_bound = 0.0;
  auto model = tabulated_model(spec);
  auto grid = build_uniform_grid(model->box(), {4});
  auto pi = initial_distribution(*model, grid);
  CHECK(pi[1] == doctest::Approx(1.0));
  CHECK(pi[0] + pi[2] + pi[3] == doctest::Approx(0.0));
}

TEST_CASE("gaussian pi from CDF products matches checked quadrature") {
  Box box({0.0, 0.0}, {1.0, 1.0});
  auto model = clipped_gaussian_model(box, diag2(0.5, 0.5), {0.4, 0.6}, diag2(0.3, 0.2), 2);
  auto grid = build_uniform_grid(box, {2, 2});
  auto pi = initial_distribution(*model, grid);
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    Box cell = grid.cell_box(i);
    // independent route: checked tensor quadrature of the density itself
    double direct = integrate_box_checked(cell, 24, 1e-10,
                                          [&](std::span<const double> x) {
                                            return model->initial_density(x);
                                          });
    CHECK(pi[i] == doctest::Approx(direct).epsilon(1e-8));
    total += pi[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("state-independent kernels collapse the intervals") {
  auto model = uniform_chain();
  auto grid = build_uniform_grid(model->box(), {4});
  auto [lo, hi] = transition_intervals(*model, grid, 0, /*grad_source=*/0.0);
  for (std::size_t idx = 0; idx < lo.size(); ++idx) {
    CHECK(lo[idx] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(hi[idx] == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("whole-box target cell has unit mass intervals") {
  auto model = uniform_chain();
  auto grid = build_uniform_grid(model->box(), {1});
  auto [lo, hi] = transition_intervals(*model, grid, 0, 0.0);
  CHECK(lo[0] == doctest::Approx(1.0));
  CHECK(hi[0] == doctest::Approx(1.0));
}

TEST_CASE("mesh-plus-margin brackets a dense scan of the AV row extrema") {
  auto model = triangular_av_model(5, 2.3);
  auto grid = build_uniform_grid(model->box(), {16});
  auto consts = estimate_sup_bounds(*model, 41, 1.1);
  AbstractionSettings settings;
  settings.extremize_mesh = 9;
  auto [lo, hi] = transition_intervals(*model, grid, 2, consts.grad_source, settings);
  const int n = grid.cell_count();
  const int i = 5;  // one source cell, dense 1000-point scan inside it
  Box src = grid.cell_box(i);
  for (int j = 0; j < n; ++j) {
    double scan_lo = 1e300, scan_hi = -1e300;
    for (int s = 0; s <= 1000; ++s) {
      std::vector<double> x{src.lows[0] + src.side(0) * s / 1000.0};
      double m = model->cell_mass(x, grid.cell_box(j), 2, {});
      scan_lo = std::min(scan_lo, m);
      scan_hi = std::max(scan_hi, m);
    }
    CHECK(lo[static_cast<std::size_t>(i) * n + j] <= scan_lo + 1e-12);
    CHECK(hi[static_cast<std::size_t>(i) * n + j] >= scan_hi - 1e-12);
  }
}

TEST_CASE("completeness witness: induced rows live inside the intervals") {
  auto rng = make_stream(29, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto check = [&](const KernelModel& model, const GridPartition& grid, int action,
                   const GradientConstants& consts) {
    auto [lo, hi] = transition_intervals(model, grid, action, consts.grad_source);
    const int n = grid.cell_count();
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x(model.state_dim());
      for (double& c : x) c = unif(rng);
      int i = grid.cell_of(x);
      for (int j = 0; j < n; ++j) {
        double m = model.cell_mass(x, grid.cell_box(j), action, {});
        CHECK(lo[static_cast<std::size_t>(i) * n + j] <= m + 1e-12);
        CHECK(hi[static_cast<std::size_t>(i) * n + j] >= m - 1e-12);
      }
    }
  };

  auto av = triangular_av_model(5, 2.3);
  check(*av, build_uniform_grid(av->box(), {12}), 1, estimate_sup_bounds(*av, 41, 1.1));

  Box box({0.0, 0.0}, {1.0, 1.0});
  auto gauss = clipped_gaussian_model(box, diag2(0.8, 0.8), {0.5, 0.5}, diag2(0.5, 0.5), 2);
  check(*gauss, build_uniform_grid(box, {3, 3}), 0, estimate_sup_bounds(*gauss, 11, 1.1));
}

TEST_CASE("interval widths shrink under refinement") {
  auto mean_width = [](const KernelModel& model, int cells_per_dim, double grad_source) {
    std::vector<int> counts(model.state_dim(), cells_per_dim);
    auto grid = build_uniform_grid(model.box(), counts);
    auto [lo, hi] = transition_intervals(model, grid, 0, grad_source);
    double sum = 0.0;
    for (std::size_t idx = 0; idx < lo.size(); ++idx) sum += hi[idx] - lo[idx];
    return sum / static_cast<double>(lo.size());
  };
  Box box({0.0, 0.0}, {1.0, 1.0});
  auto gauss = clipped_gaussian_model(box, diag2(0.8, 0.8), {0.5, 0.5}, diag2(0.5, 0.5), 2);
  auto cg = estimate_sup_bounds(*gauss, 11, 1.1);
  CHECK(mean_width(*gauss, 8, cg.grad_source) < mean_width(*gauss, 2, cg.grad_source));

  auto av = triangular_av_model(5, 2.3);
  auto ca = estimate_sup_bounds(*av, 41, 1.1);
  CHECK(mean_width(*av, 8, ca.grad_source) < mean_width(*av, 2, ca.grad_source));
}

TEST_CASE("abstract costs for the linear AV cost are corner-exact") {
  auto model = triangular_av_model(5, 2.3);
  auto grid = build_uniform_grid(model->box(), {80});
  auto [g_up, g_lo] = abstract_costs(*model, grid);
  // cell [0.9875, 1]: upper -2.27125, lower -2.3
  int cell = grid.cell_of(std::vector<double>{0.99});
  CHECK(g_up[0][cell] == doctest::Approx(-2.27125));
  CHECK(g_lo[0][cell] == doctest::Approx(-2.3));
  for (int a = 0; a < 5; ++a)
    for (int i = 0; i < grid.cell_count(); ++i) CHECK(g_lo[a][i] <= g_up[a][i]);
}

TEST_CASE("constant tabulated costs collapse the cost intervals") {
  TabulatedSpec spec;
  spec.box = Box({0.0}, {1.0});
  spec.grid = {4};
  spec.horizon = 1;
  spec.q0 = std::vector<double>(4, 1.0);
  spec.q = {std::vector<double>(16, 1.0), std::vector<double>(16, 1.0)};
  spec.costs = {std::vector<double>(4, 0.7), std::vector<double>(4, 0.7)};
  spec.action_values = {0.0, 1.0};
  spec.sup_density = 1.0;
  spec.grad_bound = 0.0;
  auto model = tabulated_model(spec);
  auto grid = build_uniform_grid(model->box(), {4});
  auto [g_up, g_lo] = abstract_costs(*model, grid);
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 4; ++i) {
      CHECK(g_up[a][i] == doctest::Approx(0.7));
      CHECK(g_lo[a][i] == doctest::Approx(0.7));
    }
}

TEST_CASE("full abstraction build validates and carries metadata") {
  auto model = triangular_av_model(4, 2.3);
  auto grid = build_uniform_grid(model->box(), {10});
  auto consts = estimate_sup_bounds(*model, 21, 1.1);
  auto abs = build_abstraction(*model, grid, consts);
  abs.validate();
  CHECK(abs.num_action_slots() == 5);
  CHECK(abs.g_lower.has_value());
  CHECK(abs.metadata.margin_used);
  CHECK(abs.metadata.constants.sup_density == doctest::Approx(consts.sup_density));
  // every row is a nonempty ambiguity set
  for (int a = 0; a < 5; ++a)
    for (int i = 0; i < abs.num_states(); ++i) CHECK_NOTHROW(abs.row(i, a).validate());
}
