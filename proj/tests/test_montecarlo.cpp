#include <doctest.h>

#include <cmath>
#include <functional>

#include "entrobound/montecarlo.hpp"
#include "entrobound/rng.hpp"

using namespace entrobound;

namespace {

std::unique_ptr<KernelModel> uniform_model(int horizon, double cost_value) {
  TabulatedSpec spec;
  spec.box = Box({0.0}, {1.0});
  spec.grid = {4};
  spec.horizon = horizon;
  spec.q0 = std::vector<double>(4, 1.0);
  spec.q = {std::vector<double>(16, 1.0)};
  spec.costs = {std::vector<double>(4, cost_value)};
  spec.action_values = {};  // chain with a cost attached
  spec.sup_density = 1.0;
  spec.grad_bound = 0.0;
  return tabulated_model(spec);
}

double simpson(double a, double b, int panels, const std::function<double(double)>& f) {
  double h = (b - a) / (2 * panels);
  double sum = f(a) + f(b);
  for (int i = 1; i < 2 * panels; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("horizon zero draws only the initial state") {
  auto model = uniform_model(0, 0.0);
  auto trajectories = simulate(*model, nullptr, nullptr, 50, 7);
  REQUIRE(trajectories.size() == 50);
  for (const auto& t : trajectories) {
    CHECK(t.length() == 1);
    CHECK(t.state(0)[0] >= 0.0);
    CHECK(t.state(0)[0] <= 1.0);
  }
}

TEST_CASE("deterministic-limit kernels give constant trajectories") {
  Box box({0.0, 0.0}, {1.0, 1.0});
  std::vector<std::vector<double>> tiny{{1e-18, 0.0}, {0.0, 1e-18}};
  std::vector<std::vector<double>> s0{{0.01, 0.0}, {0.0, 0.01}};
  auto model = clipped_gaussian_model(box, tiny, {0.5, 0.5}, s0, 4);
  auto trajectories = simulate(*model, nullptr, nullptr, 20, 11);
  for (const auto& t : trajectories) {
    for (int k = 1; k < t.length(); ++k) {
      CHECK(t.state(k)[0] == doctest::Approx(t.state(0)[0]).epsilon(1e-7));
      CHECK(t.state(k)[1] == doctest::Approx(t.state(0)[1]).epsilon(1e-7));
    }
  }
}

TEST_CASE("uniform systems have zero KL to uniform") {
  auto model = uniform_model(5, 0.0);
  auto est = mc_kl_to_uniform(*model, nullptr, nullptr, 20000, 13);
  REQUIRE(est.std_error.has_value());
  CHECK(std::abs(est.mean) <= 3.0 * *est.std_error + 1e-12);
}

TEST_CASE("expected cost of constant stage costs is exact") {
  auto zero = uniform_model(4, 0.0);
  auto est0 = mc_expected_cost(*zero, nullptr, nullptr, 500, 17);
  CHECK(est0.mean == 0.0);

  auto constant = uniform_model(4, 0.7);
  auto estc = mc_expected_cost(*constant, nullptr, nullptr, 500, 17);
  CHECK(estc.mean == doctest::Approx(4 * 0.7).epsilon(1e-12));
  REQUIRE(estc.std_error.has_value());
  CHECK(*estc.std_error == doctest::Approx(0.0));
}

TEST_CASE("single-sample estimates carry no standard error") {
  auto model = uniform_model(2, 1.0);
  auto est = mc_expected_cost(*model, nullptr, nullptr, 1, 19);
  CHECK_FALSE(est.std_error.has_value());
  CHECK(est.samples == 1);
}

TEST_CASE("standard errors shrink like the square root of the sample count") {
  Box box({0.0}, {1.0});
  auto model = clipped_gaussian_model(box, {{0.09}}, {0.3}, {{0.04}}, 3);
  auto e3 = mc_kl_to_uniform(*model, nullptr, nullptr, 1000, 23);
  auto e4 = mc_kl_to_uniform(*model, nullptr, nullptr, 10000, 23);
  auto e5 = mc_kl_to_uniform(*model, nullptr, nullptr, 100000, 23);
  REQUIRE(e3.std_error.has_value());
  REQUIRE(e5.std_error.has_value());
  double ratio_35 = *e3.std_error / *e5.std_error;  // ideal: 10
  CHECK(ratio_35 >= 10.0 / 1.5);
  CHECK(ratio_35 <= 10.0 * 1.5);
  double ratio_34 = *e3.std_error / *e4.std_error;  // ideal: sqrt(10)
  CHECK(ratio_34 >= std::sqrt(10.0) / 1.5);
  CHECK(ratio_34 <= std::sqrt(10.0) * 1.5);
}

TEST_CASE("identical seeds reproduce estimates exactly") {
  auto model = triangular_av_model(6, 2.3);
  auto grid = build_uniform_grid(model->box(), {10});
  Policy policy;
  policy.horizon = 6;
  policy.num_states = 10;
  policy.action_values = model->action_values();
  policy.actions.assign(60, 3);
  auto a = mc_kl_to_uniform(*model, &grid, &policy, 5000, 101);
  auto b = mc_kl_to_uniform(*model, &grid, &policy, 5000, 101);
  CHECK(a.mean == b.mean);
  CHECK(*a.std_error == *b.std_error);
  auto c = mc_kl_to_uniform(*model, &grid, &policy, 5000, 102);
  CHECK(a.mean != c.mean);
}

TEST_CASE("KL estimate matches direct quadrature on a 1-D one-step system") {
  Box box({0.0}, {1.0});
  const double sigma = 0.25, sigma0 = 0.2, mean0 = 0.4;
  auto model = clipped_gaussian_model(box, {{sigma * sigma}}, {mean0},
                                      {{sigma0 * sigma0}}, 1);
  // KL(T||U) = integral q0(x) q(x,y) log(q0(x) q(x,y)) dx dy, lambda(S)=1
  auto q0 = [&](double x) {
    std::vector<double> p{x};
    return model->initial_density(p);
  };
  auto q = [&](double x, double y) {
    std::vector<double> px{x}, py{y};
    return model->transition_density(px, py, 0);
  };
  double exact = simpson(0.0, 1.0, 600, [&](double x) {
    return simpson(0.0, 1.0, 600, [&](double y) {
      double t = q0(x) * q(x, y);
      return t > 0 ? t * std::log(t) : 0.0;
    });
  });
  auto est = mc_kl_to_uniform(*model, nullptr, nullptr, 200000, 29);
  REQUIRE(est.std_error.has_value());
  CHECK(std::abs(est.mean - exact) <= 3.0 * *est.std_error);
}

TEST_CASE("AV rollouts under a full-throttle policy speed up and cost within range") {
  const int horizon = 8;
  auto model = triangular_av_model(horizon, 1.0);
  auto grid = build_uniform_grid(model->box(), {20});
  Policy policy;
  policy.horizon = horizon;
  policy.num_states = 20;
  policy.action_values = model->action_values();
  policy.actions.assign(static_cast<std::size_t>(horizon) * 20, 4);  // always accelerate

  auto trajectories = simulate(*model, &grid, &policy, 4000, 31);
  std::vector<double> mean_v(horizon + 1, 0.0);
  for (const auto& t : trajectories)
    for (int k = 0; k <= horizon; ++k) mean_v[k] += t.state(k)[0];
  for (double& v : mean_v) v /= trajectories.size();
  CHECK(mean_v[2] > mean_v[0]);
  CHECK(mean_v[horizon] > mean_v[2]);

  auto cost = mc_expected_cost(*model, &grid, &policy, 4000, 31);
  CHECK(cost.mean >= -1.0 * horizon);  // g = -phi v with phi = 1, v <= 1
  CHECK(cost.mean <= 0.0);

  auto objective = mc_objective(*model, &grid, &policy, -1, 4000, 31);
  auto kl = mc_kl_to_uniform(*model, &grid, &policy, 4000, 31);
  CHECK(objective.mean == doctest::Approx(cost.mean - kl.mean).epsilon(1e-12));
}

TEST_CASE("policy and partition prerequisites are enforced") {
  auto model = triangular_av_model(3, 2.3);
  CHECK_THROWS_AS(simulate(*model, nullptr, nullptr, 10, 1), GuardError);
  auto grid = build_uniform_grid(model->box(), {10});
  Policy wrong;
  wrong.horizon = 3;
  wrong.num_states = 7;  // mismatched shape
  wrong.actions.assign(21, 0);
  CHECK_THROWS_AS(simulate(*model, &grid, &wrong, 10, 1), GuardError);
}
