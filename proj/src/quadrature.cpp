#include "entrobound/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace entrobound {

namespace {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

Rule compute_rule(int order) {
  Rule r;
  r.nodes.resize(order);
  r.weights.resize(order);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < order; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n(x) = 0.
    double x = std::cos(pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

const Rule& cached_rule(int order) {
  static std::map<int, Rule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_rule(order)).first;
  return it->second;
}

double tensor_integral(const Box& box, const Rule& rule,
                       const std::function<double(std::span<const double>)>& f) {
  const int d = box.dim();
  const int n = static_cast<int>(rule.nodes.size());
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  double jac = 1.0;
  for (int j = 0; j < d; ++j) jac *= 0.5 * box.side(j);
  double sum = 0.0;
  for (;;) {
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      x[j] = box.lows[j] + 0.5 * box.side(j) * (1.0 + rule.nodes[idx[j]]);
      w *= rule.weights[idx[j]];
    }
    sum += w * f(x);
    int j = d - 1;
    while (j >= 0 && ++idx[j] == n) idx[j--] = 0;
    if (j < 0) break;
  }
  return sum * jac;
}

double split_integral(const Box& box, const Rule& rule,
                      const std::function<double(std::span<const double>)>& f) {
  // One dyadic split along the widest dimension.
  int widest = 0;
  for (int j = 1; j < box.dim(); ++j)
    if (box.side(j) > box.side(widest)) widest = j;
  Box lo = box, hi = box;
  double mid = 0.5 * (box.lows[widest] + box.highs[widest]);
  lo.highs[widest] = mid;
  hi.lows[widest] = mid;
  return tensor_integral(lo, rule, f) + tensor_integral(hi, rule, f);
}

}  // namespace

const std::vector<double>& gauss_legendre_nodes(int order) { return cached_rule(order).nodes; }
const std::vector<double>& gauss_legendre_weights(int order) { return cached_rule(order).weights; }

double integrate_box(const Box& box, int order,
                     const std::function<double(std::span<const double>)>& f) {
  return tensor_integral(box, cached_rule(order), f);
}

double integrate_box_checked(const Box& box, int order, double tol,
                             const std::function<double(std::span<const double>)>& f) {
  const Rule& fine = cached_rule(order);
  const Rule& coarse = cached_rule(std::max(2, order / 2));
  double v_fine = tensor_integral(box, fine, f);
  double v_coarse = tensor_integral(box, coarse, f);
  double err = std::abs(v_fine - v_coarse);
  if (err <= tol) return v_fine;

  double v_split = split_integral(box, fine, f);
  double err_split = std::abs(v_split - v_fine);
  if (err_split <= tol) return v_split;

  std::ostringstream msg;
  msg << "quadrature did not converge: achieved error estimate " << err_split
      << " exceeds tolerance " << tol;
  throw NumericalError(msg.str());
}

}  // namespace entrobound
