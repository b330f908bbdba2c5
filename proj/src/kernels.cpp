#include "entrobound/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "entrobound/quadrature.hpp"

namespace entrobound {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double normal_pdf_1d(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::acos(-1.0));
}

bool is_diagonal(const std::vector<std::vector<double>>& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (i != j && m[i][j] != 0.0) return false;
  return true;
}

// Lower-triangular Cholesky factor; throws on non-PD input.
std::vector<std::vector<double>> cholesky(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(a[i].size()) != n)
      throw ConfigError("covariance matrix is not square");
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s <= 0.0) throw ConfigError("covariance matrix is not positive definite");
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return l;
}

std::string format_matrix(const std::vector<std::vector<double>>& m) {
  std::ostringstream out;
  out.precision(17);
  out << "[";
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << (i ? ";" : "");
    for (std::size_t j = 0; j < m[i].size(); ++j) out << (j ? "," : "") << m[i][j];
  }
  out << "]";
  return out.str();
}

std::string format_vector(std::span<const double> v) {
  std::ostringstream out;
  out.precision(17);
  out << "[";
  for (std::size_t j = 0; j < v.size(); ++j) out << (j ? "," : "") << v[j];
  out << "]";
  return out.str();
}

}  // namespace

double KernelModel::initial_cell_mass(const Box& cell, const QuadratureSettings& quad) const {
  return integrate_box_checked(cell, quad.order, quad.tol,
                               [&](std::span<const double> x) { return initial_density(x); });
}

double KernelModel::cell_mass(std::span<const double> x, const Box& cell, int action,
                              const QuadratureSettings& quad) const {
  return integrate_box_checked(cell, quad.order, quad.tol,
                               [&](std::span<const double> xp) {
                                 return transition_density(x, xp, action);
                               });
}

GradientBound trajectory_gradient_bound(double sup_density, double grad_bound, int horizon) {
  if (sup_density < 0.0 || grad_bound < 0.0)
    throw GuardError("trajectory_gradient_bound: constants must be nonnegative");
  GradientBound b;
  if (grad_bound == 0.0) {
    b.value = 0.0;
    b.log_value = -std::numeric_limits<double>::infinity();
    return b;
  }
  b.log_value = std::log(2.0) + horizon * std::log(sup_density) + std::log(grad_bound);
  b.value = b.log_value < 700.0 ? std::exp(b.log_value)
                                : std::numeric_limits<double>::infinity();
  return b;
}

// ---------------------------------------------------------------------------
// Clipped Gaussian random walk
// ---------------------------------------------------------------------------

namespace {

class ClippedGaussian final : public KernelModel {
 public:
  ClippedGaussian(const Box& box, std::vector<std::vector<double>> sigma,
                  std::vector<double> x0_mean, std::vector<std::vector<double>> sigma0,
                  int horizon)
      : KernelModel(box, horizon),
        sigma_(std::move(sigma)),
        sigma0_(std::move(sigma0)),
        x0_mean_(std::move(x0_mean)) {
    const int n = state_dim();
    if (static_cast<int>(sigma_.size()) != n || static_cast<int>(sigma0_.size()) != n ||
        static_cast<int>(x0_mean_.size()) != n)
      throw ConfigError("clipped_gaussian: parameter dimensions do not match the box");
    chol_ = cholesky(sigma_);
    chol0_ = cholesky(sigma0_);
    diagonal_ = is_diagonal(sigma_) && is_diagonal(sigma0_);
    o0_ = out_of_box_mass(x0_mean_, chol0_, sigma0_);
  }

  int num_actions() const override { return 0; }

  double initial_density(std::span<const double> x) const override {
    return gauss_pdf(x, x0_mean_, chol0_) + o0_ / box_.volume();
  }

  double transition_density(std::span<const double> x, std::span<const double> xp,
                            int) const override {
    double o = out_of_box_mass(x, chol_, sigma_);
    return gauss_pdf(xp, x, chol_) + o / box_.volume();
  }

  double initial_cell_mass(const Box& cell, const QuadratureSettings& quad) const override {
    return gauss_box_mass(cell, x0_mean_, chol0_, sigma0_, quad) +
           o0_ * cell.volume() / box_.volume();
  }

  double cell_mass(std::span<const double> x, const Box& cell, int,
                   const QuadratureSettings& quad) const override {
    double o = out_of_box_mass(x, chol_, sigma_, quad);
    return gauss_box_mass(cell, x, chol_, sigma_, quad) + o * cell.volume() / box_.volume();
  }

  void sample_initial(std::mt19937_64& rng, std::span<double> out) const override {
    draw(rng, x0_mean_, chol0_, out);
  }

  void sample_step(std::span<const double> x, int, std::mt19937_64& rng,
                   std::span<double> out) const override {
    draw(rng, x, chol_, out);
  }

  std::string describe() const override {
    std::ostringstream s;
    s << "clipped_gaussian(box_lo=" << format_vector(box_.lows)
      << ",box_hi=" << format_vector(box_.highs) << ",sigma=" << format_matrix(sigma_)
      << ",x0=" << format_vector(x0_mean_) << ",sigma0=" << format_matrix(sigma0_)
      << ",K=" << horizon_ << ")";
    return s.str();
  }

 private:
  double gauss_pdf(std::span<const double> x, std::span<const double> mean,
                   const std::vector<std::vector<double>>& chol) const {
    const int n = state_dim();
    // Solve L z = (x - mean), pdf = exp(-|z|^2/2) / ((2 pi)^{n/2} det L).
    double quad_form = 0.0, log_det = 0.0;
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) {
      double s = x[i] - mean[i];
      for (int k = 0; k < i; ++k) s -= chol[i][k] * z[k];
      z[i] = s / chol[i][i];
      quad_form += z[i] * z[i];
      log_det += std::log(chol[i][i]);
    }
    double log_pdf = -0.5 * quad_form - 0.5 * n * std::log(2.0 * std::acos(-1.0)) - log_det;
    return std::exp(log_pdf);
  }

  // Gaussian mass inside an axis-aligned cell. Diagonal covariances use
  // CDF products; general covariances fall back to checked quadrature.
  double gauss_box_mass(const Box& cell, std::span<const double> mean,
                        const std::vector<std::vector<double>>& chol,
                        const std::vector<std::vector<double>>& cov,
                        const QuadratureSettings& quad) const {
    if (diagonal_) {
      double m = 1.0;
      for (int j = 0; j < state_dim(); ++j) {
        double sd = std::sqrt(cov[j][j]);
        m *= normal_cdf((cell.highs[j] - mean[j]) / sd) -
             normal_cdf((cell.lows[j] - mean[j]) / sd);
      }
      return m;
    }
    std::vector<double> mu(mean.begin(), mean.end());
    return integrate_box_checked(cell, quad.order, quad.tol,
                                 [&](std::span<const double> xp) {
                                   return gauss_pdf(xp, mu, chol);
                                 });
  }

  double out_of_box_mass(std::span<const double> mean,
                         const std::vector<std::vector<double>>& chol,
                         const std::vector<std::vector<double>>& cov,
                         const QuadratureSettings& quad = {}) const {
    return 1.0 - gauss_box_mass(box_, mean, chol, cov, quad);
  }

  void draw(std::mt19937_64& rng, std::span<const double> mean,
            const std::vector<std::vector<double>>& chol, std::span<double> out) const {
    const int n = state_dim();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = gauss(rng);
    bool inside = true;
    for (int i = 0; i < n; ++i) {
      double v = mean[i];
      for (int k = 0; k <= i; ++k) v += chol[i][k] * z[k];
      out[i] = v;
      if (v < box_.lows[i] || v > box_.highs[i]) inside = false;
    }
    if (!inside) {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int i = 0; i < n; ++i)
        out[i] = box_.lows[i] + unif(rng) * box_.side(i);
    }
  }

  std::vector<std::vector<double>> sigma_, sigma0_, chol_, chol0_;
  std::vector<double> x0_mean_;
  bool diagonal_ = false;
  double o0_ = 0.0;
};

}  // namespace

std::unique_ptr<KernelModel> clipped_gaussian_model(
    const Box& box, const std::vector<std::vector<double>>& sigma,
    const std::vector<double>& x0_mean, const std::vector<std::vector<double>>& sigma0,
    int horizon) {
  return std::make_unique<ClippedGaussian>(box, sigma, x0_mean, sigma0, horizon);
}

// ---------------------------------------------------------------------------
// Triangular AV model
// ---------------------------------------------------------------------------

namespace {

struct Triangle {
  double l, m, r;
};

// Noise shape as a function of velocity: widens and shifts down as v grows.
Triangle av_triangle(double v) {
  return Triangle{(1.0 - v) * 0.0 + v * -0.8, (1.0 - v) * 0.05 + v * -0.2,
                  (1.0 - v) * 0.1 + v * 0.0};
}

double tri_pdf(const Triangle& t, double w) {
  if (w < t.l || w > t.r) return 0.0;
  double h = 2.0 / (t.r - t.l);
  if (w <= t.m) return h * (w - t.l) / (t.m - t.l);
  return h * (t.r - w) / (t.r - t.m);
}

double tri_cdf(const Triangle& t, double w) {
  if (w <= t.l) return 0.0;
  if (w >= t.r) return 1.0;
  if (w <= t.m) {
    double d = w - t.l;
    return d * d / ((t.r - t.l) * (t.m - t.l));
  }
  double d = t.r - w;
  return 1.0 - d * d / ((t.r - t.l) * (t.r - t.m));
}

double tri_inverse_cdf(const Triangle& t, double u) {
  double split = (t.m - t.l) / (t.r - t.l);
  if (u <= split) return t.l + std::sqrt(u * (t.r - t.l) * (t.m - t.l));
  return t.r - std::sqrt((1.0 - u) * (t.r - t.l) * (t.r - t.m));
}

class TriangularAv final : public KernelModel {
 public:
  TriangularAv(int horizon, double phi, const AvInitialSpec& q0)
      : KernelModel(Box({0.0}, {1.0}), horizon), phi_(phi), q0_(q0) {
    if (!(phi_ > 0.0)) throw ConfigError("triangular_av: phi must be positive");
    if (!(q0_.a >= 0.0 && q0_.b <= 1.0 && q0_.b > q0_.a))
      throw ConfigError("triangular_av: q0 support must lie inside [0,1]");
    if (q0_.kind == AvInitialSpec::Kind::Triangular &&
        !(q0_.mode > q0_.a && q0_.mode < q0_.b))
      throw ConfigError("triangular_av: q0 mode must lie strictly inside its support");
  }

  int num_actions() const override { return 5; }
  std::vector<double> action_values() const override { return {0, 5, 10, 15, 20}; }

  double drift(double v, int action) const { return 0.8 * v + 0.01 * action_values()[action]; }

  double initial_density(std::span<const double> x) const override {
    double v = x[0];
    if (q0_.kind == AvInitialSpec::Kind::Uniform)
      return (v >= q0_.a && v <= q0_.b) ? 1.0 / (q0_.b - q0_.a) : 0.0;
    return tri_pdf(Triangle{q0_.a, q0_.mode, q0_.b}, v);
  }

  double transition_density(std::span<const double> x, std::span<const double> xp,
                            int action) const override {
    return tri_pdf(av_triangle(x[0]), xp[0] - drift(x[0], action));
  }

  double initial_cell_mass(const Box& cell, const QuadratureSettings&) const override {
    if (q0_.kind == AvInitialSpec::Kind::Uniform) {
      double lo = std::max(cell.lows[0], q0_.a), hi = std::min(cell.highs[0], q0_.b);
      return std::max(0.0, hi - lo) / (q0_.b - q0_.a);
    }
    Triangle t{q0_.a, q0_.mode, q0_.b};
    return tri_cdf(t, cell.highs[0]) - tri_cdf(t, cell.lows[0]);
  }

  double cell_mass(std::span<const double> x, const Box& cell, int action,
                   const QuadratureSettings&) const override {
    Triangle t = av_triangle(x[0]);
    double d = drift(x[0], action);
    return tri_cdf(t, cell.highs[0] - d) - tri_cdf(t, cell.lows[0] - d);
  }

  bool has_costs() const override { return true; }
  double stage_cost(std::span<const double> x, int) const override { return -phi_ * x[0]; }
  std::optional<std::pair<double, double>> cost_range(const Box& cell, int) const override {
    // g = -phi * v is decreasing in v: min at the top corner, max at the bottom.
    return std::make_pair(-phi_ * cell.highs[0], -phi_ * cell.lows[0]);
  }

  void sample_initial(std::mt19937_64& rng, std::span<double> out) const override {
    std::uniform_real_distribution<double> unif(1e-12, 1.0 - 1e-12);
    double u = unif(rng);
    if (q0_.kind == AvInitialSpec::Kind::Uniform)
      out[0] = q0_.a + u * (q0_.b - q0_.a);
    else
      out[0] = tri_inverse_cdf(Triangle{q0_.a, q0_.mode, q0_.b}, u);
  }

  void sample_step(std::span<const double> x, int action, std::mt19937_64& rng,
                   std::span<double> out) const override {
    std::uniform_real_distribution<double> unif(1e-12, 1.0 - 1e-12);
    double w = tri_inverse_cdf(av_triangle(x[0]), unif(rng));
    out[0] = std::clamp(drift(x[0], action) + w, 0.0, 1.0);
  }

  std::optional<Box> transition_support(const Box& source, int action) const override {
    // v' ranges over [drift + l, drift + r]; drift + l = 0.01u exactly and
    // drift + r = 0.7 v + 0.1 + 0.01u is increasing in v.
    double u_term = 0.01 * action_values()[action];
    double lo = u_term;
    double hi = std::min(1.0, 0.7 * source.highs[0] + 0.1 + u_term);
    return Box({lo}, {hi});
  }

  std::optional<double> analytic_sup_density() const override {
    // Peak 2/(r-l) is largest where the support 0.1 + 0.7 v is narrowest (v=0).
    double kernel_peak = 20.0;
    double q0_peak = q0_.kind == AvInitialSpec::Kind::Uniform
                         ? 1.0 / (q0_.b - q0_.a)
                         : 2.0 / (q0_.b - q0_.a);
    return std::max(kernel_peak, q0_peak);
  }

  std::string describe() const override {
    std::ostringstream s;
    s.precision(17);
    s << "triangular_av(K=" << horizon_ << ",phi=" << phi_ << ",q0="
      << (q0_.kind == AvInitialSpec::Kind::Uniform ? "uniform" : "triangular") << ","
      << q0_.a << "," << q0_.mode << "," << q0_.b << ")";
    return s.str();
  }

 private:
  double phi_;
  AvInitialSpec q0_;
};

}  // namespace

std::unique_ptr<KernelModel> triangular_av_model(int horizon, double phi,
                                                 const AvInitialSpec& q0) {
  return std::make_unique<TriangularAv>(horizon, phi, q0);
}

// ---------------------------------------------------------------------------
// Tabulated model
// ---------------------------------------------------------------------------

namespace {

class Tabulated final : public KernelModel {
 public:
  explicit Tabulated(TabulatedSpec spec)
      : KernelModel(spec.box, spec.horizon), spec_(std::move(spec)) {
    grid_ = build_uniform_grid(box_, spec_.grid);
    const std::size_t cells = static_cast<std::size_t>(grid_.cell_count());
    if (spec_.q0.size() != cells)
      throw ConfigError("tabulated: q0 table size does not match the grid");
    int actions = std::max<std::size_t>(1, spec_.q.size());
    if (spec_.q.empty()) throw ConfigError("tabulated: transition tables missing");
    for (const auto& table : spec_.q)
      if (table.size() != cells * cells)
        throw ConfigError("tabulated: transition table size does not match the grid");
    if (!spec_.costs.empty() && spec_.costs.size() != static_cast<std::size_t>(actions))
      throw ConfigError("tabulated: cost table count does not match actions");
    for (const auto& table : spec_.costs)
      if (table.size() != cells)
        throw ConfigError("tabulated: cost table size does not match the grid");
    if (!(spec_.sup_density > 0.0))
      throw ConfigError("tabulated: sup_density must be supplied and positive");
    if (spec_.grad_bound < 0.0)
      throw ConfigError("tabulated: grad_bound must be nonnegative");
    cell_vol_ = grid_.cell_volume();
  }

  int num_actions() const override {
    return spec_.action_values.empty() ? 0 : static_cast<int>(spec_.q.size());
  }
  std::vector<double> action_values() const override { return spec_.action_values; }

  double initial_density(std::span<const double> x) const override {
    return spec_.q0[grid_.cell_of(x)];
  }
  double transition_density(std::span<const double> x, std::span<const double> xp,
                            int action) const override {
    const auto& table = spec_.q[table_index(action)];
    return table[static_cast<std::size_t>(grid_.cell_of(x)) * grid_.cell_count() +
                 grid_.cell_of(xp)];
  }

  double initial_cell_mass(const Box& cell, const QuadratureSettings&) const override {
    return overlap_mass(cell, [&](int tab) { return spec_.q0[tab]; });
  }
  double cell_mass(std::span<const double> x, const Box& cell, int action,
                   const QuadratureSettings&) const override {
    const auto& table = spec_.q[table_index(action)];
    std::size_t base = static_cast<std::size_t>(grid_.cell_of(x)) * grid_.cell_count();
    return overlap_mass(cell, [&](int tab) { return table[base + tab]; });
  }

  bool has_costs() const override { return !spec_.costs.empty(); }
  double stage_cost(std::span<const double> x, int action) const override {
    if (spec_.costs.empty()) throw GuardError("tabulated model has no stage cost");
    return spec_.costs[table_index(action)][grid_.cell_of(x)];
  }
  std::optional<std::pair<double, double>> cost_range(const Box& cell, int action) const override {
    if (spec_.costs.empty()) return std::nullopt;
    const auto& table = spec_.costs[table_index(action)];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for_overlapping(cell, [&](int tab, double) {
      lo = std::min(lo, table[tab]);
      hi = std::max(hi, table[tab]);
    });
    return std::make_pair(lo, hi);
  }

  void sample_initial(std::mt19937_64& rng, std::span<double> out) const override {
    sample_table(rng, [&](int tab) { return spec_.q0[tab]; }, out);
  }
  void sample_step(std::span<const double> x, int action, std::mt19937_64& rng,
                   std::span<double> out) const override {
    const auto& table = spec_.q[table_index(action)];
    std::size_t base = static_cast<std::size_t>(grid_.cell_of(x)) * grid_.cell_count();
    sample_table(rng, [&](int tab) { return table[base + tab]; }, out);
  }

  std::optional<GradientConstants> analytic_bounds() const override {
    GradientConstants c;
    c.sup_density = spec_.sup_density;
    c.grad_joint = c.grad_source = c.grad_target = spec_.grad_bound;
    c.analytic = true;
    return c;
  }

  std::string describe() const override {
    std::ostringstream s;
    s << "tabulated(grid=" << format_vector(std::vector<double>(spec_.grid.begin(),
                                                                spec_.grid.end()))
      << ",K=" << horizon_ << ",actions=" << spec_.q.size() << ",Lq=" << spec_.sup_density
      << ",Lgrad=" << spec_.grad_bound << ")";
    return s.str();
  }

 private:
  std::size_t table_index(int action) const {
    if (action < 0 || action >= std::max(1, num_actions()))
      throw GuardError("tabulated: action index out of range");
    return spec_.action_values.empty() ? 0 : static_cast<std::size_t>(action);
  }

  // Visits tab cells overlapping `cell` with their overlap volumes.
  void for_overlapping(const Box& cell, const std::function<void(int, double)>& fn) const {
    const int d = grid_.dim();
    std::vector<int> lo(d), hi(d), idx(d);
    for (int j = 0; j < d; ++j) {
      double h = grid_.cell_side(j);
      lo[j] = std::clamp(static_cast<int>(std::floor((cell.lows[j] - box_.lows[j]) / h)),
                         0, grid_.counts[j] - 1);
      hi[j] = std::clamp(static_cast<int>(std::ceil((cell.highs[j] - box_.lows[j]) / h)) - 1,
                         0, grid_.counts[j] - 1);
      idx[j] = lo[j];
    }
    for (;;) {
      double vol = 1.0;
      for (int j = 0; j < d; ++j) {
        double h = grid_.cell_side(j);
        double a = box_.lows[j] + idx[j] * h;
        double b = a + h;
        vol *= std::max(0.0, std::min(b, cell.highs[j]) - std::max(a, cell.lows[j]));
      }
      if (vol > 0.0) fn(grid_.encode(idx), vol);
      int j = d - 1;
      while (j >= 0 && ++idx[j] > hi[j]) idx[j--] = lo[j];
      if (j < 0) break;
    }
  }

  double overlap_mass(const Box& cell, const std::function<double(int)>& density) const {
    double mass = 0.0;
    for_overlapping(cell, [&](int tab, double vol) { mass += density(tab) * vol; });
    return mass;
  }

  void sample_table(std::mt19937_64& rng, const std::function<double(int)>& density,
                    std::span<double> out) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng), acc = 0.0;
    int chosen = grid_.cell_count() - 1;
    for (int t = 0; t < grid_.cell_count(); ++t) {
      acc += density(t) * cell_vol_;
      if (u <= acc) {
        chosen = t;
        break;
      }
    }
    Box cb = grid_.cell_box(chosen);
    for (int j = 0; j < grid_.dim(); ++j)
      out[j] = cb.lows[j] + unif(rng) * cb.side(j);
  }

  TabulatedSpec spec_;
  GridPartition grid_;
  double cell_vol_ = 0.0;
};

}  // namespace

std::unique_ptr<KernelModel> tabulated_model(TabulatedSpec spec) {
  return std::make_unique<Tabulated>(std::move(spec));
}

// ---------------------------------------------------------------------------
// Numeric supremum estimation
// ---------------------------------------------------------------------------

GradientConstants estimate_sup_bounds(const KernelModel& model, int mesh_per_dim,
                                      double safety_factor) {
  if (auto analytic = model.analytic_bounds()) {
    GradientConstants c = *analytic;
    c.safety_factor = 1.0;
    return c;
  }
  const Box& box = model.box();
  const int d = box.dim();
  const int mesh = std::max(2, mesh_per_dim);

  std::vector<std::vector<double>> points;
  {
    std::vector<int> idx(d, 0);
    std::vector<double> x(d);
    for (;;) {
      for (int j = 0; j < d; ++j)
        x[j] = box.lows[j] + box.side(j) * idx[j] / (mesh - 1);
      points.push_back(x);
      int j = d - 1;
      while (j >= 0 && ++idx[j] == mesh) idx[j--] = 0;
      if (j < 0) break;
    }
  }

  const int actions = std::max(1, model.num_actions());
  double sup_q = 0.0, grad_src = 0.0, grad_dst = 0.0, grad_q0 = 0.0;

  // Central differences; steps stay inside the box by nudging at the edges.
  auto fd_sup = [&](const std::function<double(std::span<const double>)>& f,
                    std::vector<double> x) {
    double g = 0.0;
    for (int j = 0; j < d; ++j) {
      double h = box.side(j) * 1e-6;
      double xj = std::clamp(x[j], box.lows[j] + h, box.highs[j] - h);
      double keep = x[j];
      x[j] = xj + h;
      double up = f(x);
      x[j] = xj - h;
      double dn = f(x);
      x[j] = keep;
      g = std::max(g, std::abs(up - dn) / (2.0 * h));
    }
    return g;
  };

  for (const auto& x : points) {
    double q0 = model.initial_density(x);
    sup_q = std::max(sup_q, q0);
    grad_q0 = std::max(grad_q0, fd_sup([&](std::span<const double> p) {
                         return model.initial_density(p);
                       }, x));
  }
  for (int a = 0; a < actions; ++a) {
    int action = model.controlled() ? a : 0;
    for (const auto& x : points) {
      for (const auto& xp : points) {
        sup_q = std::max(sup_q, model.transition_density(x, xp, action));
        grad_src = std::max(grad_src, fd_sup([&](std::span<const double> p) {
                              return model.transition_density(p, xp, action);
                            }, x));
        grad_dst = std::max(grad_dst, fd_sup([&](std::span<const double> p) {
                              return model.transition_density(x, p, action);
                            }, xp));
      }
    }
  }

  GradientConstants c;
  if (auto sup = model.analytic_sup_density()) {
    c.sup_density = *sup;
  } else {
    c.sup_density = sup_q * safety_factor;
  }
  // q0 is a density over the target space, so its gradient feeds the
  // target-slot bound used by the per-step correction.
  c.grad_source = grad_src * safety_factor;
  c.grad_target = std::max(grad_dst, grad_q0) * safety_factor;
  c.grad_joint = std::max(c.grad_source, c.grad_target);
  c.analytic = false;
  c.safety_factor = safety_factor;
  return c;
}

}  // namespace entrobound
