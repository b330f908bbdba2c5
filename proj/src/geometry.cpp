#include "entrobound/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace entrobound {

Box::Box(std::vector<double> lo, std::vector<double> hi)
    : lows(std::move(lo)), highs(std::move(hi)) {
  if (lows.size() != highs.size() || lows.empty())
    throw ConfigError("box: lows and highs must have equal, nonzero length");
  for (std::size_t j = 0; j < lows.size(); ++j) {
    if (!(highs[j] > lows[j])) {
      std::ostringstream msg;
      msg << "box: highs[" << j << "] must exceed lows[" << j << "]";
      throw ConfigError(msg.str());
    }
  }
}

double Box::volume() const {
  double v = 1.0;
  for (int j = 0; j < dim(); ++j) v *= side(j);
  return v;
}

double Box::max_side() const {
  double m = 0.0;
  for (int j = 0; j < dim(); ++j) m = std::max(m, side(j));
  return m;
}

bool Box::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (int j = 0; j < dim(); ++j)
    if (x[j] < lows[j] || x[j] > highs[j]) return false;
  return true;
}

GridPartition build_uniform_grid(const Box& box, const std::vector<int>& counts) {
  if (static_cast<int>(counts.size()) != box.dim())
    throw ConfigError("partition: counts dimension does not match box dimension");
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (counts[j] < 1) throw ConfigError("partition: counts must be >= 1");
  GridPartition p;
  p.box = box;
  p.counts = counts;
  long long total = 1;
  for (int c : counts) {
    total *= c;
    if (total > std::numeric_limits<int>::max())
      throw ConfigError("partition: cell count exceeds supported size");
  }
  p.total_cells_ = static_cast<int>(total);
  return p;
}

double GridPartition::cell_volume() const {
  double v = 1.0;
  for (int j = 0; j < dim(); ++j) v *= cell_side(j);
  return v;
}

double GridPartition::max_side() const {
  double m = 0.0;
  for (int j = 0; j < dim(); ++j) m = std::max(m, cell_side(j));
  return m;
}

void GridPartition::decode(int cell, std::span<int> idx) const {
  for (int j = dim() - 1; j >= 0; --j) {
    idx[j] = cell % counts[j];
    cell /= counts[j];
  }
}

int GridPartition::encode(std::span<const int> idx) const {
  int cell = 0;
  for (int j = 0; j < dim(); ++j) cell = cell * counts[j] + idx[j];
  return cell;
}

Box GridPartition::cell_box(int cell) const {
  std::vector<int> idx(dim());
  decode(cell, idx);
  std::vector<double> lo(dim()), hi(dim());
  for (int j = 0; j < dim(); ++j) {
    double h = cell_side(j);
    lo[j] = box.lows[j] + idx[j] * h;
    hi[j] = (idx[j] + 1 == counts[j]) ? box.highs[j] : box.lows[j] + (idx[j] + 1) * h;
  }
  return Box(std::move(lo), std::move(hi));
}

std::vector<double> GridPartition::cell_center(int cell) const {
  std::vector<int> idx(dim());
  decode(cell, idx);
  std::vector<double> c(dim());
  for (int j = 0; j < dim(); ++j)
    c[j] = box.lows[j] + (idx[j] + 0.5) * cell_side(j);
  return c;
}

int GridPartition::cell_of(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim())
    throw GuardError("cell_of: point dimension mismatch");
  int cell = 0;
  for (int j = 0; j < dim(); ++j) {
    if (x[j] < box.lows[j] || x[j] > box.highs[j])
      throw GuardError("cell_of: point outside box");
    int idx = static_cast<int>(std::floor((x[j] - box.lows[j]) / cell_side(j)));
    if (idx >= counts[j]) idx = counts[j] - 1;  // closed top face
    cell = cell * counts[j] + idx;
  }
  return cell;
}

TrajectorySpace trajectory_space_measures(const GridPartition& partition, int horizon) {
  if (horizon < 1) throw GuardError("trajectory_space_measures: horizon must be >= 1");
  TrajectorySpace t;
  const double steps = static_cast<double>(horizon) + 1.0;
  t.log_cell_count = steps * std::log(static_cast<double>(partition.cell_count()));
  t.log_volume = steps * std::log(partition.box.volume());
  t.max_side = partition.max_side();
  t.dim = (horizon + 1) * partition.dim();

  // |S| = |X|^(K+1), materialized only when it fits.
  std::uint64_t count = 1;
  bool fits = true;
  const std::uint64_t base = static_cast<std::uint64_t>(partition.cell_count());
  for (int k = 0; k <= horizon && fits; ++k) {
    if (base != 0 && count > std::numeric_limits<std::uint64_t>::max() / base) {
      fits = false;
    } else {
      count *= base;
    }
  }
  if (fits) t.cell_count = count;
  return t;
}

}  // namespace entrobound
