#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "entrobound/common.hpp"

namespace entrobound {

/// Compact hyperrectangle [lows_1,highs_1] x ... x [lows_n,highs_n].
struct Box {
  std::vector<double> lows;
  std::vector<double> highs;

  Box() = default;
  Box(std::vector<double> lo, std::vector<double> hi);

  int dim() const { return static_cast<int>(lows.size()); }
  double side(int j) const { return highs[j] - lows[j]; }
  double volume() const;
  double max_side() const;
  bool contains(std::span<const double> x) const;
};

/// Uniform tensor-product grid over a box. Cells are half-open
/// [lo, hi) per dimension, closed on the top face of the box, and
/// indexed in row-major order (last dimension fastest).
struct GridPartition {
  Box box;
  std::vector<int> counts;

  int dim() const { return box.dim(); }
  int cell_count() const { return total_cells_; }
  double cell_side(int j) const { return box.side(j) / counts[j]; }
  double cell_volume() const;  // all cells equal for a uniform grid
  double max_side() const;     // delta-bar over cells and dimensions

  Box cell_box(int cell) const;
  std::vector<double> cell_center(int cell) const;
  void decode(int cell, std::span<int> idx) const;
  int encode(std::span<const int> idx) const;

  /// Index of the cell containing x. Throws GuardError for points
  /// outside the box (componentwise inclusive membership).
  int cell_of(std::span<const double> x) const;

  int total_cells_ = 0;  // set by build_uniform_grid
};

GridPartition build_uniform_grid(const Box& box, const std::vector<int>& counts);

/// Size and measure bookkeeping of the induced trajectory-space partition
/// for horizon K. |S| = |X|^(K+1) is carried in log form; the integer value
/// is present only when it fits a 64-bit count.
struct TrajectorySpace {
  double log_cell_count;                   // log |S| (natural)
  std::optional<std::uint64_t> cell_count; // |S| when representable
  double log_volume;                       // log lambda(S) (natural)
  double max_side;                         // delta-bar
  int dim;                                 // n = (K+1) * n_x
};

TrajectorySpace trajectory_space_measures(const GridPartition& partition, int horizon);

}  // namespace entrobound
