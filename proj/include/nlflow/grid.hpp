#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nlflow/error.hpp"

namespace nlflow {

// Discretization of T^{d-1} x (-R, R). The torus cell has side 1; each
// horizontal direction is split into n_cols cells and the vertical
// interval into n_levels cells. Cells are stored column-major:
// index = column * n_levels + level, level 0 at the bottom.
class TorusGrid {
 public:
  TorusGrid(int d, int n_cols, int n_levels, double R);

  int d() const { return d_; }
  int n_cols() const { return n_cols_; }
  int n_levels() const { return n_levels_; }
  double R() const { return R_; }

  int n_columns() const { return d_ == 2 ? n_cols_ : n_cols_ * n_cols_; }
  std::size_t n_cells() const {
    return static_cast<std::size_t>(n_columns()) * n_levels_;
  }
  double dx() const { return 1.0 / n_cols_; }
  double dz() const { return 2.0 * R_ / n_levels_; }
  double column_area() const { return d_ == 2 ? dx() : dx() * dx(); }
  double cell_volume() const { return column_area() * dz(); }

  double level_center(int k) const { return -R_ + (k + 0.5) * dz(); }
  // Height of the top face of a column holding `count` occupied cells.
  double level_top(int count) const { return -R_ + count * dz(); }

  std::size_t cell(int col, int level) const {
    return static_cast<std::size_t>(col) * n_levels_ + level;
  }
  std::array<int, 2> column_coords(int col) const {
    return {col % n_cols_, d_ == 2 ? 0 : col / n_cols_};
  }
  int column_index(std::array<int, 2> c) const;
  // Column reached from `col` by a (periodically wrapped) horizontal shift.
  int shift_column(int col, std::array<int, 2> shift) const;
  // Horizontal shift b - a reduced to (-n/2, n/2] per direction.
  std::array<int, 2> column_offset(int a, int b) const;
  // Geodesic distance between column centers on the unit torus.
  double column_distance(int a, int b) const;

  bool operator==(const TorusGrid& o) const {
    return d_ == o.d_ && n_cols_ == o.n_cols_ && n_levels_ == o.n_levels_ &&
           R_ == o.R_;
  }

 private:
  int d_;
  int n_cols_;
  int n_levels_;
  double R_;
};

void require_same_grid(const TorusGrid& a, const TorusGrid& b);

// Offset between two cells in whole cells: horizontal (per torus direction)
// and vertical.
struct CellOffset {
  std::array<int, 2> col{0, 0};
  int level = 0;
};

// Reduce a horizontal coordinate to its representative in [-1/2, 1/2].
inline double wrap_unit(double x) { return x - std::nearbyint(x); }

enum class NormConvention {
  geodesic,  // (|xi_d|^2 + min_z |xi' + z|^2)^{1/2}
  printed,   // (|xi_d|^2 + min_z |xi' + z|)^{1/2}, kept for comparison only
};

// Periodic norm on T^{d-1} x R; xi holds d components, the last vertical.
double periodic_norm(std::span<const double> xi,
                     NormConvention convention = NormConvention::geodesic);

// Graph function of a periodic Lipschitz subgraph, one value per column.
class HeightField {
 public:
  // Throws unless every value lies in [-R, R] and the periodic Lipschitz
  // condition holds with constant L (up to round-off).
  HeightField(TorusGrid grid, std::vector<double> values, double L);

  const TorusGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](int col) const { return values_[col]; }
  double L() const { return L_; }

 private:
  TorusGrid grid_;
  std::vector<double> values_;
  double L_;
};

// Cell-wise subgraph: occupancy that is monotone in every column. Cells
// below the slab are implicitly occupied and cells above it empty.
class SlabSet {
 public:
  SlabSet(TorusGrid grid, std::vector<std::uint8_t> occupancy);
  static SlabSet from_counts(TorusGrid grid, std::vector<int> counts);
  static SlabSet halfspace(const TorusGrid& grid, int count);

  const TorusGrid& grid() const { return grid_; }
  const std::vector<std::uint8_t>& occupancy() const { return occ_; }
  bool occupied(int col, int level) const { return occ_[grid_.cell(col, level)]; }
  // Number of occupied cells of each column.
  const std::vector<int>& counts() const { return counts_; }
  int count(int col) const { return counts_[col]; }
  std::size_t cell_count() const;
  int min_count() const;
  int max_count() const;

  bool operator==(const SlabSet& o) const {
    return grid_ == o.grid_ && counts_ == o.counts_;
  }

 private:
  TorusGrid grid_;
  std::vector<std::uint8_t> occ_;
  std::vector<int> counts_;
};

// Arbitrary cell occupancy with prescribed states below and above the slab.
// Used where non-monotone sets appear (complements).
struct CellSet {
  TorusGrid grid;
  std::vector<std::uint8_t> occupancy;
  bool below_filled = true;
  bool above_filled = false;

  static CellSet of(const SlabSet& s) { return {s.grid(), s.occupancy(), true, false}; }
  CellSet complement() const;
};

// One real number per slab cell.
struct ScalarField {
  TorusGrid grid;
  std::vector<double> values;
};

SlabSet build_slab_set(const HeightField& f);
HeightField height_of(const SlabSet& s);

double symmetric_difference_volume(const SlabSet& a, const SlabSet& b);
double oscillation(const HeightField& f);
HeightField vertical_scale(const HeightField& f, double eps);

enum class LipschitzMode { automatic, all_pairs, ring };
double lipschitz_constant(const TorusGrid& grid, std::span<const double> values,
                          LipschitzMode mode = LipschitzMode::automatic);
inline double lipschitz_constant(const HeightField& f,
                                 LipschitzMode mode = LipschitzMode::automatic) {
  return lipschitz_constant(f.grid(), f.values(), mode);
}

SlabSet translate_set(const SlabSet& s, const CellOffset& shift);
// tau holds d lengths; each component must be a whole number of cells.
SlabSet translate_set(const SlabSet& s, std::span<const double> tau);

// Subgraph union and intersection: pointwise max / min of column counts.
SlabSet set_union(const SlabSet& a, const SlabSet& b);
SlabSet set_intersection(const SlabSet& a, const SlabSet& b);
bool is_subset(const SlabSet& a, const SlabSet& b);

}  // namespace nlflow
