#include "nlflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nlflow {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::grid_mismatch: return "grid_mismatch";
    case ErrorCode::no_boundary: return "no_boundary";
    case ErrorCode::slab_margin: return "slab_margin";
    case ErrorCode::not_certified: return "not_certified";
    case ErrorCode::too_large: return "too_large";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::check_failed: return "check_failed";
  }
  return "unknown";
}

TorusGrid::TorusGrid(int d, int n_cols, int n_levels, double R)
    : d_(d), n_cols_(n_cols), n_levels_(n_levels), R_(R) {
  require(d == 2 || d == 3, "grid: dimension must be 2 or 3");
  require(n_cols >= 2, "grid: n_cols must be >= 2");
  require(n_levels >= 2, "grid: n_levels must be >= 2");
  require(std::isfinite(R) && R > 0.0, "grid: R must be positive and finite");
}

namespace {
int wrap_index(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}
int reduce_offset(int o, int n) {
  o = wrap_index(o, n);
  return 2 * o > n ? o - n : o;
}
}  // namespace

int TorusGrid::column_index(std::array<int, 2> c) const {
  int i = wrap_index(c[0], n_cols_);
  if (d_ == 2) return i;
  return i + n_cols_ * wrap_index(c[1], n_cols_);
}

int TorusGrid::shift_column(int col, std::array<int, 2> shift) const {
  auto c = column_coords(col);
  return column_index({c[0] + shift[0], c[1] + shift[1]});
}

std::array<int, 2> TorusGrid::column_offset(int a, int b) const {
  auto ca = column_coords(a);
  auto cb = column_coords(b);
  return {reduce_offset(cb[0] - ca[0], n_cols_),
          d_ == 2 ? 0 : reduce_offset(cb[1] - ca[1], n_cols_)};
}

double TorusGrid::column_distance(int a, int b) const {
  auto o = column_offset(a, b);
  double x = o[0] * dx(), y = o[1] * dx();
  return std::sqrt(x * x + y * y);
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b) {
  if (!(a == b)) fail(ErrorCode::grid_mismatch, "grids differ");
}

double periodic_norm(std::span<const double> xi, NormConvention convention) {
  require(!xi.empty(), "periodic_norm: empty offset");
  double vertical = xi.back();
  double horiz2 = 0.0;
  for (std::size_t i = 0; i + 1 < xi.size(); ++i) {
    double w = wrap_unit(xi[i]);
    horiz2 += w * w;
  }
  double horiz = convention == NormConvention::geodesic ? horiz2 : std::sqrt(horiz2);
  return std::sqrt(vertical * vertical + horiz);
}

HeightField::HeightField(TorusGrid grid, std::vector<double> values, double L)
    : grid_(grid), values_(std::move(values)), L_(L) {
  require(static_cast<int>(values_.size()) == grid_.n_columns(),
          "height field: one value per column required");
  require(std::isfinite(L) && L >= 0.0, "height field: L must be finite and >= 0");
  for (double v : values_) {
    require(std::isfinite(v) && v >= -grid_.R() && v <= grid_.R(),
            "height field: value outside [-R, R]");
  }
  double lip = lipschitz_constant(grid_, values_);
  require(lip <= L * (1.0 + 1e-9) + 1e-12,
          "height field: values violate the declared Lipschitz bound");
}

SlabSet::SlabSet(TorusGrid grid, std::vector<std::uint8_t> occupancy)
    : grid_(grid), occ_(std::move(occupancy)) {
  require(occ_.size() == grid_.n_cells(), "slab set: occupancy size mismatch");
  counts_.resize(grid_.n_columns());
  const int n = grid_.n_levels();
  for (int c = 0; c < grid_.n_columns(); ++c) {
    int k = 0;
    while (k < n && occ_[grid_.cell(c, k)]) ++k;
    counts_[c] = k;
    for (int j = k; j < n; ++j) {
      require(!occ_[grid_.cell(c, j)], "slab set: occupancy is not vertically monotone");
    }
  }
}

SlabSet SlabSet::from_counts(TorusGrid grid, std::vector<int> counts) {
  require(static_cast<int>(counts.size()) == grid.n_columns(),
          "slab set: one count per column required");
  std::vector<std::uint8_t> occ(grid.n_cells(), 0);
  for (int c = 0; c < grid.n_columns(); ++c) {
    require(counts[c] >= 0 && counts[c] <= grid.n_levels(), "slab set: count out of range");
    for (int k = 0; k < counts[c]; ++k) occ[grid.cell(c, k)] = 1;
  }
  return SlabSet(grid, std::move(occ));
}

SlabSet SlabSet::halfspace(const TorusGrid& grid, int count) {
  return from_counts(grid, std::vector<int>(grid.n_columns(), count));
}

std::size_t SlabSet::cell_count() const {
  std::size_t total = 0;
  for (int c : counts_) total += c;
  return total;
}

int SlabSet::min_count() const { return *std::min_element(counts_.begin(), counts_.end()); }
int SlabSet::max_count() const { return *std::max_element(counts_.begin(), counts_.end()); }

CellSet CellSet::complement() const {
  CellSet c{grid, occupancy, !below_filled, !above_filled};
  for (auto& v : c.occupancy) v = v ? 0 : 1;
  return c;
}

SlabSet build_slab_set(const HeightField& f) {
  const auto& g = f.grid();
  std::vector<std::uint8_t> occ(g.n_cells(), 0);
  for (int c = 0; c < g.n_columns(); ++c) {
    double v = f[c];
    require(v >= -g.R() && v <= g.R(), "build_slab_set: height outside the slab");
    for (int k = 0; k < g.n_levels(); ++k) {
      if (g.level_center(k) <= v) occ[g.cell(c, k)] = 1;
    }
  }
  return SlabSet(g, std::move(occ));
}

HeightField height_of(const SlabSet& s) {
  const auto& g = s.grid();
  std::vector<double> v(g.n_columns());
  for (int c = 0; c < g.n_columns(); ++c) v[c] = g.level_top(s.count(c));
  double lip = lipschitz_constant(g, v);
  return HeightField(g, std::move(v), lip);
}

double symmetric_difference_volume(const SlabSet& a, const SlabSet& b) {
  require_same_grid(a.grid(), b.grid());
  std::size_t diff = 0;
  for (int c = 0; c < a.grid().n_columns(); ++c) {
    diff += static_cast<std::size_t>(std::abs(a.count(c) - b.count(c)));
  }
  return static_cast<double>(diff) * a.grid().cell_volume();
}

double oscillation(const HeightField& f) {
  auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
  return *hi - *lo;
}

HeightField vertical_scale(const HeightField& f, double eps) {
  require(eps > 0.0 && eps < 1.0, "vertical_scale: eps must lie in (0, 1)");
  std::vector<double> v = f.values();
  for (double& x : v) x *= (1.0 - eps);
  return HeightField(f.grid(), std::move(v), (1.0 - eps) * f.L());
}

double lipschitz_constant(const TorusGrid& grid, std::span<const double> values,
                          LipschitzMode mode) {
  const int nc = grid.n_columns();
  require(static_cast<int>(values.size()) == nc, "lipschitz_constant: size mismatch");
  if (mode == LipschitzMode::automatic) {
    mode = (grid.d() == 2 || grid.n_cols() <= 64) ? LipschitzMode::all_pairs
                                                   : LipschitzMode::ring;
  }
  double best = 0.0;
  if (mode == LipschitzMode::all_pairs) {
    for (int a = 0; a < nc; ++a) {
      for (int b = a + 1; b < nc; ++b) {
        double slope = std::abs(values[a] - values[b]) / grid.column_distance(a, b);
        best = std::max(best, slope);
      }
    }
    return best;
  }
  // Ring neighbourhood: all shifts with |shift| <= n/8 in each direction.
  const int r = std::max(2, grid.n_cols() / 8);
  for (int a = 0; a < nc; ++a) {
    for (int i = -r; i <= r; ++i) {
      for (int j = (grid.d() == 2 ? 0 : -r); j <= (grid.d() == 2 ? 0 : r); ++j) {
        if (i == 0 && j == 0) continue;
        int b = grid.shift_column(a, {i, j});
        if (b == a) continue;
        best = std::max(best, std::abs(values[a] - values[b]) / grid.column_distance(a, b));
      }
    }
  }
  return best;
}

SlabSet translate_set(const SlabSet& s, const CellOffset& shift) {
  const auto& g = s.grid();
  std::vector<int> counts(g.n_columns());
  for (int c = 0; c < g.n_columns(); ++c) {
    int target = g.shift_column(c, shift.col);
    int k = s.count(c) + shift.level;
    if (k < 0 || k > g.n_levels()) {
      fail(ErrorCode::invalid_argument, "translate_set: vertical shift leaves the slab");
    }
    counts[target] = k;
  }
  return SlabSet::from_counts(g, std::move(counts));
}

SlabSet translate_set(const SlabSet& s, std::span<const double> tau) {
  const auto& g = s.grid();
  require(static_cast<int>(tau.size()) == g.d(), "translate_set: tau must have d components");
  auto whole = [](double x, double step) {
    double q = x / step;
    double r = std::nearbyint(q);
    require(std::abs(q - r) < 1e-9, "translate_set: shift is not grid aligned");
    return static_cast<int>(r);
  };
  CellOffset o;
  for (int i = 0; i + 1 < g.d(); ++i) o.col[i] = whole(tau[i], g.dx());
  o.level = whole(tau.back(), g.dz());
  return translate_set(s, o);
}

SlabSet set_union(const SlabSet& a, const SlabSet& b) {
  require_same_grid(a.grid(), b.grid());
  std::vector<int> c(a.counts());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::max(c[i], b.counts()[i]);
  return SlabSet::from_counts(a.grid(), std::move(c));
}

SlabSet set_intersection(const SlabSet& a, const SlabSet& b) {
  require_same_grid(a.grid(), b.grid());
  std::vector<int> c(a.counts());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::min(c[i], b.counts()[i]);
  return SlabSet::from_counts(a.grid(), std::move(c));
}

bool is_subset(const SlabSet& a, const SlabSet& b) {
  require_same_grid(a.grid(), b.grid());
  for (std::size_t i = 0; i < a.counts().size(); ++i) {
    if (a.counts()[i] > b.counts()[i]) return false;
  }
  return true;
}

}  // namespace nlflow
