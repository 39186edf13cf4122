#include "nlflow/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo;
  double hi;
};

// Closed vertical intervals covered by occupied (state 1) and empty
// (state 0) cells of one column, including the implicit regions.
struct ColumnRuns {
  std::vector<Interval> runs[2];
};

std::vector<ColumnRuns> column_runs(const CellSet& s) {
  const auto& g = s.grid;
  const int n = g.n_levels();
  std::vector<ColumnRuns> out(g.n_columns());
  for (int c = 0; c < g.n_columns(); ++c) {
    auto state_at = [&](int k) -> int {
      if (k < 0) return s.below_filled ? 1 : 0;
      if (k >= n) return s.above_filled ? 1 : 0;
      return s.occupancy[g.cell(c, k)] ? 1 : 0;
    };
    int k = -1;
    while (k <= n) {
      int st = state_at(k);
      int j = k;
      while (j + 1 <= n && state_at(j + 1) == st) ++j;
      double lo = k < 0 ? -kInf : g.level_top(k);
      double hi = j >= n ? kInf : g.level_top(j + 1);
      out[c].runs[st].push_back({lo, hi});
      k = j + 1;
    }
  }
  return out;
}

double interval_distance(const std::vector<Interval>& runs, double z) {
  double best = kInf;
  for (const auto& r : runs) {
    double d = std::max({0.0, r.lo - z, z - r.hi});
    best = std::min(best, d);
  }
  return best;
}

struct HorizontalShift {
  std::array<int, 2> shift;
  double dist;  // center of a column to the nearest point of the shifted column
};

std::vector<HorizontalShift> sorted_shifts(const TorusGrid& g) {
  std::vector<HorizontalShift> out;
  const int n = g.n_cols();
  const int lo = -(n - 1) / 2, hi = n / 2;
  auto gap = [&](int o) { return std::max(0.0, (std::abs(o) - 0.5) * g.dx()); };
  for (int i = lo; i <= hi; ++i) {
    if (g.d() == 2) {
      out.push_back({{i, 0}, gap(i)});
      continue;
    }
    for (int j = lo; j <= hi; ++j) {
      double a = gap(i), b = gap(j);
      out.push_back({{i, j}, std::sqrt(a * a + b * b)});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.dist < b.dist; });
  return out;
}

void require_boundary(const CellSet& s) {
  require(s.occupancy.size() == s.grid.n_cells(), "signed_distance: occupancy size mismatch");
  bool any_in = false, any_out = false;
  for (auto v : s.occupancy) (v ? any_in : any_out) = true;
  if (!(any_in && any_out)) {
    fail(ErrorCode::no_boundary, "signed_distance: set has no boundary inside the slab");
  }
}

}  // namespace

ScalarField signed_distance(const CellSet& s) {
  require_boundary(s);
  const auto& g = s.grid;
  const auto runs = column_runs(s);
  const auto shifts = sorted_shifts(g);
  ScalarField out{g, std::vector<double>(g.n_cells())};
  const int nc = g.n_columns(), n = g.n_levels();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < nc; ++c) {
    for (int k = 0; k < n; ++k) {
      const int st = s.occupancy[g.cell(c, k)] ? 1 : 0;
      const double z = g.level_center(k);
      double best = kInf;
      for (const auto& sh : shifts) {
        if (sh.dist >= best) break;
        int b = g.shift_column(c, sh.shift);
        double dz = interval_distance(runs[b].runs[1 - st], z);
        best = std::min(best, std::hypot(sh.dist, dz));
      }
      out.values[g.cell(c, k)] = st ? -best : best;
    }
  }
  return out;
}

namespace serial {
ScalarField signed_distance(const CellSet& s) {
  require_boundary(s);
  const auto& g = s.grid;
  const auto runs = column_runs(s);
  ScalarField out{g, std::vector<double>(g.n_cells())};
  for (int c = 0; c < g.n_columns(); ++c) {
    for (int k = 0; k < g.n_levels(); ++k) {
      const int st = s.occupancy[g.cell(c, k)] ? 1 : 0;
      const double z = g.level_center(k);
      double best = kInf;
      for (int b = 0; b < g.n_columns(); ++b) {
        auto o = g.column_offset(c, b);
        double a0 = std::max(0.0, (std::abs(o[0]) - 0.5) * g.dx());
        double a1 = g.d() == 2 ? 0.0 : std::max(0.0, (std::abs(o[1]) - 0.5) * g.dx());
        if (b == c) a0 = a1 = 0.0;
        double dz = interval_distance(runs[b].runs[1 - st], z);
        best = std::min(best, std::sqrt(a0 * a0 + a1 * a1 + dz * dz));
      }
      out.values[g.cell(c, k)] = st ? -best : best;
    }
  }
  return out;
}
}  // namespace serial

std::size_t CellMask::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

CellMask fat_neighborhood(const SlabSet& s, double rho) {
  require(rho > 0.0, "fat_neighborhood: rho must be positive");
  auto sd = signed_distance(s);
  CellMask m{s.grid(), std::vector<std::uint8_t>(sd.values.size(), 0)};
  for (std::size_t i = 0; i < sd.values.size(); ++i) {
    m.mask[i] = std::abs(sd.values[i]) <= rho ? 1 : 0;
  }
  return m;
}

double fat_volume_extended(const SlabSet& s, double rho) {
  require(rho > 0.0, "fat_volume_extended: rho must be positive");
  const auto& g = s.grid();
  const CellSet cs = CellSet::of(s);
  const auto runs = column_runs(cs);
  const auto shifts = sorted_shifts(g);
  const int extra = static_cast<int>(std::ceil(rho / g.dz())) + 1;
  const int nc = g.n_columns(), n = g.n_levels();
  std::vector<std::size_t> per_column(nc, 0);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < nc; ++c) {
    std::size_t cnt = 0;
    for (int k = -extra; k < n + extra; ++k) {
      const int st = k < 0 ? 1 : (k >= n ? 0 : (s.occupied(c, k) ? 1 : 0));
      const double z = g.level_center(k);
      double best = kInf;
      for (const auto& sh : shifts) {
        if (sh.dist > rho || sh.dist >= best) break;
        int b = g.shift_column(c, sh.shift);
        double dz = interval_distance(runs[b].runs[1 - st], z);
        best = std::min(best, std::hypot(sh.dist, dz));
      }
      if (best <= rho) ++cnt;
    }
    per_column[c] = cnt;
  }
  std::size_t total = 0;
  for (auto v : per_column) total += v;
  return static_cast<double>(total) * g.cell_volume();
}

}  // namespace nlflow
