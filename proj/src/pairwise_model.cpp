#include "nlflow/pairwise_model.hpp"

#include <algorithm>
#include <cmath>

namespace nlflow {

namespace {

// D_h(j) = sum_{i >= j} C_h(i), C_h(i) = sum_{m >= i} w(h, m), j in [-n+1, n+1].
template <class T>
void build_prefix(const ModelTables<T>& t, int n_shifts, int n, std::vector<T>& d,
                  std::vector<T>& pa, std::vector<T>& pb, std::vector<T>& pg) {
  const int span = 2 * n + 1;
  d.assign(static_cast<std::size_t>(n_shifts) * span, T{});
  for (int h = 0; h < n_shifts; ++h) {
    const T* w = &t.w[static_cast<std::size_t>(h) * (2 * n - 1)];
    T* dh = &d[static_cast<std::size_t>(h) * span];
    // index j + n - 1; D(n + 1) = D(n) = 0.
    T c = T{};
    T acc = T{};
    for (int j = n - 1; j >= -n + 1; --j) {
      c += w[j + n - 1];
      acc += c;
      dh[j + n - 1] = acc;
    }
  }
  pa.assign(n + 1, T{});
  pb.assign(n + 1, T{});
  pg.assign(n + 1, T{});
  for (int k = 0; k < n; ++k) {
    pa[k + 1] = pa[k] + t.a[k];
    pg[k + 1] = pg[k] + t.g[k];
  }
  for (int k = n - 1; k >= 0; --k) pb[k] = pb[k + 1] + t.b[k];
}

template <class T>
T dval(const std::vector<T>& d, int n, int h, int j) {
  if (j >= n) return T{};
  return d[static_cast<std::size_t>(h) * (2 * n + 1) + (j + n - 1)];
}

template <class T>
T block(const std::vector<T>& d, int n, int h, int k0, int k1, int j0, int j1) {
  if (k0 >= k1 || j0 >= j1) return T{};
  return (dval(d, n, h, j0 - k1 + 1) - dval(d, n, h, j0 - k0 + 1)) -
         (dval(d, n, h, j1 - k1 + 1) - dval(d, n, h, j1 - k0 + 1));
}

std::vector<ModelTerm> collect_terms(const auto& w, int n_shifts, int n) {
  std::vector<ModelTerm> out;
  for (int h = 0; h < n_shifts; ++h) {
    for (int m = -(n - 1); m <= n - 1; ++m) {
      if (w[static_cast<std::size_t>(h) * (2 * n - 1) + (m + n - 1)] != 0) out.push_back({h, m});
    }
  }
  return out;
}

std::vector<int> active_shifts(const std::vector<ModelTerm>& terms) {
  std::vector<int> hs;
  for (const auto& t : terms) {
    if (hs.empty() || hs.back() != t.h) hs.push_back(t.h);
  }
  return hs;
}

// Fixed-order reduction: per-column partial sums, then a serial sum.
template <class T>
T evaluate_tables(const TorusGrid& g, const std::vector<T>& d, const std::vector<T>& pa,
                  const std::vector<T>& pb, const std::vector<T>& pg,
                  const std::vector<int>& shifts, std::span<const int> counts) {
  const int nc = g.n_columns(), n = g.n_levels();
  require(static_cast<int>(counts.size()) == nc, "evaluate: count vector size mismatch",
          ErrorCode::grid_mismatch);
  std::vector<T> part(nc, T{});
  const int ns = static_cast<int>(shifts.size());
#pragma omp parallel for schedule(static)
  for (int a = 0; a < nc; ++a) {
    const int ca = counts[a];
    T acc = pa[ca] + pb[ca];
    for (int i = 0; i < ns; ++i) {
      const int h = shifts[i];
      const int b = g.d() == 2 ? (a + h) % nc : g.shift_column(a, g.column_coords(h));
      acc += block(d, n, h, 0, ca, counts[b], n);
    }
    part[a] = acc;
  }
  T total = T{};
  int top = 0;
  for (int a = 0; a < nc; ++a) {
    total += part[a];
    top = std::max(top, counts[a]);
  }
  return total + pg[top];
}

}  // namespace

PairwiseModel::PairwiseModel(TorusGrid grid) : grid_(grid) {
  const int n = grid_.n_levels();
  t_.w.assign(static_cast<std::size_t>(n_shifts()) * (2 * n - 1), 0.0);
  t_.a.assign(n, 0.0);
  t_.b.assign(n, 0.0);
  t_.g.assign(n, 0.0);
}

int PairwiseModel::shift_index(std::array<int, 2> offset) const {
  return grid_.column_index(offset);
}

std::array<int, 2> PairwiseModel::shift_of(int h) const { return grid_.column_coords(h); }

std::array<int, 2> QuantizedModel::shift_of(int h) const { return grid_->column_coords(h); }

void PairwiseModel::add(const PairwiseModel& other) {
  require_same_grid(grid_, other.grid_);
  for (std::size_t i = 0; i < t_.w.size(); ++i) t_.w[i] += other.t_.w[i];
  for (int k = 0; k < n_levels(); ++k) {
    t_.a[k] += other.t_.a[k];
    t_.b[k] += other.t_.b[k];
    t_.g[k] += other.t_.g[k];
  }
  constant += other.constant;
  dirty_ = true;
}

void PairwiseModel::finalize() {
  for (double v : t_.w) require(v >= 0.0 && std::isfinite(v), "model: weights must be finite and >= 0");
  for (double v : t_.g) require(v >= 0.0 && std::isfinite(v), "model: level term must be non-decreasing");
  build_prefix(t_, n_shifts(), n_levels(), d_, pa_, pb_, pg_);
  terms_ = collect_terms(t_.w, n_shifts(), n_levels());
  dirty_ = false;
}

const std::vector<ModelTerm>& PairwiseModel::terms() const {
  require(!dirty_, "model: finalize() not called");
  return terms_;
}

bool PairwiseModel::has_level_term() const {
  return std::any_of(t_.g.begin(), t_.g.end(), [](double v) { return v != 0.0; });
}

double PairwiseModel::block_sum(int h, int k0, int k1, int j0, int j1) const {
  require(!dirty_, "model: finalize() not called");
  return block(d_, n_levels(), h, k0, k1, j0, j1);
}

double PairwiseModel::evaluate_counts(std::span<const int> counts) const {
  require(!dirty_, "model: finalize() not called");
  return constant + evaluate_tables(grid_, d_, pa_, pb_, pg_, active_shifts(terms_), counts);
}

double PairwiseModel::evaluate(const SlabSet& s) const {
  require_same_grid(grid_, s.grid());
  return evaluate_counts(s.counts());
}

double PairwiseModel::halfspace_value(int count) const {
  std::vector<int> c(grid_.n_columns(), count);
  return evaluate_counts(c);
}

double PairwiseModel::column_weight(int m) const {
  double s = 0.0;
  for (int h = 0; h < n_shifts(); ++h) s += w(h, m);
  return s;
}

QuantizedModel PairwiseModel::quantize(double quantum) const {
  require(!dirty_, "model: finalize() not called");
  require(quantum > 0.0, "quantize: quantum must be positive");
  QuantizedModel q;
  q.grid_ = std::make_shared<const TorusGrid>(grid_);
  q.n_ = n_levels();
  q.quantum_ = quantum;
  q.constant_ = constant;
  auto r = [quantum](double v) { return static_cast<std::int64_t>(std::llround(v / quantum)); };
  for (double v : t_.w) q.t_.w.push_back(r(v));
  for (int k = 0; k < n_levels(); ++k) {
    q.t_.a.push_back(r(t_.a[k]));
    q.t_.b.push_back(r(t_.b[k]));
    q.t_.g.push_back(r(t_.g[k]));
  }
  build_prefix(q.t_, n_shifts(), n_levels(), q.d_, q.pa_, q.pb_, q.pg_);
  q.terms_ = collect_terms(q.t_.w, n_shifts(), n_levels());
  return q;
}

std::int64_t QuantizedModel::block_sum(int h, int k0, int k1, int j0, int j1) const {
  return block(d_, n_, h, k0, k1, j0, j1);
}

std::int64_t QuantizedModel::evaluate_counts(std::span<const int> counts) const {
  return evaluate_tables(*grid_, d_, pa_, pb_, pg_, active_shifts(terms_), counts);
}

namespace {

// Average w(o) and w(-o) so that both round identically.
void symmetrize(PairwiseModel& m) {
  const auto& g = m.grid();
  const int n = g.n_levels();
  for (int h = 0; h < m.n_shifts(); ++h) {
    auto s = m.shift_of(h);
    int hn = m.shift_index({-s[0], -s[1]});
    for (int k = -(n - 1); k <= n - 1; ++k) {
      if (hn < h || (hn == h && -k < k)) continue;
      double v = 0.5 * (m.w(h, k) + m.w(hn, -k));
      m.set_w(h, k, v);
      m.set_w(hn, -k, v);
    }
  }
}

CellOffset offset_of(const PairwiseModel& m, int h, int k) {
  const auto& g = m.grid();
  auto s = m.shift_of(h);
  auto red = [&](int v) {
    int n = g.n_cols();
    v %= n;
    if (v < 0) v += n;
    return 2 * v > n ? v - n : v;
  };
  return {{red(s[0]), g.d() == 2 ? 0 : red(s[1])}, k};
}

}  // namespace

PairwiseModel kernel_perimeter_model(const PairwiseWeights& pw) {
  PairwiseModel m(pw.grid);
  const auto& g = pw.grid;
  const int n = g.n_levels();
  auto& a = m.a();
  auto& b = m.b();
  for (std::size_t i = 0; i < pw.offsets.size(); ++i) {
    const auto& o = pw.offsets[i];
    const double w = pw.w[i];
    const int k = o.level;
    if (std::abs(k) <= n - 1) m.add_w(m.shift_index(o.col), k, w);
    if (k <= 0) continue;
    // Partner above the slab (empty) for an occupied cell.
    for (int l = std::max(0, n - k); l < n; ++l) a[l] += w;
    // Partner below the slab (occupied) for an empty cell.
    for (int l = 0; l < std::min(n, k); ++l) b[l] += w;
    // Both partners outside the slab.
    if (k > n) m.constant += g.n_columns() * static_cast<double>(k - n) * w;
  }
  m.constant += pw.tail_correction;
  symmetrize(m);
  m.finalize();
  return m;
}

PairwiseModel sharp_fractional_model(const TorusGrid& g, double s, const WeightOptions& opt) {
  require(s > 0.0 && s < 1.0, "sharp fractional: s must lie in (0,1)");
  PairwiseModel m(g);
  const int n = g.n_levels(), d = g.d();
  auto value = [s](int dd, const Point& xi) { return periodized_fractional_kernel(dd, s, xi); };
  std::vector<std::pair<int, int>> jobs;
  for (int h = 0; h < m.n_shifts(); ++h) {
    for (int k = 0; k <= n - 1; ++k) {
      if (h == 0 && k == 0) continue;
      jobs.push_back({h, k});
    }
  }
  std::vector<double> vals(jobs.size());
  const long nj = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < nj; ++i) {
    vals[i] = cell_pair_weight(value, nullptr, g, offset_of(m, jobs[i].first, jobs[i].second), opt);
  }
  for (long i = 0; i < nj; ++i) {
    auto [h, k] = jobs[i];
    auto sh = m.shift_of(h);
    int hn = m.shift_index({-sh[0], -sh[1]});
    if (k == 0) {
      m.add_w(h, 0, 0.5 * vals[i]);
      m.add_w(hn, 0, 0.5 * vals[i]);
    } else {
      m.set_w(h, k, vals[i]);
      m.set_w(hn, -k, vals[i]);
    }
  }
  // Interaction of each cell with the regions above and below the slab,
  // using int_{R^{d-1}} |(u, t)|^{-d-s} du = c |t|^{-1-s}.
  const double c = fractional_column_constant(d, s) * g.column_area() / (s * (1.0 - s));
  const double R = g.R();
  for (int k = 0; k < n; ++k) {
    double lo = g.level_top(k), hi = g.level_top(k + 1);
    m.a()[k] = c * (std::pow(R - lo, 1.0 - s) - std::pow(std::max(0.0, R - hi), 1.0 - s));
    m.b()[k] = c * (std::pow(hi + R, 1.0 - s) - std::pow(std::max(0.0, lo + R), 1.0 - s));
  }
  m.finalize();
  m.constant = -m.halfspace_value(n / 2);
  return m;
}

SlabInteraction slab_interaction_model(const TorusGrid& g, const RadialKernel& k,
                                       const WeightOptions& opt) {
  PairwiseModel m(g);
  const int n = g.n_levels(), d = g.d();
  std::vector<std::pair<int, int>> jobs;
  for (int h = 0; h < m.n_shifts(); ++h) {
    for (int l = 0; l <= n - 1; ++l) jobs.push_back({h, l});
  }
  std::vector<double> vals(jobs.size());
  const long nj = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < nj; ++i) {
    vals[i] = radial_cell_pair_weight(k, g, offset_of(m, jobs[i].first, jobs[i].second), opt);
  }
  for (long i = 0; i < nj; ++i) {
    auto [h, l] = jobs[i];
    auto sh = m.shift_of(h);
    int hn = m.shift_index({-sh[0], -sh[1]});
    if (l == 0) {
      m.add_w(h, 0, 0.5 * vals[i]);
      m.add_w(hn, 0, 0.5 * vals[i]);
    } else {
      m.set_w(h, l, vals[i]);
      m.set_w(hn, -l, vals[i]);
    }
  }
  // Interaction of each level with the region below the slab:
  // J(B, cell_k) = |cell'| int_{k dz}^{(k+1) dz} Psi(tau) dtau, Psi(tau) = int_tau^inf kbar.
  const double dz = g.dz();
  auto kbar = [&](double t) { return k.column_average(d, t); };
  std::vector<double> psi(n + 1);
  psi[n] = k.column_tail(d, n * dz);
  for (int l = n - 1; l >= 1; --l) psi[l] = psi[l + 1] + integrate(kbar, l * dz, (l + 1) * dz, 1e-11);
  SlabInteraction si{m, std::vector<double>(n)};
  for (int l = 0; l < n; ++l) {
    const double t0 = l * dz;
    auto f = [&](double t) { return t > t0 ? (t - t0) * kbar(t) : 0.0; };
    // kbar may blow up at 0.
    double inner = l == 0 ? integrate_from_zero(f, dz, 1e-11) : integrate(f, t0, t0 + dz, 1e-11);
    si.below[l] = g.column_area() * (inner + dz * psi[l + 1]);
  }
  std::vector<double> wc(2 * n - 1);
  for (int l = -(n - 1); l <= n - 1; ++l) wc[l + n - 1] = si.model.column_weight(l);
  auto W = [&](int l) { return wc[l + n - 1]; };
  auto& a = si.model.a();
  auto& gg = si.model.g();
  const double ncol = g.n_columns();
  for (int l = 0; l < n; ++l) {
    double row = 0.0;
    for (int j = -l; j <= n - 1 - l; ++j) row += W(j);
    a[l] = -row - 2.0 * si.below[l];
    double inc = W(0) + 2.0 * si.below[l];
    for (int j = 0; j < l; ++j) inc += 2.0 * W(l - j);
    gg[l] = ncol * inc;
  }
  si.model.finalize();
  return si;
}

double slab_interaction_value(const SlabInteraction& si, std::span<const int> counts) {
  const auto& m = si.model;
  const auto& g = m.grid();
  const int nc = g.n_columns();
  require(static_cast<int>(counts.size()) == nc, "slab_interaction_value: size mismatch",
          ErrorCode::grid_mismatch);
  const int top = *std::max_element(counts.begin(), counts.end());
  std::vector<double> pbelow(g.n_levels() + 1, 0.0);
  for (int l = 0; l < g.n_levels(); ++l) pbelow[l + 1] = pbelow[l] + si.below[l];
  std::vector<double> part(nc, 0.0);
  const int ns = m.n_shifts();
#pragma omp parallel for schedule(static)
  for (int a = 0; a < nc; ++a) {
    const int ca = counts[a];
    double acc = 2.0 * (pbelow[top] - pbelow[ca]);
    for (int h = 0; h < ns; ++h) {
      const int b = g.shift_column(a, m.shift_of(h));
      const int cb = counts[b];
      acc += 2.0 * m.block_sum(h, 0, ca, cb, top) + m.block_sum(h, ca, top, cb, top);
    }
    part[a] = acc;
  }
  double total = 0.0;
  for (double v : part) total += v;
  return total;
}

PairwiseModel face_area_model(const TorusGrid& g) {
  PairwiseModel m(g);
  const int n = g.n_levels();
  const double side = g.d() == 2 ? g.dz() : g.dx() * g.dz();
  for (int dir = 0; dir + 1 < g.d(); ++dir) {
    std::array<int, 2> e{0, 0};
    e[dir] = 1;
    m.add_w(m.shift_index(e), 0, side);
    m.add_w(m.shift_index({-e[0], -e[1]}), 0, side);
  }
  m.add_w(0, 1, g.column_area());
  m.add_w(0, -1, g.column_area());
  m.a()[n - 1] += g.column_area();
  m.b()[0] += g.column_area();
  m.finalize();
  return m;
}

namespace serial {

double evaluate(const PairwiseModel& m, const SlabSet& s) {
  const auto& g = m.grid();
  require_same_grid(g, s.grid());
  const int nc = g.n_columns(), n = g.n_levels();
  double total = m.constant;
  int top = 0;
  for (int a = 0; a < nc; ++a) {
    top = std::max(top, s.count(a));
    for (int k = 0; k < n; ++k) total += s.occupied(a, k) ? m.a()[k] : m.b()[k];
  }
  for (int a = 0; a < nc; ++a) {
    for (int k = 0; k < s.count(a); ++k) {
      for (int b = 0; b < nc; ++b) {
        const int h = m.shift_index(g.column_offset(a, b));
        for (int l = s.count(b); l < n; ++l) total += m.w(h, l - k);
      }
    }
  }
  for (int l = 0; l < top; ++l) total += m.g()[l];
  return total;
}

double slab_interaction_value(const SlabInteraction& si, std::span<const int> counts) {
  const auto& m = si.model;
  const auto& g = m.grid();
  const int nc = g.n_columns();
  const int top = *std::max_element(counts.begin(), counts.end());
  double jbu = 0.0, jeu = 0.0, juu = 0.0;
  for (int a = 0; a < nc; ++a) {
    for (int k = counts[a]; k < top; ++k) jbu += si.below[k];
  }
  for (int a = 0; a < nc; ++a) {
    for (int b = 0; b < nc; ++b) {
      const int h = m.shift_index(g.column_offset(a, b));
      for (int l = counts[b]; l < top; ++l) {
        for (int k = 0; k < counts[a]; ++k) jeu += m.w(h, l - k);
        for (int k = counts[a]; k < top; ++k) juu += m.w(h, l - k);
      }
    }
  }
  return 2.0 * jbu + 2.0 * jeu + juu;
}

}  // namespace serial

}  // namespace nlflow
