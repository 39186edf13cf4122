#include "nlflow/step_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "nlflow/distance.hpp"
#include "nlflow/maxflow.hpp"

namespace nlflow {

namespace {

std::int64_t quantize(double v, double q) { return static_cast<std::int64_t>(std::llround(v / q)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void finish(const StepProblem& prob, StepResult& r) {
  r.energy = prob.energy(r.minimal);
  r.dissipation = prob.dissipation(r.minimal);
}

}  // namespace

std::int64_t StepProblem::energy_int(std::span<const int> counts) const {
  const int n = grid().n_levels();
  std::int64_t u = 0;
  for (int c = 0; c < grid().n_columns(); ++c) u += unary_prefix[static_cast<std::size_t>(c) * (n + 1) + counts[c]];
  if (qmodel) return qmodel->evaluate_counts(counts) + u;
  return minkowski_fat_cells(grid(), *P.stencil(), counts) * minkowski_unit + u;
}

double StepProblem::to_energy(std::int64_t v) const {
  return (qmodel ? qmodel->constant() : 0.0) + quantum * static_cast<double>(v);
}

double StepProblem::energy(const SlabSet& F) const {
  require_same_grid(grid(), F.grid());
  double u = 0.0;
  const auto& occ = F.occupancy();
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (occ[i]) u += unary[i];
  return P.solver_energy(F) + u;
}

double StepProblem::dissipation(const SlabSet& F) const {
  require_same_grid(grid(), F.grid());
  double s = 0.0;
  const auto& a = E.occupancy();
  const auto& b = F.occupancy();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) s += std::abs(unary[i]);
  return s;
}

std::int64_t StepProblem::dissipation_int(const SlabSet& F) const {
  require_same_grid(grid(), F.grid());
  std::int64_t s = 0;
  const auto& a = E.occupancy();
  const auto& b = F.occupancy();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) s += std::abs(unary_q[i]);
  return s;
}

StepProblem assemble_step_energy(const SlabSet& E, double h, const PerimeterFunctional& P,
                                 const StepOptions& opt) {
  require(h > 0.0 && std::isfinite(h), "step: h must be positive");
  require_same_grid(E.grid(), P.grid());
  const TorusGrid& g = E.grid();
  StepProblem prob{E, h, P, {}, 0.0, {}, {}, {}, 0};
  ScalarField sd = signed_distance(E);
  const double scale = g.cell_volume() / h;
  prob.unary.resize(sd.values.size());
  for (std::size_t i = 0; i < sd.values.size(); ++i) prob.unary[i] = scale * sd.values[i];

  prob.quantum = opt.quantum > 0.0 ? opt.quantum : 1e-12 * P.scale();
  prob.unary_q.resize(prob.unary.size());
  for (std::size_t i = 0; i < prob.unary.size(); ++i) prob.unary_q[i] = quantize(prob.unary[i], prob.quantum);
  const int n = g.n_levels();
  prob.unary_prefix.assign(static_cast<std::size_t>(g.n_columns()) * (n + 1), 0);
  for (int c = 0; c < g.n_columns(); ++c) {
    std::int64_t* p = &prob.unary_prefix[static_cast<std::size_t>(c) * (n + 1)];
    for (int k = 0; k < n; ++k) p[k + 1] = p[k] + prob.unary_q[g.cell(c, k)];
  }
  if (const PairwiseModel* m = P.model()) {
    prob.qmodel = m->quantize(prob.quantum);
  } else {
    require(P.stencil() != nullptr, "step: functional has no solver form");
    prob.minkowski_unit = quantize(g.cell_volume() / (2.0 * P.params().rho), prob.quantum);
  }
  return prob;
}

double dissipation_value(const SlabSet& E, const SlabSet& F, double h) {
  require_same_grid(E.grid(), F.grid());
  require(h > 0.0, "dissipation: h must be positive");
  ScalarField sd = signed_distance(E);
  const auto& a = E.occupancy();
  const auto& b = F.occupancy();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) s += std::abs(sd.values[i]);
  return s * E.grid().cell_volume() / h;
}

// ---------------------------------------------------------------------------
// Min-cut

namespace {

struct CutOutcome {
  std::vector<int> minimal, maximal;
  std::int64_t energy = 0;
  StepStats stats;
};

// Cut network over levels [lo, hi); cells below lo are held occupied and
// cells from hi up held empty. A cell on the source side is occupied.
CutOutcome cut_on_band(const StepProblem& prob, int lo, int hi) {
  const QuantizedModel& q = *prob.qmodel;
  const TorusGrid& g = prob.grid();
  const int nc = g.n_columns(), n = g.n_levels(), B = hi - lo;
  const auto node = [&](int col, int k) { return col * B + (k - lo); };

  // Pair terms with a fixed partner depend only on the level.
  std::vector<std::int64_t> a_add(B, 0), b_add(B, 0);
  for (int h = 0; h < q.n_shifts(); ++h) {
    for (int k = lo; k < hi; ++k) {
      a_add[k - lo] += q.block_sum(h, k, k + 1, hi, n);
      b_add[k - lo] += q.block_sum(h, 0, lo, k, k + 1);
    }
  }
  std::vector<int> aux(B, -1);
  int n_nodes = nc * B;
  for (int k = lo; k < hi; ++k)
    if (q.g()[k] > 0) aux[k - lo] = n_nodes++;

  FlowNetwork net(n_nodes);
  std::int64_t finite = 0, source_caps = 0;
  for (int c = 0; c < nc; ++c) {
    for (int k = lo; k < hi; ++k) {
      std::int64_t A = q.a()[k] + prob.unary_q[g.cell(c, k)] + a_add[k - lo];
      std::int64_t Bv = q.b()[k] + b_add[k - lo];
      std::int64_t delta = A - Bv;
      if (delta > 0) net.add_sink(node(c, k), delta);
      if (delta < 0) {
        net.add_source(node(c, k), -delta);
        source_caps += -delta;
      }
      finite += std::abs(delta);
    }
  }
  // Each unordered cell pair gets one edge carrying both directions.
  std::vector<int> reverse_shift(q.n_shifts());
  for (int h = 0; h < q.n_shifts(); ++h) {
    auto s = q.shift_of(h);
    reverse_shift[h] = g.column_index({-s[0], -s[1]});
  }
  for (const auto& t : q.terms()) {
    const int hr = reverse_shift[t.h];
    const bool self_paired = hr == t.h && t.m == 0;
    if (!self_paired && std::make_pair(t.h, t.m) > std::make_pair(hr, -t.m)) continue;
    const std::int64_t fwd = q.w(t.h, t.m), bwd = q.w(hr, -t.m);
    const auto s = q.shift_of(t.h);
    for (int c = 0; c < nc; ++c) {
      const int b = g.shift_column(c, s);
      if (self_paired && b <= c) continue;
      for (int k = std::max(lo, lo - t.m); k < std::min(hi, hi - t.m); ++k) {
        net.add_edge(node(c, k), node(b, k + t.m), fwd, bwd);
        finite += fwd + bwd;
      }
    }
  }
  for (int k = lo; k < hi; ++k)
    if (aux[k - lo] >= 0) {
      net.add_sink(aux[k - lo], q.g()[k]);
      finite += q.g()[k];
    }
  require(finite < std::numeric_limits<std::int64_t>::max() / 4, "step: capacities overflow",
          ErrorCode::check_failed);
  const std::int64_t inf = finite + 1;
  for (int c = 0; c < nc; ++c) {
    for (int k = lo + 1; k < hi; ++k) net.add_edge(node(c, k), node(c, k - 1), inf);
    for (int k = lo; k < hi; ++k)
      if (aux[k - lo] >= 0) net.add_edge(node(c, k), aux[k - lo], inf);
  }

  const std::int64_t flow = net.solve();
  require(flow < inf, "step: infinite cut", ErrorCode::check_failed);
  CutOutcome out;
  auto counts_of = [&](const std::vector<std::uint8_t>& side) {
    std::vector<int> counts(nc, lo);
    for (int c = 0; c < nc; ++c) {
      int k = lo;
      while (k < hi && side[node(c, k)]) ++k;
      for (int j = k; j < hi; ++j)
        require(!side[node(c, j)], "step: non-monotone cut", ErrorCode::check_failed);
      counts[c] = k;
    }
    return counts;
  };
  out.minimal = counts_of(net.source_side());
  out.maximal = counts_of(net.not_sink_side());

  // The all-lo configuration has cut value source_caps; this fixes the
  // constant between cut values and energies.
  std::vector<int> floor_counts(nc, lo);
  const std::int64_t offset = prob.energy_int(floor_counts) - source_caps;
  out.energy = flow + offset;
  require(prob.energy_int(out.minimal) == out.energy && prob.energy_int(out.maximal) == out.energy,
          "step: cut value does not match the recomputed energy", ErrorCode::check_failed);

  out.stats.nodes = n_nodes;
  out.stats.arcs = net.n_arcs();
  out.stats.augmentations = net.augmentations();
  out.stats.phases = net.phases();
  out.stats.band_lo = lo;
  out.stats.band_hi = hi;
  return out;
}

}  // namespace

StepResult solve_step_mincut(const StepProblem& prob, const StepOptions& opt) {
  require(prob.qmodel.has_value(), "step: min-cut needs a pairwise functional");
  const auto t0 = std::chrono::steady_clock::now();
  const TorusGrid& g = prob.grid();
  const int n = g.n_levels();
  int lo = 0, hi = n;
  if (opt.band) {
    lo = std::max(0, prob.E.min_count() - 1);
    hi = std::min(n, prob.E.max_count() + 1);
  }
  CutOutcome cut = cut_on_band(prob, lo, hi);
  const int bottom = *std::min_element(cut.minimal.begin(), cut.minimal.end());
  const int top = *std::max_element(cut.maximal.begin(), cut.maximal.end());
  if ((lo > 0 && bottom == lo) || (hi < n && top == hi)) {
    StepStats first = cut.stats;
    cut = cut_on_band(prob, 0, n);
    cut.stats.full_slab_fallback = true;
    cut.stats.augmentations += first.augmentations;
  }
  StepResult r{SlabSet::from_counts(g, cut.minimal), SlabSet::from_counts(g, cut.maximal), 0.0,
               cut.energy, 0.0, cut.stats};
  finish(prob, r);
  r.stats.wall_seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration

StepResult solve_step_exhaustive(const StepProblem& prob) {
  const auto t0 = std::chrono::steady_clock::now();
  const TorusGrid& g = prob.grid();
  const int nc = g.n_columns(), n = g.n_levels();
  double configs = std::pow(static_cast<double>(n + 1), nc);
  require(configs <= 1e7, "exhaustive: more than 1e7 configurations", ErrorCode::too_large);

  std::vector<int> c(nc, 0);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<int> lo(nc, n), hi(nc, 0);
  long long visited = 0;
  while (true) {
    std::int64_t e = prob.energy_int(c);
    ++visited;
    if (e < best) {
      best = e;
      lo = c;
      hi = c;
    } else if (e == best) {
      for (int i = 0; i < nc; ++i) {
        lo[i] = std::min(lo[i], c[i]);
        hi[i] = std::max(hi[i], c[i]);
      }
    }
    int i = 0;
    while (i < nc && c[i] == n) c[i++] = 0;
    if (i == nc) break;
    ++c[i];
  }
  require(prob.energy_int(lo) == best && prob.energy_int(hi) == best,
          "exhaustive: meet/join of minimizers is not a minimizer", ErrorCode::check_failed);
  StepResult r{SlabSet::from_counts(g, lo), SlabSet::from_counts(g, hi), 0.0, best, 0.0, {}};
  r.stats.iterations = static_cast<int>(visited);
  finish(prob, r);
  r.stats.wall_seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------
// Lovasz extension, projected subgradient

namespace {

// Fat-cell count maintained under single-cell updates of the counts.
class FatCounter {
 public:
  FatCounter(const TorusGrid& g, const MinkowskiStencil& st) : g_(g), st_(st) {
    const int nc = g.n_columns();
    nbr_.resize(static_cast<std::size_t>(nc) * st.shift.size());
    for (int a = 0; a < nc; ++a)
      for (std::size_t i = 0; i < st.shift.size(); ++i) nbr_[a * st.shift.size() + i] = g.shift_column(a, st.shift[i]);
    // Columns whose stencil contains b: b - shift.
    back_.resize(nbr_.size());
    for (int b = 0; b < nc; ++b)
      for (std::size_t i = 0; i < st.shift.size(); ++i)
        back_[b * st.shift.size() + i] = g.shift_column(b, {-st.shift[i][0], -st.shift[i][1]});
  }

  void reset(const std::vector<int>& counts) {
    c_ = counts;
    span_.assign(c_.size(), 0);
    total_ = 0;
    for (int a = 0; a < static_cast<int>(c_.size()); ++a) {
      span_[a] = column_span(a);
      total_ += span_[a];
    }
  }

  void increment(int b) {
    ++c_[b];
    const std::size_t S = st_.shift.size();
    for (std::size_t i = 0; i < S; ++i) {
      int a = back_[b * S + i];
      long long v = column_span(a);
      total_ += v - span_[a];
      span_[a] = v;
    }
  }

  long long total() const { return total_; }

 private:
  long long column_span(int a) const {
    const std::size_t S = st_.shift.size();
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    for (std::size_t i = 0; i < S; ++i) {
      int cb = c_[nbr_[a * S + i]];
      lo = std::min(lo, cb - st_.reach[i]);
      hi = std::max(hi, cb - 1 + st_.reach[i]);
    }
    return hi - lo + 1;
  }

  const TorusGrid& g_;
  const MinkowskiStencil& st_;
  std::vector<int> nbr_, back_;
  std::vector<int> c_;
  std::vector<long long> span_;
  long long total_ = 0;
};

// Euclidean projection onto sequences that are non-increasing and in [0, 1].
void project_column(double* x, int n) {
  std::vector<double> val;
  std::vector<int> len;
  for (int k = 0; k < n; ++k) {
    val.push_back(x[k]);
    len.push_back(1);
    while (val.size() > 1 && val[val.size() - 2] < val.back()) {
      double v = (val[val.size() - 2] * len[len.size() - 2] + val.back() * len.back()) /
                 (len[len.size() - 2] + len.back());
      len[len.size() - 2] += len.back();
      val[val.size() - 2] = v;
      val.pop_back();
      len.pop_back();
    }
  }
  int k = 0;
  for (std::size_t b = 0; b < val.size(); ++b)
    for (int j = 0; j < len[b]; ++j) x[k++] = std::clamp(val[b], 0.0, 1.0);
}

}  // namespace

StepResult solve_step_lovasz(const StepProblem& prob, const StepOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const TorusGrid& g = prob.grid();
  const int nc = g.n_columns(), n = g.n_levels();
  const std::size_t N = g.n_cells();
  const double gap_tol = opt.lovasz_gap > 0.0 ? opt.lovasz_gap : 1e-6 * prob.P.scale();
  const std::int64_t tol = static_cast<std::int64_t>(std::floor(gap_tol / prob.quantum));

  std::unique_ptr<FatCounter> fat;
  if (!prob.qmodel) fat = std::make_unique<FatCounter>(g, *prob.P.stencil());
  std::vector<int> zero(nc, 0);
  const std::int64_t f0 = prob.energy_int(zero);

  std::vector<double> x(N);
  for (std::size_t i = 0; i < N; ++i) x[i] = prob.E.occupancy()[i];
  std::vector<double> grad(N), avg(N, 0.0);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);

  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<int> best_lo, best_hi;
  double lower = -std::numeric_limits<double>::infinity();
  std::vector<int> c(nc);
  int it = 0;

  // Lower bound f0 + min over subgraphs of y(F): one prefix minimum per column.
  auto bound = [&](const std::vector<double>& y) {
    double s = static_cast<double>(f0);
    for (int col = 0; col < nc; ++col) {
      double acc = 0.0, mn = 0.0;
      for (int k = 0; k < n; ++k) {
        acc += y[g.cell(col, k)];
        mn = std::min(mn, acc);
      }
      s += mn;
    }
    return s;
  };
  auto consider = [&](const std::vector<int>& counts, std::int64_t e) {
    if (e < best) {
      best = e;
      best_lo = counts;
      best_hi = counts;
      return;
    }
    if (e != best) return;
    std::vector<int> lo(nc), hi(nc);
    for (int i = 0; i < nc; ++i) {
      lo[i] = std::min(best_lo[i], counts[i]);
      hi[i] = std::max(best_hi[i], counts[i]);
    }
    if (prob.energy_int(lo) == best) best_lo = lo;
    if (prob.energy_int(hi) == best) best_hi = hi;
  };

  for (it = 1; it <= opt.lovasz_max_iter; ++it) {
    // Greedy chain: decreasing x, lower levels first on ties, so every
    // prefix is a subgraph.
    std::sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) {
      if (x[p] != x[q]) return x[p] > x[q];
      int kp = static_cast<int>(p % n), kq = static_cast<int>(q % n);
      if (kp != kq) return kp < kq;
      return p < q;
    });
    std::fill(c.begin(), c.end(), 0);
    if (fat) fat->reset(c);
    std::int64_t prev = f0, u = 0;
    double fx = static_cast<double>(f0);
    consider(c, f0);
    for (std::size_t idx : order) {
      const int col = static_cast<int>(idx / n);
      ++c[col];
      u += prob.unary_q[idx];
      std::int64_t e;
      if (fat) {
        fat->increment(col);
        e = fat->total() * prob.minkowski_unit + u;
      } else {
        e = prob.energy_int(c);
      }
      grad[idx] = static_cast<double>(e - prev);
      fx += grad[idx] * x[idx];
      prev = e;
      if (e <= best) consider(c, e);
    }
    for (std::size_t i = 0; i < N; ++i) avg[i] += (grad[i] - avg[i]) / it;
    lower = std::max({lower, bound(grad), bound(avg)});
    if (static_cast<double>(best) - lower <= static_cast<double>(tol)) break;

    double gn = 0.0;
    for (double v : grad) gn += v * v;
    if (gn == 0.0) break;
    const double step = (fx - lower) / gn;
    for (std::size_t i = 0; i < N; ++i) x[i] -= step * grad[i];
    for (int col = 0; col < nc; ++col) project_column(&x[g.cell(col, 0)], n);
  }

  StepResult r{SlabSet::from_counts(g, best_lo), SlabSet::from_counts(g, best_hi), 0.0, best, 0.0, {}};
  r.stats.iterations = std::min(it, opt.lovasz_max_iter);
  r.stats.gap = std::max(0.0, static_cast<double>(best) - lower) * prob.quantum;
  r.stats.certified = static_cast<double>(best) - lower <= static_cast<double>(tol);
  finish(prob, r);
  r.stats.wall_seconds = seconds_since(t0);
  return r;
}

StepResult solve_step(const StepProblem& prob, const StepOptions& opt) {
  if (prob.qmodel) return solve_step_mincut(prob, opt);
  return solve_step_lovasz(prob, opt);
}

}  // namespace nlflow
