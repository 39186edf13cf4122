#include "nlflow/perimeters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nlflow/distance.hpp"
#include "nlflow/initial.hpp"
#include "nlflow/quadrature.hpp"

namespace nlflow {

PerimeterKind parse_perimeter_kind(const std::string& s) {
  if (s == "kernel") return PerimeterKind::kernel;
  if (s == "sharp_fractional") return PerimeterKind::sharp_fractional;
  if (s == "riesz") return PerimeterKind::riesz;
  if (s == "zero_fractional") return PerimeterKind::zero_fractional;
  if (s == "minkowski") return PerimeterKind::minkowski;
  if (s == "euclidean") return PerimeterKind::euclidean;
  fail(ErrorCode::config, "unknown perimeter kind '" + s + "'");
}

const char* perimeter_kind_name(PerimeterKind k) {
  switch (k) {
    case PerimeterKind::kernel: return "kernel";
    case PerimeterKind::sharp_fractional: return "sharp_fractional";
    case PerimeterKind::riesz: return "riesz";
    case PerimeterKind::zero_fractional: return "zero_fractional";
    case PerimeterKind::minkowski: return "minkowski";
    case PerimeterKind::euclidean: return "euclidean";
  }
  return "?";
}

void validate_perimeter_params(const PerimeterParams& p, const TorusGrid& g) {
  switch (p.kind) {
    case PerimeterKind::kernel:
      // A loaded table replaces the kernel entirely.
      if (p.kernel_table.empty()) validate_kernel_spec(p.kernel, g);
      break;
    case PerimeterKind::sharp_fractional:
      require(p.s > 0.0 && p.s < 1.0, "s must lie in (0,1)", ErrorCode::config);
      break;
    case PerimeterKind::riesz:
      require(p.alpha > 0.0 && p.alpha < g.d() - 1.0, "alpha must lie in (0, d-1)", ErrorCode::config);
      break;
    case PerimeterKind::minkowski:
      require(p.rho >= std::max(g.dx(), g.dz()), "rho must be >= max(dx, dz)", ErrorCode::config);
      break;
    case PerimeterKind::zero_fractional:
    case PerimeterKind::euclidean:
      break;
  }
  require(p.quad.q >= 1 && p.quad.rel_tol > 0.0, "quadrature options out of range", ErrorCode::config);
}

namespace {

// int_lo^hi t kbar(t) dt, refining dyadically toward 0 where kbar blows up.
double first_moment(const RadialKernel& k, int d, double lo, double hi) {
  auto f = [&](double t) { return t > 0.0 ? t * k.column_average(d, t) : 0.0; };
  return lo > 0.0 ? integrate(f, lo, hi, 1e-11) : integrate_from_zero(f, hi, 1e-11);
}

PairwiseWeights kernel_weights(const PerimeterParams& p, const TorusGrid& g) {
  if (!p.kernel_table.empty()) return read_weight_table(p.kernel_table, g);
  if (!p.weight_cache.empty()) {
    auto sig = kernel_signature(p.kernel, g, p.quad);
    if (auto w = load_weights(p.weight_cache, g, sig)) return *w;
    auto w = precompute_kernel_weights(p.kernel, g, p.quad);
    save_weights(w, p.weight_cache);
    return w;
  }
  return precompute_kernel_weights(p.kernel, g, p.quad);
}

}  // namespace

struct PerimeterFunctional::Impl {
  TorusGrid grid;
  PerimeterParams params;
  std::optional<PairwiseWeights> weights;
  std::optional<PairwiseModel> model;        // solver form
  std::optional<PairwiseModel> short_part;   // 0-fractional, short range
  std::optional<SlabInteraction> slab;       // riesz, 0-fractional long range
  std::optional<MinkowskiStencil> stencil;
  double scale = 1.0;
  double tol = 0.0;

  double eval(const SlabSet& s) const {
    require_same_grid(grid, s.grid());
    switch (params.kind) {
      case PerimeterKind::kernel:
      case PerimeterKind::sharp_fractional:
        return model->evaluate(s);
      case PerimeterKind::riesz:
        return slab_interaction_value(*slab, s.counts());
      case PerimeterKind::zero_fractional: {
        double v = 0.0;
        if (short_part) v += short_part->evaluate(s);
        if (slab) v += slab_interaction_value(*slab, s.counts());
        return v;
      }
      case PerimeterKind::minkowski:
        return static_cast<double>(minkowski_fat_cells(grid, *stencil, s.counts())) *
               grid.cell_volume() / (2.0 * params.rho);
      case PerimeterKind::euclidean:
        return eval_euclidean(height_of(s));
    }
    return 0.0;
  }
};

PerimeterFunctional::PerimeterFunctional(const TorusGrid& g, const PerimeterParams& p) {
  validate_perimeter_params(p, g);
  auto im = std::make_shared<Impl>(Impl{g, p, {}, {}, {}, {}, {}, 1.0, 0.0});
  const int d = g.d();
  switch (p.kind) {
    case PerimeterKind::kernel:
      im->weights = kernel_weights(p, g);
      im->model = kernel_perimeter_model(*im->weights);
      break;
    case PerimeterKind::sharp_fractional:
      im->model = sharp_fractional_model(g, p.s, p.quad);
      break;
    case PerimeterKind::riesz:
      im->slab = slab_interaction_model(g, RadialKernel{d - p.alpha, 0.0, -1.0}, p.quad);
      im->model = im->slab->model;
      break;
    case PerimeterKind::zero_fractional: {
      PairwiseModel total(g);
      if (p.zero_parts != ZeroParts::long_range) {
        RadialKernel k{static_cast<double>(d), 0.0, 1.0};
        KernelDef def;
        def.value = [k](int dd, const Point& xi) { return k(dd, xi); };
        def.rough = [k](int dd, const Point& lo, const Point& hi) { return k.rough_in_box(dd, lo, hi); };
        def.flat_interaction = [k, d] { return first_moment(k, d, 0.0, 1.0); };
        const double diag = std::sqrt((d - 1) * g.dx() * g.dx() + g.dz() * g.dz());
        def.radial = k;
        def.r_cut = p.zero_r_cut > 0.0 ? p.zero_r_cut : 1.0 + diag;
        auto w = precompute_weights(def, g, p.quad);
        im->short_part = kernel_perimeter_model(w);
        total.add(*im->short_part);
      }
      if (p.zero_parts != ZeroParts::short_range) {
        im->slab = slab_interaction_model(g, RadialKernel{static_cast<double>(d), 1.0, -1.0}, p.quad);
        total.add(im->slab->model);
      }
      total.finalize();
      im->model = std::move(total);
      break;
    }
    case PerimeterKind::minkowski:
      im->stencil = minkowski_stencil(g, p.rho);
      break;
    case PerimeterKind::euclidean:
      im->model = face_area_model(g);
      break;
  }
  auto h = SlabSet::halfspace(g, g.n_levels() / 2);
  im->scale = std::max(1.0, std::abs(im->eval(h)));
  switch (p.kind) {
    case PerimeterKind::kernel:
    case PerimeterKind::riesz:
    case PerimeterKind::zero_fractional:
      im->tol = p.quad.rel_tol * im->scale;
      break;
    case PerimeterKind::sharp_fractional:
      im->tol = 1e-4 * im->scale;
      break;
    case PerimeterKind::minkowski:
    case PerimeterKind::euclidean:
      im->tol = 1e-12 * im->scale;
      break;
  }
  impl_ = std::move(im);
}

PerimeterKind PerimeterFunctional::kind() const { return impl_->params.kind; }
const PerimeterParams& PerimeterFunctional::params() const { return impl_->params; }
const TorusGrid& PerimeterFunctional::grid() const { return impl_->grid; }
SolverCapability PerimeterFunctional::capability() const {
  return impl_->model ? SolverCapability::pairwise : SolverCapability::generic_submodular;
}
double PerimeterFunctional::evaluate(const SlabSet& s) const { return impl_->eval(s); }
double PerimeterFunctional::solver_energy(const SlabSet& s) const {
  return impl_->model ? impl_->model->evaluate(s) : impl_->eval(s);
}
const PairwiseModel* PerimeterFunctional::model() const {
  return impl_->model ? &*impl_->model : nullptr;
}
const PairwiseWeights* PerimeterFunctional::weights() const {
  return impl_->weights ? &*impl_->weights : nullptr;
}
const MinkowskiStencil* PerimeterFunctional::stencil() const {
  return impl_->stencil ? &*impl_->stencil : nullptr;
}
double PerimeterFunctional::scale() const { return impl_->scale; }
double PerimeterFunctional::tolerance() const { return impl_->tol; }

double gradient_norm_sq(const HeightField& f, int col) {
  const auto& g = f.grid();
  double q = 0.0;
  for (int dir = 0; dir + 1 < g.d(); ++dir) {
    std::array<int, 2> e1{0, 0}, e2{0, 0};
    e1[dir] = 1;
    e2[dir] = 2;
    auto at = [&](std::array<int, 2> sh, int sign) { return f[g.shift_column(col, {sign * sh[0], sign * sh[1]})]; };
    double gr = (8.0 * (at(e1, 1) - at(e1, -1)) - (at(e2, 1) - at(e2, -1))) / (12.0 * g.dx());
    q += gr * gr;
  }
  return q;
}

double eval_euclidean(const HeightField& f) {
  const auto& g = f.grid();
  double sum = 0.0;
  for (int c = 0; c < g.n_columns(); ++c) sum += std::sqrt(1.0 + gradient_norm_sq(f, c));
  return sum * g.column_area();
}

double eval_minkowski(const SlabSet& s, double rho) {
  const auto& g = s.grid();
  require(rho >= std::max(g.dx(), g.dz()), "minkowski: rho below grid resolution");
  return fat_volume_extended(s, rho) / (2.0 * rho);
}

MinkowskiStencil minkowski_stencil(const TorusGrid& g, double rho) {
  require(rho > 0.0, "minkowski: rho must be positive");
  MinkowskiStencil st;
  const int n = g.n_cols();
  const int span = std::min(n / 2, static_cast<int>(std::ceil(rho / g.dx() + 0.5)));
  const int span2 = g.d() == 3 ? span : 0;
  for (int j = -span2; j <= span2; ++j) {
    for (int i = -span; i <= span; ++i) {
      // Skip duplicates of the same column offset on small tori.
      int ri = ((i % n) + n) % n, rj = ((j % n) + n) % n;
      if (2 * ri > n) ri -= n;
      if (2 * rj > n) rj -= n;
      if (ri != i || (g.d() == 3 && rj != j)) continue;
      double gx = std::max(0.0, (std::abs(i) - 0.5) * g.dx());
      double gy = g.d() == 3 ? std::max(0.0, (std::abs(j) - 0.5) * g.dx()) : 0.0;
      double gap = std::hypot(gx, gy);
      if (gap > rho) continue;
      int r = 0;
      while (std::hypot(gap, (r + 0.5) * g.dz()) <= rho) ++r;
      st.shift.push_back({i, j});
      st.reach.push_back(r);
    }
  }
  return st;
}

long long minkowski_fat_cells(const TorusGrid& g, const MinkowskiStencil& st,
                              std::span<const int> counts) {
  const int nc = g.n_columns();
  long long total = 0;
  for (int a = 0; a < nc; ++a) {
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    for (std::size_t i = 0; i < st.shift.size(); ++i) {
      int cb = counts[g.shift_column(a, st.shift[i])];
      lo = std::min(lo, cb - st.reach[i]);
      hi = std::max(hi, cb - 1 + st.reach[i]);
    }
    total += hi - lo + 1;
  }
  return total;
}

SlabSet random_subgraph(const TorusGrid& g, std::uint64_t seed, double L) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double amp = 0.45 * g.R() * u(rng);
  const double center = 0.25 * g.R() * (2.0 * u(rng) - 1.0);
  auto f = random_lipschitz_field(g, amp, L * (0.2 + 0.8 * u(rng)), rng(), center);
  return build_slab_set(f);
}

SubmodularityReport check_submodularity(const PerimeterFunctional& P, int n_pairs,
                                        std::uint64_t seed, Evaluator ev) {
  require(n_pairs >= 1, "check_submodularity: n_pairs must be >= 1");
  auto val = [&](const SlabSet& s) { return ev == Evaluator::primary ? P.evaluate(s) : P.solver_energy(s); };
  SubmodularityReport rep;
  rep.pairs = n_pairs;
  rep.scale = P.scale();
  std::mt19937_64 rng(seed);
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_pairs; ++i) {
    auto e = random_subgraph(P.grid(), rng());
    auto f = random_subgraph(P.grid(), rng());
    double pe = val(e), pf = val(f);
    double pu = val(set_union(e, f)), pi = val(set_intersection(e, f));
    rep.max_violation = std::max(rep.max_violation, pu + pi - pe - pf);
    rep.scale = std::max({rep.scale, std::abs(pe), std::abs(pf)});
  }
  return rep;
}

TranslationReport check_translation_invariance(const PerimeterFunctional& P, const SlabSet& s,
                                               const std::vector<CellOffset>& shifts) {
  TranslationReport rep;
  const double base = P.evaluate(s);
  const double denom = std::max(std::abs(base), P.scale());
  for (const auto& o : shifts) {
    auto t = translate_set(s, o);
    if (o.level != 0) {
      require(t.min_count() > 0 && t.max_count() < P.grid().n_levels(),
              "translation: shift moves the boundary to the slab edge", ErrorCode::invalid_argument);
    }
    rep.max_rel_deviation = std::max(rep.max_rel_deviation, std::abs(P.evaluate(t) - base) / denom);
    ++rep.shifts;
  }
  return rep;
}

HalfspaceReport check_halfspace_minimality(const PerimeterFunctional& P, int n_competitors,
                                           std::uint64_t seed, double L) {
  HalfspaceReport rep;
  const auto& g = P.grid();
  auto h = SlabSet::halfspace(g, g.n_levels() / 2);
  rep.halfspace_value = P.evaluate(h);
  rep.min_competitor = std::numeric_limits<double>::infinity();
  rep.worst_margin = -std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_competitors; ++i) {
    auto f = random_subgraph(g, rng(), L);
    double v = P.evaluate(f);
    rep.min_competitor = std::min(rep.min_competitor, v);
    rep.worst_margin = std::max(rep.worst_margin, rep.halfspace_value - v);
    ++rep.competitors;
  }
  return rep;
}

}  // namespace nlflow
