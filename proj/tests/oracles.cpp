#include "oracles.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

namespace {

struct Workspace {
  gsl_integration_workspace* w;
  Workspace() : w(gsl_integration_workspace_alloc(4000)) { gsl_set_error_handler_off(); }
  ~Workspace() { gsl_integration_workspace_free(w); }
};

double trampoline(double x, void* p) { return (*static_cast<const Fn1*>(p))(x); }

}  // namespace

double integrate(const Fn1& f, double a, double b, std::vector<double> breaks, double epsrel) {
  if (b <= a) return 0.0;
  // Nested calls need their own workspace.
  Workspace local;
  std::vector<double> pts{a};
  std::sort(breaks.begin(), breaks.end());
  for (double x : breaks)
    if (x > a && x < b && x > pts.back()) pts.push_back(x);
  pts.push_back(b);
  gsl_function F{&trampoline, const_cast<Fn1*>(&f)};
  double result = 0.0, err = 0.0;
  int status = gsl_integration_qagp(&F, pts.data(), pts.size(), 0.0, epsrel, 4000, local.w, &result, &err);
  if (status && status != GSL_EROUND) {
    // Accept the estimate when the error is still small in absolute terms.
    if (!(err <= 1e3 * epsrel * std::abs(result))) throw std::runtime_error(gsl_strerror(status));
  }
  return result;
}

double integrate_inf(const Fn1& f, double a, double epsrel) {
  Workspace local;
  gsl_function F{&trampoline, const_cast<Fn1*>(&f)};
  double result = 0.0, err = 0.0;
  int status = gsl_integration_qagiu(&F, a, 0.0, epsrel, 4000, local.w, &result, &err);
  if (status && status != GSL_EROUND && !(err <= 1e3 * epsrel * std::abs(result)))
    throw std::runtime_error(gsl_strerror(status));
  return result;
}

double cell_pair_2d(const Fn2& K, double dx, double dz, int o1, int o2, double circle, double epsrel) {
  const double c1 = o1 * dx, c2 = o2 * dz;
  auto inner = [&](double x1) {
    std::vector<double> br{c2, 0.0};
    const double w = x1 - std::nearbyint(x1);
    if (circle > 0.0 && std::abs(w) < circle) {
      double r = std::sqrt(circle * circle - w * w);
      br.push_back(r);
      br.push_back(-r);
    }
    Fn1 g = [&](double x2) { return K(x1, x2) * (dz - std::abs(x2 - c2)); };
    return (dx - std::abs(x1 - c1)) * integrate(g, c2 - dz, c2 + dz, br, epsrel);
  };
  // K is periodic in xi_1: the inner structure also changes where x1 wraps.
  std::vector<double> br{c1, 0.0, 0.5, -0.5, 1.0, -1.0};
  if (circle > 0.0)
    for (double c : {circle, -circle, 1.0 - circle, circle - 1.0}) br.push_back(c);
  return integrate(inner, c1 - dx, c1 + dx, br, epsrel);
}

double periodized_fractional_2d(double s, double x, double t) {
  const double p = 2.0 + s;
  constexpr int Z = 20;
  x -= std::nearbyint(x);
  double sum = 0.0;
  for (int z = -Z; z <= Z; ++z) sum += std::pow((x + z) * (x + z) + t * t, -0.5 * p);
  // sum_{z > Z} f(z +- x) = int_a^inf f + f'(a) / 24, a = Z + 1/2 +- x; the
  // integral by its binomial series in (t / u)^2.
  for (double a : {Z + 0.5 + x, Z + 0.5 - x}) {
    double integral = 0.0, coef = 1.0;
    for (int k = 0; k < 12; ++k) {
      integral += coef * std::pow(t, 2 * k) * std::pow(a, 1.0 - p - 2 * k) / (p + 2 * k - 1.0);
      coef *= (-0.5 * p - k) / (k + 1.0);
    }
    const double fp = -p * a * std::pow(a * a + t * t, -0.5 * p - 1.0);
    sum += integral + fp / 24.0;
  }
  return sum;
}

std::vector<double> signed_distance_brute(const nlflow::SlabSet& s) {
  const auto& g = s.grid();
  if (g.d() != 2) throw std::invalid_argument("signed_distance_brute: d = 2 only");
  const int nc = g.n_cols(), n = g.n_levels();
  const double dx = g.dx();
  auto occ = [&](int c, int k) { return k < 0 ? true : k >= n ? false : s.occupied(((c % nc) + nc) % nc, k); };
  struct Seg {
    double x0, z0, x1, z1;
  };
  std::vector<Seg> faces;
  for (int c = 0; c < nc; ++c) {
    for (int k = -1; k < n; ++k)
      if (occ(c, k) != occ(c, k + 1)) faces.push_back({c * dx, g.level_top(k + 1), (c + 1) * dx, g.level_top(k + 1)});
    for (int k = 0; k < n; ++k)
      if (occ(c, k) != occ(c + 1, k)) faces.push_back({(c + 1) * dx, g.level_top(k), (c + 1) * dx, g.level_top(k + 1)});
  }
  auto seg_dist = [](double px, double pz, const Seg& f) {
    double vx = f.x1 - f.x0, vz = f.z1 - f.z0;
    double t = ((px - f.x0) * vx + (pz - f.z0) * vz) / (vx * vx + vz * vz);
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - f.x0 - t * vx, pz - f.z0 - t * vz);
  };
  std::vector<double> out(g.n_cells());
  for (int c = 0; c < nc; ++c) {
    for (int k = 0; k < n; ++k) {
      double px = (c + 0.5) * dx, pz = g.level_center(k);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& f : faces)
        for (int z = -1; z <= 1; ++z) best = std::min(best, seg_dist(px + z, pz, f));
      out[g.cell(c, k)] = occ(c, k) ? -best : best;
    }
  }
  return out;
}

double lipschitz_all_pairs(const nlflow::TorusGrid& g, const std::vector<double>& v) {
  double L = 0.0;
  for (int i = 0; i < g.n_columns(); ++i) {
    auto ci = g.column_coords(i);
    for (int j = i + 1; j < g.n_columns(); ++j) {
      auto cj = g.column_coords(j);
      double d2 = 0.0;
      for (int a = 0; a + 1 < g.d(); ++a) {
        double u = (cj[a] - ci[a]) * g.dx();
        u -= std::nearbyint(u);
        d2 += u * u;
      }
      L = std::max(L, std::abs(v[i] - v[j]) / std::sqrt(d2));
    }
  }
  return L;
}

void for_each_counts(const nlflow::TorusGrid& g, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> c(g.n_columns(), 0);
  while (true) {
    f(c);
    int i = 0;
    while (i < g.n_columns() && c[i] == g.n_levels()) c[i++] = 0;
    if (i == g.n_columns()) return;
    ++c[i];
  }
}

Enumerated enumerate_step(const nlflow::StepProblem& prob, double tie_tol) {
  const auto& g = prob.grid();
  std::vector<std::pair<double, std::vector<int>>> all;
  for_each_counts(g, [&](const std::vector<int>& c) {
    auto F = nlflow::SlabSet::from_counts(g, c);
    double e = prob.P.solver_energy(F);
    for (int col = 0; col < g.n_columns(); ++col)
      for (int k = 0; k < c[col]; ++k) e += prob.unary[g.cell(col, k)];
    all.push_back({e, c});
  });
  Enumerated r;
  r.best = std::numeric_limits<double>::infinity();
  for (const auto& [e, c] : all) r.best = std::min(r.best, e);
  r.minimal.assign(g.n_columns(), g.n_levels());
  r.maximal.assign(g.n_columns(), 0);
  for (const auto& [e, c] : all) {
    if (e > r.best + tie_tol) continue;
    ++r.argmins;
    for (int i = 0; i < g.n_columns(); ++i) {
      r.minimal[i] = std::min(r.minimal[i], c[i]);
      r.maximal[i] = std::max(r.maximal[i], c[i]);
    }
  }
  return r;
}

}  // namespace oracle
