#include "nlflow/kernels.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace nlflow {

namespace {

constexpr double kPi = std::numbers::pi;

double norm_of(int d, const Point& xi, NormConvention conv) {
  return periodic_norm(std::span<const double>(xi.data(), d), conv);
}

// Range of |wrap(u)| over u in [lo, hi].
std::pair<double, double> wrapped_range(double lo, double hi) {
  if (hi - lo >= 1.0) return {0.0, 0.5};
  auto f = [](double u) { return std::abs(wrap_unit(u)); };
  double mn = std::min(f(lo), f(hi));
  double mx = std::max(f(lo), f(hi));
  if (std::floor(hi) >= lo) mn = 0.0;
  if (std::floor(hi - 0.5) >= lo - 0.5) mx = 0.5;
  return {mn, mx};
}

}  // namespace

std::pair<double, double> periodic_norm_range(int d, const Point& lo, const Point& hi) {
  double mn2 = 0.0, mx2 = 0.0;
  for (int i = 0; i + 1 < d; ++i) {
    auto [a, b] = wrapped_range(lo[i], hi[i]);
    mn2 += a * a;
    mx2 += b * b;
  }
  double zl = lo[d - 1], zh = hi[d - 1];
  double zmin = (zl <= 0.0 && zh >= 0.0) ? 0.0 : std::min(std::abs(zl), std::abs(zh));
  double zmax = std::max(std::abs(zl), std::abs(zh));
  return {std::sqrt(mn2 + zmin * zmin), std::sqrt(mx2 + zmax * zmax)};
}

namespace {

// Average over the unit torus cell of g(|u|^2); symmetric in each
// direction, so integrate over the positive quadrant. In d = 3 the quadrant
// is swept in polar coordinates: the arc of radius r inside [0, 1/2]^2 has
// angle pi/2 up to r = 1/2 and pi/2 - 2 acos(1 / 2r) beyond.
double torus_average(int d, const std::function<double(double)>& g_of_u2, double t) {
  auto split = [&](const std::function<double(double)>& f, double a, double b) {
    double m = std::clamp(t, a, b);
    return integrate(f, a, m, 1e-11) + integrate(f, m, b, 1e-11);
  };
  if (d == 2) {
    return 2.0 * split([&](double u) { return g_of_u2(u * u); }, 0.0, 0.5);
  }
  constexpr double half_pi = 0.5 * std::numbers::pi;
  double inner = split([&](double r) { return half_pi * r * g_of_u2(r * r); }, 0.0, 0.5);
  double corner = integrate_singular(
      [&](double r) { return (half_pi - 2.0 * std::acos(0.5 / r)) * r * g_of_u2(r * r); }, 0.5,
      std::sqrt(0.5), 1e-11);
  return 4.0 * (inner + corner);
}

// int_a^inf (u^2 + t^2)^{-p/2} du for a > 0.
double power_tail(double a, double t, double p) {
  t = std::abs(t);
  if (t == 0.0) return std::pow(a, 1.0 - p) / (p - 1.0);
  if (t < a / 3.0) {
    double sum = 0.0, coef = 1.0, x = (t * t) / (a * a);
    double xp = 1.0;
    for (int j = 0; j < 12; ++j) {
      sum += coef * xp / (p + 2.0 * j - 1.0);
      coef *= (-p / 2.0 - j) / (j + 1.0);
      xp *= x;
    }
    return std::pow(a, 1.0 - p) * sum;
  }
  double v = t * t / (a * a + t * t);
  double A = 0.5 * (p - 1.0);
  return std::pow(t, 1.0 - p) * 0.5 * boost::math::beta(A, 0.5) *
         boost::math::ibeta(A, 0.5, v);
}

}  // namespace

const char* kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::fractional_geodesic: return "fractional_geodesic";
    case KernelFamily::fractional_aniso: return "fractional_aniso";
    case KernelFamily::custom: return "custom";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(const std::string& s) {
  if (s == "fractional_geodesic") return KernelFamily::fractional_geodesic;
  if (s == "fractional_aniso") return KernelFamily::fractional_aniso;
  if (s == "custom") return KernelFamily::custom;
  fail(ErrorCode::invalid_argument, "unknown kernel family '" + s + "'");
}

double PsiTable::lookup(int d, const Point& xi) const {
  if (d == 2) {
    double th = std::atan2(xi[1], wrap_unit(xi[0]));
    if (th < 0) th += 2 * kPi;
    int n = n_azimuth;
    int i = static_cast<int>(std::floor(th / (2 * kPi / n) + 0.5)) % n;
    return values[i];
  }
  double x = wrap_unit(xi[0]), y = wrap_unit(xi[1]), z = xi[2];
  double r = std::sqrt(x * x + y * y + z * z);
  double phi = r > 0 ? std::acos(std::clamp(z / r, -1.0, 1.0)) : 0.0;
  int ip = std::min(n_polar - 1, static_cast<int>(phi / (kPi / n_polar)));
  double th = std::atan2(y, x);
  if (th < 0) th += 2 * kPi;
  int ia = static_cast<int>(std::floor(th / (2 * kPi / n_azimuth) + 0.5)) % n_azimuth;
  return values[ip * n_azimuth + ia];
}

PsiTable PsiTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read psi table '" + path + "'");
  PsiTable t;
  std::string tag;
  in >> tag;
  if (tag == "d2") {
    in >> t.n_azimuth;
    t.n_polar = 1;
  } else if (tag == "d3") {
    in >> t.n_polar >> t.n_azimuth;
  } else {
    fail(ErrorCode::io, "psi table '" + path + "': header must start with d2 or d3");
  }
  if (!in || t.n_azimuth < 1 || t.n_polar < 1) {
    fail(ErrorCode::io, "psi table '" + path + "': bad bin counts");
  }
  const std::size_t n = static_cast<std::size_t>(t.n_polar) * t.n_azimuth;
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> t.values[i])) fail(ErrorCode::io, "psi table '" + path + "': too few values");
    if (!(t.values[i] >= 0.0) || !std::isfinite(t.values[i])) {
      fail(ErrorCode::io, "psi table '" + path + "': values must be finite and >= 0");
    }
  }
  return t;
}

void validate_kernel_spec(const KernelSpec& k, const TorusGrid& g) {
  require(k.s > 0.0 && k.s < 1.0, "kernel: s must lie in (0,1)");
  require(k.p > 2.0, "kernel: p must exceed 2");
  require(k.gamma > 0.0 && std::isfinite(k.gamma), "kernel: gamma must be positive");
  double need = 2.0 * std::max(g.dx(), g.dz());
  require(k.r_cut >= need, "kernel: r_cut must be at least 2 max(dx, dz)");
  if (k.family == KernelFamily::fractional_aniso) {
    require(k.psi.has_value(), "kernel: fractional_aniso needs a psi table");
    require((g.d() == 2) == (k.psi->n_polar == 1), "kernel: psi table dimension mismatch");
  }
}

double kernel_value(const KernelSpec& k, int d, const Point& xi) {
  double n = norm_of(d, xi, k.norm);
  switch (k.family) {
    case KernelFamily::fractional_geodesic:
      return std::pow(n, -(d + k.s));
    case KernelFamily::fractional_aniso:
      return k.psi->lookup(d, xi) * std::pow(n, -(d + k.s));
    case KernelFamily::custom:
      return n < 1.0 ? k.gamma * std::pow(n, -(d + k.s)) : k.gamma * std::pow(n, -k.p);
  }
  return 0.0;
}

bool kernel_rough_in_box(const KernelSpec& k, int, const Point&, const Point&) {
  return k.family == KernelFamily::fractional_aniso;
}

double kernel_column_average(const KernelSpec& k, int d, double t) {
  if (k.family == KernelFamily::fractional_aniso) {
    // psi breaks the quadrant symmetry; integrate over the whole cell.
    auto f = [&](double u1, double u2) { return kernel_value(k, d, {u1, d == 2 ? t : u2, t}); };
    if (d == 2) {
      return integrate([&](double u) { return f(u, 0.0); }, -0.5, 0.0, 1e-9) +
             integrate([&](double u) { return f(u, 0.0); }, 0.0, 0.5, 1e-9);
    }
    auto outer = [&](double u1) {
      return integrate([&](double u2) { return f(u1, u2); }, -0.5, 0.5, 1e-9);
    };
    return integrate(outer, -0.5, 0.5, 1e-9);
  }
  return torus_average(
      d,
      [&](double u2) {
        // In d = 3, |u| reaches 1/sqrt(2); split it evenly so that neither
        // component wraps.
        const double c = d == 2 ? std::sqrt(u2) : std::sqrt(0.5 * u2);
        Point xi{c, d == 2 ? t : c, t};
        return kernel_value(k, d, xi);
      },
      t);
}

double kernel_flat_interaction(const KernelSpec& k, int d) {
  auto f = [&](double t) { return t * kernel_column_average(k, d, t); };
  double near = integrate_from_zero(f, 2.0, 1e-10);
  double far = integrate_to_infinity(f, 2.0, 1e-9);
  return near + far;
}

KernelBoundReport check_kernel_bounds(const KernelSpec& k, int d, int samples,
                                      unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> hu(-0.5, 0.5), vin(-1.0, 1.0), vout(1.0, 10.0);
  KernelBoundReport rep;
  rep.samples = samples;
  for (int i = 0; i < samples; ++i) {
    Point xi{hu(rng), hu(rng), 0.0};
    bool inner = i % 2 == 0;
    double z = inner ? vin(rng) : vout(rng) * (i % 4 == 1 ? 1.0 : -1.0);
    xi[d - 1] = z;
    if (d == 2) xi[2] = 0.0;
    double kv = kernel_value(k, d, xi);
    double n = norm_of(d, xi, k.norm);
    double bound = std::abs(z) >= 1.0 ? k.gamma / std::pow(std::abs(z), k.p)
                                      : k.gamma / std::pow(n, d + k.s);
    rep.max_ratio = std::max(rep.max_ratio, kv / bound);
    Point a = xi, b = xi;
    for (int j = 0; j + 1 < d; ++j) a[j] = -a[j];
    b[d - 1] = -b[d - 1];
    double ka = kernel_value(k, d, a), kb = kernel_value(k, d, b);
    double scale = std::max(kv, 1e-300);
    rep.max_asymmetry = std::max({rep.max_asymmetry, std::abs(ka - kv) / scale,
                                  std::abs(kb - kv) / scale});
  }
  return rep;
}

double RadialKernel::operator()(int d, const Point& xi) const {
  double n = norm_of(d, xi, NormConvention::geodesic);
  if (n <= r_min) return 0.0;
  if (r_max > 0.0 && n >= r_max) return 0.0;
  return std::pow(n, -beta);
}

bool RadialKernel::rough_in_box(int d, const Point& lo, const Point& hi) const {
  auto [mn, mx] = periodic_norm_range(d, lo, hi);
  if (r_min > 0.0 && mn < r_min && mx > r_min) return true;
  if (r_max > 0.0 && mn < r_max && mx > r_max) return true;
  return false;
}

double RadialKernel::column_average(int d, double t) const {
  t = std::abs(t);
  const double b = beta;
  if (d == 2) {
    // 2 int_lo^hi (u^2 + t^2)^{-b/2} du on the support of the window.
    double lo = r_min > t ? std::sqrt(r_min * r_min - t * t) : 0.0;
    double hi = 0.5;
    if (r_max > 0.0) hi = r_max > t ? std::min(0.5, std::sqrt(r_max * r_max - t * t)) : 0.0;
    if (lo >= hi) return 0.0;
    if (t == 0.0) {
      if (b == 1.0) return 2.0 * std::log(hi / lo);
      if (lo == 0.0 && b > 1.0) return std::numeric_limits<double>::infinity();
      return 2.0 * (std::pow(hi, 1.0 - b) - std::pow(lo, 1.0 - b)) / (1.0 - b);
    }
    if (b > 1.0) {
      // u = t tan(phi): int_0^phi cos^{b-2} = B(sin^2 phi; 1/2, (b-1)/2) / 2.
      // Near phi = pi/2 use the complement in cos^2 phi, which keeps full
      // precision when t is small.
      const double b1 = 0.5 * (b - 1.0);
      auto s2 = [&](double u) { return u * u / (u * u + t * t); };
      auto c2 = [&](double u) { return t * t / (u * u + t * t); };
      double diff;
      if (s2(hi) <= 0.5) {
        diff = boost::math::beta(0.5, b1, s2(hi)) - boost::math::beta(0.5, b1, s2(lo));
      } else if (s2(lo) >= 0.5) {
        diff = boost::math::beta(b1, 0.5, c2(lo)) - boost::math::beta(b1, 0.5, c2(hi));
      } else {
        diff = boost::math::beta(0.5, b1) - boost::math::beta(b1, 0.5, c2(hi)) -
               boost::math::beta(0.5, b1, s2(lo));
      }
      return std::pow(t, 1.0 - b) * diff;
    }
    auto f = [&](double u) { return std::pow(u * u + t * t, -0.5 * b); };
    double m = std::clamp(t, lo, hi);
    return 2.0 * (integrate(f, lo, m, 1e-11) + integrate(f, m, hi, 1e-11));
  }
  // Polar coordinates on the unit square, radial part in closed form.
  auto G = [&](double r) {
    double q = r * r + t * t;
    return b == 2.0 ? 0.5 * std::log(q) : std::pow(q, 1.0 - 0.5 * b) / (2.0 - b);
  };
  const double r_lo = r_min > t ? std::sqrt(r_min * r_min - t * t) : 0.0;
  const double r_cap = r_max > 0.0 ? (r_max > t ? std::sqrt(r_max * r_max - t * t) : 0.0)
                                   : std::numeric_limits<double>::infinity();
  if (t == 0.0 && r_lo == 0.0 && b >= 2.0) return std::numeric_limits<double>::infinity();
  auto f = [&](double th) {
    double r_hi = std::min(0.5 / std::cos(th), r_cap);
    return r_hi > r_lo ? G(r_hi) - G(r_lo) : 0.0;
  };
  constexpr double q = std::numbers::pi / 4.0;
  std::vector<double> cuts{0.0};
  for (double r : {r_lo, r_cap}) {
    if (r > 0.5 && r < std::sqrt(0.5)) cuts.push_back(std::acos(0.5 / r));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(q);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) sum += integrate(f, cuts[i], cuts[i + 1], 1e-12);
  return 8.0 * sum;
}

double RadialKernel::column_tail(int d, double tau) const {
  require(r_max <= 0.0, "column_tail: only for kernels without an outer cutoff");
  constexpr double T0 = 16.0;
  auto asym = [&](double T) {
    const double b = beta;
    const double m2 = (d - 1) / 12.0;
    const double m4 = d == 2 ? 1.0 / 80.0 : 7.0 / 180.0;
    return std::pow(T, 1.0 - b) / (b - 1.0) - 0.5 * b * m2 * std::pow(T, -1.0 - b) / (b + 1.0) +
           b * (b + 2.0) / 8.0 * m4 * std::pow(T, -3.0 - b) / (b + 3.0);
  };
  if (tau >= T0) return asym(tau);
  auto f = [&](double t) { return column_average(d, t); };
  double sum = asym(T0);
  // Split at the window edge and at 1 where the integrand changes character.
  std::vector<double> cuts{tau};
  for (double c : {r_min, 1.0, 4.0}) {
    if (c > tau && c < T0) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(T0);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    sum += integrate(f, a, b, 1e-11);
  }
  return sum;
}

double fractional_column_constant(int d, double s) {
  using boost::math::tgamma;
  return std::pow(kPi, 0.5 * (d - 1)) * tgamma(0.5 * (1.0 + s)) / tgamma(0.5 * (d + s));
}

double periodized_fractional_kernel(int d, double s, const Point& xi) {
  const double p = d + s;
  const double t = xi[d - 1];
  if (d == 2) {
    constexpr int Z = 10;
    const double x = wrap_unit(xi[0]);
    double sum = 0.0;
    for (int z = -Z; z <= Z; ++z) {
      double u = x + z;
      sum += std::pow(u * u + t * t, -0.5 * p);
    }
    // Images beyond Z by the midpoint rule with its leading correction.
    for (double a : {Z + 0.5 + x, Z + 0.5 - x}) {
      double fp = -p * a * std::pow(a * a + t * t, -0.5 * p - 1.0);
      sum += power_tail(a, t, p) + fp / 24.0;
    }
    return sum;
  }
  constexpr int Z = 6;
  const double x = wrap_unit(xi[0]), y = wrap_unit(xi[1]);
  double sum = 0.0;
  for (int i = -Z; i <= Z; ++i) {
    for (int j = -Z; j <= Z; ++j) {
      double u = x + i, v = y + j;
      sum += std::pow(u * u + v * v + t * t, -0.5 * p);
    }
  }
  // Outside the square of half-width A the lattice sum is replaced by the
  // integral, written in polar form: (8/(p-2)) int_0^{pi/4} (A^2/cos^2 + t^2)^{(2-p)/2}.
  const double A = Z + 0.5;
  const GaussRule& gr = gauss_legendre_unit(16);
  double tail = 0.0;
  for (std::size_t k = 0; k < gr.x.size(); ++k) {
    double th = gr.x[k] * kPi / 4.0;
    double c = std::cos(th);
    tail += gr.w[k] * std::pow(A * A / (c * c) + t * t, 0.5 * (2.0 - p));
  }
  tail *= (kPi / 4.0) * 8.0 / (p - 2.0);
  return sum + tail;
}

}  // namespace nlflow
