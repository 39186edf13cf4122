#pragma once

#include <array>
#include <functional>
#include <vector>

namespace nlflow {

// Gauss-Legendre nodes and weights mapped to [0, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

const GaussRule& gauss_legendre_unit(int q);

using Point = std::array<double, 3>;
using KernelFn = std::function<double(const Point&)>;

struct TentOptions {
  int q = 4;               // nodes per orthant and direction
  bool adaptive = false;   // dyadic refinement near singular or rough points
  double rel_tol = 1e-6;   // summed error estimate, relative to the whole
  int max_depth = 60;
  long max_boxes = 200000;
  // Optional: true when the kernel is smooth on the box lo..hi (in xi), so
  // the Gauss rule is accepted there without refinement.
  std::function<bool(const Point&, const Point&)> smooth;
};

// Integral of the kernel over pairs of axis-aligned boxes of half-width
// delta whose centers differ by `center`, written as the single integral
//   int_{center + [-2 delta, 2 delta]^d} f(xi) prod_i (2 delta_i - |xi_i - center_i|) dxi.
// The first d entries of center and delta are used.
double tent_integral(int d, const Point& center, const Point& delta, const KernelFn& f,
                     const TentOptions& opt);

// One-dimensional adaptive integrals (Boost.Math). The semi-infinite
// variant integrates over [a, inf).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10);
double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double rel_tol = 1e-10);
// Integral over (0, b] of a function that may blow up (integrably) at 0;
// dyadic pieces toward 0, f is never evaluated at 0.
double integrate_from_zero(const std::function<double(double)>& f, double b,
                           double rel_tol = 1e-10);
// Integral over [a, b] of a function that may be singular at either end.
double integrate_singular(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-10);

}  // namespace nlflow
