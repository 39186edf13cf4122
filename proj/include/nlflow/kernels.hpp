#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/quadrature.hpp"

namespace nlflow {

enum class KernelFamily { fractional_geodesic, fractional_aniso, custom };

const char* kernel_family_name(KernelFamily f);
KernelFamily parse_kernel_family(const std::string& s);

// Direction table for zero-homogeneous psi. In d = 2 the directions are
// angles of (xi', xi_d) in [0, 2pi) split into equal bins; in d = 3 the
// bins are (polar, azimuth) pairs. Lookup is nearest bin center.
struct PsiTable {
  int n_polar = 0;    // d = 3 only
  int n_azimuth = 0;  // number of angle bins (d = 2) or azimuth bins (d = 3)
  std::vector<double> values;

  double lookup(int d, const Point& xi) const;
  static PsiTable load(const std::string& path);
};

struct KernelSpec {
  KernelFamily family = KernelFamily::fractional_geodesic;
  double s = 0.5;
  double p = 3.0;
  double gamma = 1.0;
  double r_cut = 0.05;
  std::optional<PsiTable> psi;
  NormConvention norm = NormConvention::geodesic;
};

void validate_kernel_spec(const KernelSpec& k, const TorusGrid& g);

// Range [min, max] of the periodic norm over the box lo..hi.
std::pair<double, double> periodic_norm_range(int d, const Point& lo, const Point& hi);

// K(xi) for xi in T^{d-1} x R.
double kernel_value(const KernelSpec& k, int d, const Point& xi);

// True if K is discontinuous somewhere inside the box lo..hi (taken in
// xi coordinates); used to decide on adaptive quadrature.
bool kernel_rough_in_box(const KernelSpec& k, int d, const Point& lo, const Point& hi);

// Horizontal average of K at vertical separation t: int_{T^{d-1}} K(u, t) du.
double kernel_column_average(const KernelSpec& k, int d, double t);

// Interaction per unit torus area of the two halfspaces {x_d < 0} and
// {x_d > 0}: int_0^inf t * column_average(t) dt.
double kernel_flat_interaction(const KernelSpec& k, int d);

struct KernelBoundReport {
  double max_ratio = 0.0;      // max over samples of K / bound
  double max_asymmetry = 0.0;  // max relative |K(xi) - K(reflected xi)|
  int samples = 0;
};

// Samples K against gamma / |xi_d|^p (|xi_d| >= 1) and
// gamma / ||xi||^{d+s} (|xi_d| < 1), and against the reflections
// (x', x_d) -> (-x', x_d), (x', -x_d).
KernelBoundReport check_kernel_bounds(const KernelSpec& k, int d, int samples,
                                      unsigned long long seed);

// Kernels of the interaction type ||xi||^{-beta} restricted to a radial
// window; used by the Riesz and 0-fractional perimeters.
struct RadialKernel {
  double beta = 1.5;
  double r_min = 0.0;  // kernel vanishes for ||xi|| <= r_min
  double r_max = -1.0; // kernel vanishes for ||xi|| >= r_max when r_max > 0

  double operator()(int d, const Point& xi) const;
  bool rough_in_box(int d, const Point& lo, const Point& hi) const;
  double column_average(int d, double t) const;
  // int_tau^inf column_average(t) dt, for tau >= 0.
  double column_tail(int d, double tau) const;
};

// Euclidean s-kernel summed over horizontal periodic images:
// sum_{z in Z^{d-1}} |(xi' + z, xi_d)|^{-(d+s)}.
double periodized_fractional_kernel(int d, double s, const Point& xi);

// int_{R^{d-1}} |(u, t)|^{-(d+s)} du = c_{d,s} |t|^{-1-s}; returns c_{d,s}.
double fractional_column_constant(int d, double s);

}  // namespace nlflow
