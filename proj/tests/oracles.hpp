#pragma once

// Independent reference computations for the tests. Quadratures go through
// GSL; everything else is brute force over cells, faces or configurations.

#include <functional>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/perimeters.hpp"
#include "nlflow/step_solver.hpp"
#include "nlflow/weights.hpp"

namespace oracle {

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

// Adaptive integral over [a, b] with interior break points (GSL qagp).
double integrate(const Fn1& f, double a, double b, std::vector<double> breaks = {},
                 double epsrel = 1e-10);
// Integral over [a, inf) (GSL qagiu).
double integrate_inf(const Fn1& f, double a, double epsrel = 1e-10);

// Integral of K(xi_1, xi_2) over a pair of dx-by-dz cells whose centers
// differ by (o1 dx, o2 dz), written with the tent weight. `circle` adds
// inner break points where |xi| crosses that radius.
double cell_pair_2d(const Fn2& K, double dx, double dz, int o1, int o2, double circle = -1.0,
                    double epsrel = 1e-9);

// |xi|^{-(2+s)} summed over horizontal images |z| <= 20, plus the analytic
// tail of the remaining images.
double periodized_fractional_2d(double s, double x, double t);

// Signed distance at every cell center by minimizing over all boundary
// faces and horizontal images {-1, 0, 1}.
std::vector<double> signed_distance_brute(const nlflow::SlabSet& s);

// max |f_i - f_j| / geodesic distance over all column pairs.
double lipschitz_all_pairs(const nlflow::TorusGrid& g, const std::vector<double>& v);

// Calls f on every monotone configuration (vector of column counts).
void for_each_counts(const nlflow::TorusGrid& g, const std::function<void(const std::vector<int>&)>& f);

// Exhaustive step minimum from direct composition P.solver_energy(F) +
// sum of unary over F; minimal / maximal are meet / join of all argmins.
struct Enumerated {
  double best = 0.0;
  std::vector<int> minimal, maximal;
  int argmins = 0;
};
Enumerated enumerate_step(const nlflow::StepProblem& prob, double tie_tol);

}  // namespace oracle
