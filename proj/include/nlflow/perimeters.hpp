#pragma once

#include <cstdint>
#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"
#include "nlflow/pairwise_model.hpp"
#include "nlflow/weights.hpp"

namespace nlflow {

enum class PerimeterKind { kernel, sharp_fractional, riesz, zero_fractional, minkowski, euclidean };
enum class SolverCapability { pairwise, generic_submodular };

PerimeterKind parse_perimeter_kind(const std::string& s);
const char* perimeter_kind_name(PerimeterKind k);

// Which parts of the 0-fractional perimeter to include.
enum class ZeroParts { both, short_range, long_range };

struct PerimeterParams {
  PerimeterKind kind = PerimeterKind::kernel;
  KernelSpec kernel;         // kernel
  double s = 0.5;            // sharp_fractional
  double alpha = 0.5;        // riesz, in (0, d - 1)
  double rho = 0.1;          // minkowski
  ZeroParts zero_parts = ZeroParts::both;
  double zero_r_cut = -1.0;  // short part truncation; <= 0 picks 1 + one cell diagonal
  WeightOptions quad;
  std::string weight_cache;  // kernel weights cache file, empty = none
  std::string kernel_table;  // precomputed weights to use as they are, empty = none
};

void validate_perimeter_params(const PerimeterParams& p, const TorusGrid& g);

// Columns within distance rho of a column, with the vertical reach R_b:
// an occupied cell at level k of column a sees an empty cell of column
// a + shift within rho iff count_b <= k + R_b, and symmetrically.
struct MinkowskiStencil {
  std::vector<std::array<int, 2>> shift;
  std::vector<int> reach;
};
MinkowskiStencil minkowski_stencil(const TorusGrid& g, double rho);
// Number of cells (slab and implicit) whose center lies within rho of the
// boundary: sum over columns of max_b(c_b - 1 + R_b) - min_b(c_b - R_b) + 1.
long long minkowski_fat_cells(const TorusGrid& g, const MinkowskiStencil& st,
                              std::span<const int> counts);

// A perimeter on the slab sets of one grid. Copies share the precomputed
// tables, which are immutable.
class PerimeterFunctional {
 public:
  PerimeterFunctional(const TorusGrid& g, const PerimeterParams& p);

  PerimeterKind kind() const;
  const PerimeterParams& params() const;
  const TorusGrid& grid() const;
  SolverCapability capability() const;

  double evaluate(const SlabSet& s) const;
  // Value of the discrete energy the step solver minimizes. Equal to
  // evaluate() up to round-off except for the Euclidean perimeter, whose
  // solver form is the face-area (grid) perimeter.
  double solver_energy(const SlabSet& s) const;

  // Pairwise form used by the min-cut solver; null for generic functionals.
  const PairwiseModel* model() const;
  // Kernel weights (kernel kind only).
  const PairwiseWeights* weights() const;
  // Minkowski kind only.
  const MinkowskiStencil* stencil() const;

  // max(1, |P(H)|) for the mid-slab halfspace.
  double scale() const;
  // Declared evaluation tolerance, absolute.
  double tolerance() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

// |grad f|^2 at a column center, fourth-order centered periodic differences.
double gradient_norm_sq(const HeightField& f, int col);
// Trapezoidal rule for the integral of sqrt(1 + |grad f|^2).
double eval_euclidean(const HeightField& f);
// (1 / 2 rho) times the volume of the rho-neighborhood of the boundary.
double eval_minkowski(const SlabSet& s, double rho);

enum class Evaluator { primary, solver };

struct SubmodularityReport {
  int pairs = 0;
  double max_violation = 0.0;  // max of P(E u F) + P(E n F) - P(E) - P(F)
  double scale = 1.0;
};
SubmodularityReport check_submodularity(const PerimeterFunctional& P, int n_pairs,
                                        std::uint64_t seed, Evaluator ev = Evaluator::primary);

struct TranslationReport {
  int shifts = 0;
  double max_rel_deviation = 0.0;
};
// Rejects shifts that would move the boundary out of the slab.
TranslationReport check_translation_invariance(const PerimeterFunctional& P, const SlabSet& s,
                                               const std::vector<CellOffset>& shifts);

struct HalfspaceReport {
  int competitors = 0;
  double halfspace_value = 0.0;
  double min_competitor = 0.0;
  double worst_margin = 0.0;  // max over F of P(H) - P(F); <= tol means pass
};
// Random Lipschitz competitors around the mid-slab halfspace H.
HalfspaceReport check_halfspace_minimality(const PerimeterFunctional& P, int n_competitors,
                                           std::uint64_t seed, double L = 2.0);

// Random Lipschitz subgraph in the middle half of the slab.
SlabSet random_subgraph(const TorusGrid& g, std::uint64_t seed, double L = 2.0);

}  // namespace nlflow
