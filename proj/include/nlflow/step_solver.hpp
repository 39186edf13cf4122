#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/pairwise_model.hpp"
#include "nlflow/perimeters.hpp"

namespace nlflow {

// One minimizing-movements step: minimize P(F) + sum_{cells of F} unary.
// Energies are kept as 64-bit multiples of `quantum`, so comparisons between
// candidates are exact.
struct StepProblem {
  SlabSet E;
  double h = 0.0;
  PerimeterFunctional P;
  std::vector<double> unary;  // cell volume * sdist_E(center) / h, slab cells
  double quantum = 0.0;
  std::optional<QuantizedModel> qmodel;   // pairwise functionals
  std::vector<std::int64_t> unary_q;      // llround(unary / quantum)
  std::vector<std::int64_t> unary_prefix; // per column, [col * (n + 1) + c]
  std::int64_t minkowski_unit = 0;        // quantized energy of one fat cell

  const TorusGrid& grid() const { return E.grid(); }
  std::int64_t energy_int(std::span<const int> counts) const;
  double to_energy(std::int64_t v) const;
  // Unquantized value: P.solver_energy(F) + sum of unary over F.
  double energy(const SlabSet& F) const;
  // (1/h) * integral over E sym-diff F of dist(., boundary of E).
  double dissipation(const SlabSet& F) const;
  std::int64_t dissipation_int(const SlabSet& F) const;
};

struct StepOptions {
  // 0 selects 1e-12 * P.scale().
  double quantum = 0.0;
  // Restrict the cut network to levels [min count - 1, max count + 1] of E,
  // re-solving on the whole slab when the result touches the band edge.
  bool band = true;
  int lovasz_max_iter = 20000;
  // Absolute duality-gap tolerance; 0 selects 1e-6 * P.scale().
  double lovasz_gap = 0.0;
};

StepProblem assemble_step_energy(const SlabSet& E, double h, const PerimeterFunctional& P,
                                 const StepOptions& opt = {});

struct StepStats {
  int nodes = 0;
  std::size_t arcs = 0;
  long long augmentations = 0;
  int phases = 0;
  double wall_seconds = 0.0;
  int band_lo = 0;
  int band_hi = 0;
  bool full_slab_fallback = false;
  int iterations = 0;
  bool certified = true;
  double gap = 0.0;
};

struct StepResult {
  SlabSet minimal;
  SlabSet maximal;
  double energy = 0.0;           // unquantized energy of the minimal minimizer
  std::int64_t energy_int = 0;   // exact, shared by both minimizers
  double dissipation = 0.0;      // of the minimal minimizer
  StepStats stats;
};

StepResult solve_step_mincut(const StepProblem& prob, const StepOptions& opt = {});
StepResult solve_step_lovasz(const StepProblem& prob, const StepOptions& opt = {});
StepResult solve_step_exhaustive(const StepProblem& prob);
// Min-cut for pairwise functionals, Lovasz otherwise.
StepResult solve_step(const StepProblem& prob, const StepOptions& opt = {});

double dissipation_value(const SlabSet& E, const SlabSet& F, double h);

}  // namespace nlflow
