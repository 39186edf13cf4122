#pragma once

#include <optional>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/perimeters.hpp"
#include "nlflow/step_solver.hpp"

namespace nlflow {

enum class StepBranch { minimal, maximal };

struct FlowConfig {
  HeightField E0;
  double h = 0.01;
  double T = 0.1;
  PerimeterFunctional P;
  int record_every = 1;
  StepOptions step;
  StepBranch branch = StepBranch::minimal;
  // Initial boundary must stay this fraction of R away from the slab edges.
  double margin_fraction = 0.25;
  // Abort when the boundary comes within this many cells of a slab edge.
  int abort_cells = 2;
  long long max_steps = 1000000;
};

FlowConfig make_flow_config(const HeightField& E0, double h, double T,
                            const PerimeterFunctional& P, int record_every = 1);

struct FlowTrace {
  double h = 0.0;
  std::vector<double> times;
  std::vector<SlabSet> sets;
  std::vector<HeightField> heights;
  std::vector<double> perimeters;       // primary evaluator, per snapshot
  std::vector<double> solver_perimeters;
  std::vector<double> dissipations;     // per step
  std::vector<std::int64_t> dissipations_int;
  std::vector<double> symdiff_to_initial;
  std::vector<double> oscillations;
  std::vector<double> lipschitz;
  int steps = 0;
  bool certified = true;
  double solver_seconds = 0.0;
  long long augmentations = 0;
  std::size_t max_arcs = 0;
  int full_slab_fallbacks = 0;
  double quantum = 0.0;
  // Exact integer bookkeeping: solver perimeter in quanta per snapshot.
  std::vector<std::int64_t> solver_perimeters_int;
};

// Discrete flow E_{kh} = T_h E_{(k-1)h}. Snapshots at t = 0 and every
// record_every steps, plus the final time.
FlowTrace run_flow(const FlowConfig& cfg);
// Continue from an arbitrary slab set (same grid) for `steps` steps.
FlowTrace run_flow_from(const FlowConfig& cfg, const SlabSet& start, long long steps);

struct HolderReport {
  int snapshots = 0;
  double C_emp = 0.0;   // sup |E_t - E_s| / max(h^1/2, |t - s|^1/2)
  double slope = 0.0;   // log-log slope of the lag envelope on [lag_lo, lag_hi]
  double lag_lo = 0.0;
  double lag_hi = 0.0;
  int fit_points = 0;
  std::vector<double> lags;
  std::vector<double> envelope;  // max symmetric difference over lags <= lag
};
HolderReport holder_diagnostic(const FlowTrace& tr, double T = 0.0);

struct LadderReport {
  std::vector<double> hs;
  std::vector<double> rung_deviation;  // sup_t |E^{h_i}_t - E^{h_{i+1}}_t|
  std::vector<FlowTrace> traces;
  bool monotone = true;
};
LadderReport refinement_compare(const HeightField& E0, const std::vector<double>& hs, double T,
                                const PerimeterFunctional& P, const StepOptions& step = {});

struct SemigroupReport {
  bool equal = true;
  double symdiff = 0.0;  // |E_{t1+t2} - E_{t2}[E_{t1}]|
  // Ladder variant, per rung i: |E^{h_i}_{t2}[E^{h_{i+1}}_{t1}] - E^{h_i}_{t1+t2}|.
  std::vector<double> ladder_deviation;
};
SemigroupReport semigroup_check(const HeightField& E0, double h, double t1, double t2,
                                const PerimeterFunctional& P, const StepOptions& step = {});
std::vector<double> semigroup_ladder(const HeightField& E0, const std::vector<double>& hs,
                                     double t1, double t2, const PerimeterFunctional& P,
                                     const StepOptions& step = {});

struct ConvergenceReport {
  std::vector<double> oscillation;
  std::optional<double> detection_time;
  int osc_increases = 0;      // increases beyond one cell
  double max_osc_increase = 0.0;
  double lambda = 0.0;        // terminal mean height
};
ConvergenceReport halfspace_convergence(const FlowTrace& tr, double tol);

struct ProbeRow {
  double eps = 0.0;
  double ratio = 0.0;  // (P(E) - P(E_eps)) / eps
};
struct ProbeReport {
  std::vector<ProbeRow> rows;
  double C_estimate = 0.0;  // min ratio
  // Euclidean only: integral of |grad f|^2 / sqrt(1 + |grad f|^2).
  std::optional<double> euclidean_derivative;
  int dither = 0;
};
// Nonlocal functionals are evaluated on cell sets, which cannot resolve
// height changes below one cell; the difference is averaged over `dither`
// vertical offsets of the graph spread across one cell. Needs dither well
// above dz / (eps * osc f), or the average is mostly zeros.
ProbeReport assumption_H_probe(const PerimeterFunctional& P, const HeightField& f,
                               const std::vector<double>& eps_list, double delta,
                               int dither = 1024);

double mean_height(const SlabSet& s);
double euclidean_derivative(const HeightField& f);

}  // namespace nlflow
