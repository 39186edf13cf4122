#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/kernels.hpp"

namespace nlflow {

// A translation-invariant kernel as seen by the weight precomputation.
struct KernelDef {
  std::function<double(int, const Point&)> value;
  // Whether the kernel is discontinuous inside a box; such boxes are
  // integrated adaptively.
  std::function<bool(int, const Point&, const Point&)> rough;
  // Halfspace interaction per unit area, used for the truncation tail.
  std::function<double()> flat_interaction;
  double r_cut = 0.0;
  // Set for radial kernels; enables exact splitting at the window edges.
  std::optional<RadialKernel> radial;
};

KernelDef kernel_def(const KernelSpec& k, int d);

struct WeightOptions {
  int q = 4;
  double rel_tol = 1e-6;
  int max_depth = 60;
};

// w(o) = integral of K(y - x) over x in one cell and y in the cell shifted
// by o. All offsets o != 0 whose center has periodic norm <= r_cut are kept.
struct PairwiseWeights {
  TorusGrid grid;
  std::vector<CellOffset> offsets;
  std::vector<double> w;
  // Flat-interface interaction of the excluded offsets, per unit torus area.
  double tail_correction = 0.0;
  std::string signature;  // identifies the kernel for caching

  std::optional<double> weight(const CellOffset& o) const;
  int max_level_offset() const;
};

PairwiseWeights precompute_weights(const KernelDef& k, const TorusGrid& g,
                                   const WeightOptions& opt = {});
PairwiseWeights precompute_kernel_weights(const KernelSpec& k, const TorusGrid& g,
                                          const WeightOptions& opt = {});

// Cell-pair integral for one offset, shared by the dense builders.
double cell_pair_weight(const std::function<double(int, const Point&)>& value,
                        const std::function<bool(int, const Point&, const Point&)>& rough,
                        const TorusGrid& g, const CellOffset& o, const WeightOptions& opt);

// Same for a radial kernel. In d = 2, boxes crossed by a window edge are
// integrated as nested one-dimensional integrals split at the crossings.
double radial_cell_pair_weight(const RadialKernel& k, const TorusGrid& g, const CellOffset& o,
                               const WeightOptions& opt);

// Largest |w(o) - w(-o)| relative to the largest weight.
double max_weight_asymmetry(const PairwiseWeights& pw);

std::string kernel_signature(const KernelSpec& k, const TorusGrid& g, const WeightOptions& opt);

// Text cache: header line `family s p gamma r_cut grid-signature`, then
// `h0 h1 m w` records and a final `tail` line. load returns nullopt when
// the file is missing or its header differs from `signature`.
void save_weights(const PairwiseWeights& pw, const std::string& path);
std::optional<PairwiseWeights> load_weights(const std::string& path, const TorusGrid& g,
                                            const std::string& signature);
// Reads a table in the same format whatever its header; throws if missing.
PairwiseWeights read_weight_table(const std::string& path, const TorusGrid& g);

}  // namespace nlflow
