#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlflow/grid.hpp"
#include "nlflow/weights.hpp"

namespace nlflow {

// Energy of a subgraph cell set of the form
//   constant
//   + sum_cells ([c in E] a(level) + [c not in E] b(level))
//   + sum_{ordered cell pairs x in E, y not in E} w(y - x)
//   + G(top)                                     top = max column count
// with w >= 0, G non-decreasing. Every pairwise perimeter is written in
// this form; the step solver turns it into a cut network.
template <class T>
struct ModelTables {
  std::vector<T> w;  // [h * (2n - 1) + (m + n - 1)], h = horizontal shift index
  std::vector<T> a;  // per level
  std::vector<T> b;  // per level
  std::vector<T> g;  // g[l] = G(l + 1) - G(l), per level
};

struct ModelTerm {
  int h;
  int m;
};

class QuantizedModel;

class PairwiseModel {
 public:
  explicit PairwiseModel(TorusGrid grid);

  const TorusGrid& grid() const { return grid_; }
  int n_shifts() const { return grid_.n_columns(); }
  int n_levels() const { return grid_.n_levels(); }

  double w(int h, int m) const { return t_.w[index(h, m)]; }
  void set_w(int h, int m, double v) { t_.w[index(h, m)] = v; dirty_ = true; }
  void add_w(int h, int m, double v) { t_.w[index(h, m)] += v; dirty_ = true; }
  std::vector<double>& a() { dirty_ = true; return t_.a; }
  std::vector<double>& b() { dirty_ = true; return t_.b; }
  std::vector<double>& g() { dirty_ = true; return t_.g; }
  const std::vector<double>& a() const { return t_.a; }
  const std::vector<double>& b() const { return t_.b; }
  const std::vector<double>& g() const { return t_.g; }
  double constant = 0.0;

  // Horizontal shift index of the column offset (b - a).
  int shift_index(std::array<int, 2> offset) const;
  std::array<int, 2> shift_of(int h) const;

  void add(const PairwiseModel& other);
  // Precomputes prefix tables; call after the last modification.
  void finalize();

  double evaluate(const SlabSet& s) const;
  double evaluate_counts(std::span<const int> counts) const;
  // Value for the halfspace with the given count in every column.
  double halfspace_value(int count) const;

  // Nonzero pair terms, for network construction.
  const std::vector<ModelTerm>& terms() const;
  bool has_level_term() const;

  // sum_{k in [k0, k1)} sum_{k' in [j0, j1)} w(h, k' - k), all bounds in [0, n].
  double block_sum(int h, int k0, int k1, int j0, int j1) const;

  QuantizedModel quantize(double quantum) const;

  // Sum over horizontal shifts of w(h, m).
  double column_weight(int m) const;

 private:
  std::size_t index(int h, int m) const {
    return static_cast<std::size_t>(h) * (2 * grid_.n_levels() - 1) + (m + grid_.n_levels() - 1);
  }
  friend class QuantizedModel;

  TorusGrid grid_;
  ModelTables<double> t_;
  bool dirty_ = true;
  std::vector<double> d_;  // second prefix tables, [h * (2n + 1) + j + n - 1]
  std::vector<double> pa_, pb_, pg_;
  std::vector<ModelTerm> terms_;
};

// Integer image of a model: every table entry rounded to a multiple of
// `quantum`. Energies are exact 64-bit sums, which makes extremal min cuts
// and exhaustive comparisons well defined.
class QuantizedModel {
 public:
  QuantizedModel() = default;

  const TorusGrid& grid() const { return *grid_; }
  double quantum() const { return quantum_; }
  double constant() const { return constant_; }
  std::int64_t w(int h, int m) const {
    return t_.w[static_cast<std::size_t>(h) * (2 * n_ - 1) + (m + n_ - 1)];
  }
  const std::vector<std::int64_t>& a() const { return t_.a; }
  const std::vector<std::int64_t>& b() const { return t_.b; }
  const std::vector<std::int64_t>& g() const { return t_.g; }
  const std::vector<ModelTerm>& terms() const { return terms_; }
  std::array<int, 2> shift_of(int h) const;
  int n_levels() const { return n_; }
  int n_shifts() const { return grid_->n_columns(); }
  std::int64_t block_sum(int h, int k0, int k1, int j0, int j1) const;

  std::int64_t evaluate_counts(std::span<const int> counts) const;
  double to_energy(std::int64_t v) const { return constant_ + quantum_ * static_cast<double>(v); }

 private:
  friend class PairwiseModel;
  std::shared_ptr<const TorusGrid> grid_;
  int n_ = 0;
  double quantum_ = 1.0;
  double constant_ = 0.0;
  ModelTables<std::int64_t> t_;
  std::vector<std::int64_t> d_;
  std::vector<std::int64_t> pa_, pb_, pg_;
  std::vector<ModelTerm> terms_;
};

// Kernel perimeter G_K(E, E^c) over the whole cylinder: in-slab pairs,
// pairs with the implicit regions, and the analytic truncation tail.
PairwiseModel kernel_perimeter_model(const PairwiseWeights& pw);

// Renormalized periodic fractional perimeter, so that halfspaces have
// value 0.
PairwiseModel sharp_fractional_model(const TorusGrid& g, double s, const WeightOptions& opt = {});

// Slab interaction deficit for a radial kernel (Riesz type), in the limit
// of an infinitely deep slab. Holds the auxiliary tables used by the
// nonnegative evaluation.
struct SlabInteraction {
  PairwiseModel model;
  std::vector<double> below;  // interaction of each level with the region below the slab
};
SlabInteraction slab_interaction_model(const TorusGrid& g, const RadialKernel& k,
                                       const WeightOptions& opt = {});
// 2 J(B, U) + 2 J(E, U) + J(U, U), U = empty cells below the top level.
double slab_interaction_value(const SlabInteraction& si, std::span<const int> counts);

// Nearest-neighbour face area: the grid (anisotropic) perimeter.
PairwiseModel face_area_model(const TorusGrid& g);

namespace serial {
// Direct double loop over cell pairs. Reference for PairwiseModel::evaluate.
double evaluate(const PairwiseModel& m, const SlabSet& s);
double slab_interaction_value(const SlabInteraction& si, std::span<const int> counts);
}  // namespace serial

}  // namespace nlflow
