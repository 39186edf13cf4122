#pragma once

#include <cstdint>
#include <vector>

#include "nlflow/grid.hpp"

namespace nlflow {

// Signed distance at every cell center to the polyhedral boundary of a
// cell-wise set: negative inside, positive outside. Horizontal directions
// wrap periodically. Throws ErrorCode::no_boundary when all slab cells
// share one state.
ScalarField signed_distance(const CellSet& s);
inline ScalarField signed_distance(const SlabSet& s) {
  return signed_distance(CellSet::of(s));
}

struct CellMask {
  TorusGrid grid;
  std::vector<std::uint8_t> mask;

  std::size_t count() const;
  double volume() const { return static_cast<double>(count()) * grid.cell_volume(); }
};

// Cells whose center lies within distance rho of the boundary.
CellMask fat_neighborhood(const SlabSet& s, double rho);

// Volume of the rho-neighborhood of the boundary counted over the slab and
// over the implicit cells above and below it.
double fat_volume_extended(const SlabSet& s, double rho);

namespace serial {
// Straightforward per-cell scan over every column, no pruning and no
// threading. Reference for the parallel kernel above.
ScalarField signed_distance(const CellSet& s);
}  // namespace serial

}  // namespace nlflow
