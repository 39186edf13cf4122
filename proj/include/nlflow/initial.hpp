#pragma once

#include <cstdint>
#include <string>

#include "nlflow/grid.hpp"

namespace nlflow {

enum class InitialKind { constant, sinusoid, sawtooth, random_lipschitz };

InitialKind parse_initial_kind(const std::string& s);
const char* initial_kind_name(InitialKind k);

struct InitialParams {
  InitialKind kind = InitialKind::sinusoid;
  double amplitude = 0.2;  // constant: the value itself
  int frequency = 1;
  double L = 2.0;
  std::uint64_t seed = 1;
  // Added to every value. A fraction of a cell breaks the exact up/down
  // symmetry of sampled zero-mean fields.
  double offset = 0.0;
};

// Height field on the column centers. Throws when the result would violate
// L or leave [-R, R].
HeightField generate_initial(const TorusGrid& g, const InitialParams& p);

// Random periodic field with discrete Lipschitz constant <= L and
// |f - mean| <= amplitude, recentered to `center`.
HeightField random_lipschitz_field(const TorusGrid& g, double amplitude, double L,
                                   std::uint64_t seed, double center = 0.0);

}  // namespace nlflow
