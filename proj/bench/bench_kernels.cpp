// Serial reference loops vs the OpenMP kernels.
//
//   bench_kernels [n_cols] [n_levels] [repeats]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "nlflow/distance.hpp"
#include "nlflow/pairwise_model.hpp"
#include "nlflow/perimeters.hpp"

using namespace nlflow;

namespace {

// Mean seconds per call over at least `repeats` calls and 0.2 s; the
// value of the last call goes to `value`.
double seconds(const std::function<double()>& f, int repeats, double& value) {
  auto t0 = std::chrono::steady_clock::now();
  long calls = 0;
  double elapsed = 0.0;
  do {
    value = f();
    ++calls;
    elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } while (calls < repeats || elapsed < 0.2);
  return elapsed / calls;
}

// Reference loop, then the table-driven kernel on one thread and on all
// threads, so algorithmic and threading gains show separately.
void row(const char* name, const std::function<double()>& ref, const std::function<double()>& fast, int repeats) {
  double a = 0.0, b = 0.0, c = 0.0;
  const int threads = omp_get_max_threads();
  const double tr = seconds(ref, repeats, a);
  omp_set_num_threads(1);
  const double t1 = seconds(fast, repeats, b);
  omp_set_num_threads(threads);
  const double tn = seconds(fast, repeats, c);
  std::printf("%-20s reference %10.4f ms   1 thread %10.4f ms   %d threads %10.4f ms   thread speedup %5.2f   |diff| %.2e\n",
              name, 1e3 * tr, 1e3 * t1, threads, 1e3 * tn, t1 / tn, std::max(std::abs(a - b), std::abs(a - c)));
}

}  // namespace

int main(int argc, char** argv) {
  const int nc = argc > 1 ? std::atoi(argv[1]) : 128;
  const int nl = argc > 2 ? std::atoi(argv[2]) : 256;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 5;
  std::printf("grid %d x %d, %d threads, %d repeats\n", nc, nl, omp_get_max_threads(), repeats);

  TorusGrid g(2, nc, nl, 1.0);
  SlabSet s = random_subgraph(g, 7);

  PerimeterParams kp;
  kp.kind = PerimeterKind::kernel;
  PerimeterFunctional kernel(g, kp);
  const PairwiseModel& m = *kernel.model();
  row("pairwise evaluate", [&] { return serial::evaluate(m, s); }, [&] { return m.evaluate(s); }, repeats);

  SlabInteraction si = slab_interaction_model(g, RadialKernel{2.0 - 0.5, 0.0, -1.0});
  row("slab interaction", [&] { return serial::slab_interaction_value(si, s.counts()); },
      [&] { return slab_interaction_value(si, s.counts()); }, repeats);

  const CellSet cs = CellSet::of(s);
  auto total = [](const ScalarField& f) {
    double t = 0.0;
    for (double v : f.values) t += v;
    return t;
  };
  row("signed distance", [&] { return total(serial::signed_distance(cs)); },
      [&] { return total(signed_distance(cs)); }, repeats);
  return 0;
}
