#include "nlflow/initial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace nlflow {

InitialKind parse_initial_kind(const std::string& s) {
  if (s == "constant") return InitialKind::constant;
  if (s == "sinusoid") return InitialKind::sinusoid;
  if (s == "sawtooth") return InitialKind::sawtooth;
  if (s == "random_lipschitz") return InitialKind::random_lipschitz;
  fail(ErrorCode::config, "unknown initial kind '" + s + "'");
}

const char* initial_kind_name(InitialKind k) {
  switch (k) {
    case InitialKind::constant: return "constant";
    case InitialKind::sinusoid: return "sinusoid";
    case InitialKind::sawtooth: return "sawtooth";
    case InitialKind::random_lipschitz: return "random_lipschitz";
  }
  return "?";
}

namespace {

double column_x(const TorusGrid& g, int i) { return (i + 0.5) * g.dx(); }

// Triangle wave of unit amplitude and period 1, zero at x = 0.
double triangle(double x) {
  x -= std::floor(x);
  if (x < 0.25) return 4.0 * x;
  if (x < 0.75) return 2.0 - 4.0 * x;
  return 4.0 * x - 4.0;
}

// Periodic midpoint displacement on n points, roughness 1/2.
std::vector<double> midpoint_path(int n, std::mt19937_64& rng) {
  std::vector<double> v(n + 1, 0.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::pair<int, int>> stack{{0, n}};
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    if (j - i < 2) continue;
    int m = (i + j) / 2;
    v[m] = 0.5 * (v[i] + v[j]) + u(rng) * std::sqrt(static_cast<double>(j - i) / n);
    stack.push_back({i, m});
    stack.push_back({m, j});
  }
  v.pop_back();
  return v;
}

// Clip periodic increments to [-cap, cap] keeping their sum zero.
void clip_increments(std::vector<double>& inc, double cap) {
  for (auto& x : inc) x = std::clamp(x, -cap, cap);
  for (int it = 0; it < 100; ++it) {
    double sum = 0.0;
    for (double x : inc) sum += x;
    if (std::abs(sum) <= 1e-15 * cap * inc.size()) break;
    int room = 0;
    for (double x : inc) room += sum > 0 ? (x > -cap) : (x < cap);
    if (room == 0) break;
    double share = sum / room;
    for (auto& x : inc) {
      if (sum > 0 ? x > -cap : x < cap) x = std::clamp(x - share, -cap, cap);
    }
  }
}

}  // namespace

HeightField random_lipschitz_field(const TorusGrid& g, double amplitude, double L,
                                   std::uint64_t seed, double center) {
  require(amplitude >= 0.0 && L >= 0.0, "random_lipschitz: amplitude and L must be >= 0");
  std::mt19937_64 rng(seed);
  const int n = g.n_cols();
  std::vector<double> v(g.n_columns());
  if (g.d() == 2) {
    auto path = midpoint_path(n, rng);
    std::vector<double> inc(n);
    for (int i = 0; i < n; ++i) inc[i] = path[(i + 1) % n] - path[i];
    // Rescale so the roughest increment sits at the cap before clipping.
    double mx = 0.0;
    for (double x : inc) mx = std::max(mx, std::abs(x));
    double cap = L * g.dx();
    if (mx > 0.0) {
      for (auto& x : inc) x *= 1.5 * cap / mx;
    }
    clip_increments(inc, cap);
    v[0] = 0.0;
    for (int i = 1; i < n; ++i) v[i] = v[i - 1] + inc[i - 1];
  } else {
    // A few random Fourier modes, scaled to the Lipschitz bound below.
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    constexpr int K = 3;
    double c[K + 1][K + 1][4];
    for (auto& a : c)
      for (auto& b : a)
        for (auto& x : b) x = u(rng);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        double x = 2.0 * std::numbers::pi * column_x(g, i), y = 2.0 * std::numbers::pi * column_x(g, j);
        double s = 0.0;
        for (int p = 0; p <= K; ++p) {
          for (int q = 0; q <= K; ++q) {
            if (p == 0 && q == 0) continue;
            double amp = 1.0 / (p * p + q * q);
            s += amp * (c[p][q][0] * std::cos(p * x) * std::cos(q * y) + c[p][q][1] * std::cos(p * x) * std::sin(q * y) +
                        c[p][q][2] * std::sin(p * x) * std::cos(q * y) + c[p][q][3] * std::sin(p * x) * std::sin(q * y));
          }
        }
        v[g.column_index({i, j})] = s;
      }
    }
    double lip = lipschitz_constant(g, v);
    if (lip > 0.0) {
      for (auto& x : v) x *= L / lip;
    }
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double mx = 0.0;
  for (auto& x : v) {
    x -= mean;
    mx = std::max(mx, std::abs(x));
  }
  // Shrinking keeps the Lipschitz bound.
  if (mx > amplitude && mx > 0.0) {
    for (auto& x : v) x *= amplitude / mx;
  }
  for (auto& x : v) x += center;
  return HeightField(g, std::move(v), L);
}

HeightField generate_initial(const TorusGrid& g, const InitialParams& p) {
  const int nc = g.n_columns();
  std::vector<double> v(nc);
  const double A = p.amplitude;
  const double f = p.frequency;
  switch (p.kind) {
    case InitialKind::constant:
      std::fill(v.begin(), v.end(), A + p.offset);
      require(std::abs(A + p.offset) <= g.R(), "initial: field leaves the slab [-R, R]", ErrorCode::config);
      return HeightField(g, std::move(v), p.L);
    case InitialKind::sinusoid:
    case InitialKind::sawtooth:
      require(p.frequency >= 1, "initial: frequency must be a positive integer", ErrorCode::config);
      for (int c = 0; c < nc; ++c) {
        auto cc = g.column_coords(c);
        double x = column_x(g, cc[0]), y = column_x(g, cc[1]);
        if (p.kind == InitialKind::sinusoid) {
          v[c] = g.d() == 2 ? A * std::sin(2.0 * std::numbers::pi * f * x)
                            : A * std::sin(2.0 * std::numbers::pi * f * x) * std::sin(2.0 * std::numbers::pi * f * y);
        } else {
          v[c] = g.d() == 2 ? A * triangle(f * x) : 0.5 * A * (triangle(f * x) + triangle(f * y));
        }
      }
      break;
    case InitialKind::random_lipschitz:
      return random_lipschitz_field(g, A, p.L, p.seed, p.offset);
  }
  double lip = lipschitz_constant(g, v);
  require(lip <= p.L * (1.0 + 1e-9), "initial: amplitude/frequency give Lipschitz constant " +
                                          std::to_string(lip) + " > L = " + std::to_string(p.L),
          ErrorCode::config);
  for (double& x : v) {
    x += p.offset;
    require(std::abs(x) <= g.R(), "initial: field leaves the slab [-R, R]", ErrorCode::config);
  }
  return HeightField(g, std::move(v), p.L);
}

}  // namespace nlflow
