#include "nlflow/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace nlflow {

KernelDef kernel_def(const KernelSpec& k, int d) {
  KernelDef def;
  def.value = [k](int dd, const Point& xi) { return kernel_value(k, dd, xi); };
  def.rough = [k](int dd, const Point& lo, const Point& hi) {
    return kernel_rough_in_box(k, dd, lo, hi);
  };
  def.flat_interaction = [k, d]() { return kernel_flat_interaction(k, d); };
  def.r_cut = k.r_cut;
  return def;
}

double cell_pair_weight(const std::function<double(int, const Point&)>& value,
                        const std::function<bool(int, const Point&, const Point&)>&,
                        const TorusGrid& g, const CellOffset& o, const WeightOptions& opt) {
  const int d = g.d();
  Point center{}, half{};
  for (int i = 0; i + 1 < d; ++i) {
    center[i] = o.col[i] * g.dx();
    half[i] = 0.5 * g.dx();
  }
  center[d - 1] = o.level * g.dz();
  half[d - 1] = 0.5 * g.dz();
  TentOptions t;
  t.q = opt.q;
  t.rel_tol = opt.rel_tol;
  t.max_depth = opt.max_depth;
  // Every box carries a split-based error estimate; a fixed Gauss rule on
  // near neighbours is off by about 1e-5.
  t.adaptive = true;
  return tent_integral(d, center, half, [&](const Point& xi) { return value(d, xi); }, t);
}

double radial_cell_pair_weight(const RadialKernel& k, const TorusGrid& g, const CellOffset& o,
                               const WeightOptions& opt) {
  auto value = [&k](int d, const Point& xi) { return k(d, xi); };
  auto rough = [&k](int d, const Point& lo, const Point& hi) { return k.rough_in_box(d, lo, hi); };
  const double dx = g.dx(), dz = g.dz();
  const double cx = o.col[0] * dx, cz = o.level * dz;
  if (g.d() != 2 || !rough(2, {cx - dx, cz - dz, 0.0}, {cx + dx, cz + dz, 0.0})) {
    return cell_pair_weight(value, rough, g, o, opt);
  }
  std::vector<double> radii;
  for (double r : {k.r_min, k.r_max}) {
    if (r > 0.0) radii.push_back(r);
  }
  // Inner integral over the vertical tent, split where the integrand jumps
  // or has a kink.
  auto inner = [&](double x) {
    const double wx = wrap_unit(x);
    std::vector<double> cuts{-dz, 0.0, dz};
    auto add = [&](double v) {
      if (v > -dz && v < dz) cuts.push_back(v);
    };
    add(-cz);
    for (double r : radii) {
      if (r > std::abs(wx)) {
        double zc = std::sqrt(r * r - wx * wx);
        add(zc - cz);
        add(-zc - cz);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i + 1] - cuts[i] <= 0.0) continue;
      sum += integrate([&](double v) { return (dz - std::abs(v)) * k(2, {wx, cz + v, 0.0}); },
                       cuts[i], cuts[i + 1], 1e-10);
    }
    return sum;
  };
  // Outer integral over the horizontal tent; breakpoints where the crossing
  // meets a vertical kink, and at the wrap points.
  std::vector<double> cuts{-dx, 0.0, dx};
  auto add = [&](double u) {
    if (u > -dx && u < dx) cuts.push_back(u);
  };
  for (double z : {cz - dz, cz, cz + dz, 0.0}) {
    for (double r : radii) {
      if (r > std::abs(z)) {
        double xc = std::sqrt(r * r - z * z);
        for (int shift = -2; shift <= 2; ++shift) {
          add(xc + shift - cx);
          add(-xc + shift - cx);
        }
      }
    }
  }
  for (int shift = -2; shift <= 2; ++shift) {
    add(shift - cx);
    add(shift + 0.5 - cx);
  }
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] <= 0.0) continue;
    sum += integrate([&](double u) { return (dx - std::abs(u)) * inner(cx + u); }, cuts[i],
                     cuts[i + 1], std::max(opt.rel_tol * 1e-2, 1e-10));
  }
  return sum;
}

std::optional<double> PairwiseWeights::weight(const CellOffset& o) const {
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const auto& p = offsets[i];
    if (p.col == o.col && p.level == o.level) return w[i];
  }
  return std::nullopt;
}

int PairwiseWeights::max_level_offset() const {
  int m = 0;
  for (const auto& o : offsets) m = std::max(m, std::abs(o.level));
  return m;
}

PairwiseWeights precompute_weights(const KernelDef& k, const TorusGrid& g,
                                   const WeightOptions& opt) {
  require(k.r_cut > 0.0, "weights: r_cut must be positive");
  const int d = g.d();
  const int n = g.n_cols();
  const int hmax = std::min(n / 2, static_cast<int>(std::floor(k.r_cut / g.dx())));
  const int hmin = -std::min((n - 1) / 2, hmax);
  const int mmax = static_cast<int>(std::floor(k.r_cut / g.dz()));
  PairwiseWeights pw{g, {}, {}, 0.0, {}};
  for (int i = hmin; i <= hmax; ++i) {
    for (int j = (d == 2 ? 0 : hmin); j <= (d == 2 ? 0 : hmax); ++j) {
      for (int m = -mmax; m <= mmax; ++m) {
        if (i == 0 && j == 0 && m == 0) continue;
        double xi[3] = {i * g.dx(), j * g.dx(), m * g.dz()};
        if (d == 2) xi[1] = m * g.dz();
        if (periodic_norm(std::span<const double>(xi, d)) > k.r_cut) continue;
        pw.offsets.push_back({{i, j}, m});
      }
    }
  }
  pw.w.assign(pw.offsets.size(), 0.0);
  const long count = static_cast<long>(pw.offsets.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (long i = 0; i < count; ++i) {
    pw.w[i] = k.radial ? radial_cell_pair_weight(*k.radial, g, pw.offsets[i], opt)
                       : cell_pair_weight(k.value, k.rough, g, pw.offsets[i], opt);
  }
  double included = 0.0;
  for (long i = 0; i < count; ++i) {
    if (pw.offsets[i].level > 0) included += pw.offsets[i].level * pw.w[i];
  }
  included *= g.n_columns();
  pw.tail_correction = k.flat_interaction ? std::max(0.0, k.flat_interaction() - included) : 0.0;
  return pw;
}

std::string kernel_signature(const KernelSpec& k, const TorusGrid& g, const WeightOptions& opt) {
  std::uint64_t h = 1469598103934665603ull;
  if (k.psi) {
    for (double v : k.psi->values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = (h ^ bits) * 1099511628211ull;
    }
  }
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s %.17g %.17g %.17g %.17g d%d:%dx%d:R%.17g:q%d:tol%.3g:psi%016llx",
                kernel_family_name(k.family), k.s, k.p, k.gamma, k.r_cut, g.d(), g.n_cols(),
                g.n_levels(), g.R(), opt.q, opt.rel_tol, static_cast<unsigned long long>(h));
  return buf;
}

PairwiseWeights precompute_kernel_weights(const KernelSpec& k, const TorusGrid& g,
                                          const WeightOptions& opt) {
  validate_kernel_spec(k, g);
  auto pw = precompute_weights(kernel_def(k, g.d()), g, opt);
  pw.signature = kernel_signature(k, g, opt);
  return pw;
}

double max_weight_asymmetry(const PairwiseWeights& pw) {
  std::map<std::tuple<int, int, int>, double> table;
  double wmax = 0.0;
  for (std::size_t i = 0; i < pw.offsets.size(); ++i) {
    const auto& o = pw.offsets[i];
    table[{o.col[0], o.col[1], o.level}] = pw.w[i];
    wmax = std::max(wmax, std::abs(pw.w[i]));
  }
  const int n = pw.grid.n_cols();
  auto reduce = [n](int h) {
    h %= n;
    if (h < 0) h += n;
    return 2 * h > n ? h - n : h;
  };
  double worst = 0.0;
  for (const auto& [key, v] : table) {
    auto [i, j, m] = key;
    auto it = table.find({reduce(-i), pw.grid.d() == 2 ? 0 : reduce(-j), -m});
    double other = it == table.end() ? 0.0 : it->second;
    worst = std::max(worst, std::abs(v - other));
  }
  return wmax > 0.0 ? worst / wmax : 0.0;
}

void save_weights(const PairwiseWeights& pw, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write weight cache '" + path + "'");
  out << pw.signature << '\n';
  char buf[128];
  for (std::size_t i = 0; i < pw.offsets.size(); ++i) {
    const auto& o = pw.offsets[i];
    std::snprintf(buf, sizeof buf, "%d %d %d %.17g\n", o.col[0], o.col[1], o.level, pw.w[i]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "tail %.17g\n", pw.tail_correction);
  out << buf;
  if (!out) fail(ErrorCode::io, "failed writing weight cache '" + path + "'");
}

namespace {

PairwiseWeights parse_weights(std::istream& in, const std::string& path, const TorusGrid& g,
                              const std::string& header) {
  PairwiseWeights pw{g, {}, {}, 0.0, header};
  std::string line;
  bool tail_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line.rfind("tail ", 0) == 0) {
      std::string tag;
      ls >> tag >> pw.tail_correction;
      tail_seen = true;
      continue;
    }
    CellOffset o;
    double w;
    if (!(ls >> o.col[0] >> o.col[1] >> o.level >> w)) {
      fail(ErrorCode::io, "weight table '" + path + "': malformed record");
    }
    pw.offsets.push_back(o);
    pw.w.push_back(w);
  }
  if (!tail_seen) fail(ErrorCode::io, "weight table '" + path + "': missing tail line");
  return pw;
}

}  // namespace

std::optional<PairwiseWeights> load_weights(const std::string& path, const TorusGrid& g,
                                            const std::string& signature) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string header;
  std::getline(in, header);
  if (header != signature) return std::nullopt;
  return parse_weights(in, path, g, header);
}

PairwiseWeights read_weight_table(const std::string& path, const TorusGrid& g) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read weight table '" + path + "'");
  std::string header;
  std::getline(in, header);
  return parse_weights(in, path, g, header);
}

}  // namespace nlflow
