#include "nlflow/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nlflow {

RunMode parse_run_mode(const std::string& s) {
  if (s == "flow") return RunMode::flow;
  if (s == "ladder") return RunMode::ladder;
  if (s == "probe") return RunMode::probe;
  if (s == "validate") return RunMode::validate;
  if (s == "oracle") return RunMode::oracle;
  fail(ErrorCode::config, "unknown mode '" + s + "' (flow, ladder, probe, validate, oracle)");
}

const char* run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::flow: return "flow";
    case RunMode::ladder: return "ladder";
    case RunMode::probe: return "probe";
    case RunMode::validate: return "validate";
    case RunMode::oracle: return "oracle";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto a = s.find_first_not_of(ws);
  if (a == std::string::npos) return {};
  auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(x)) throw std::invalid_argument("not a number: '" + v + "'");
  return x;
}

long long to_int(const std::string& v) {
  char* end = nullptr;
  long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw std::invalid_argument("not an integer: '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& v) {
  char* end = nullptr;
  if (v.empty() || v[0] == '-') throw std::invalid_argument("not an unsigned integer: '" + v + "'");
  unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0') throw std::invalid_argument("not an unsigned integer: '" + v + "'");
  return x;
}

std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

ZeroParts parse_zero_parts(const std::string& s) {
  if (s == "both") return ZeroParts::both;
  if (s == "short") return ZeroParts::short_range;
  if (s == "long") return ZeroParts::long_range;
  throw std::invalid_argument("expected both, short or long");
}

const char* zero_parts_name(ZeroParts z) {
  switch (z) {
    case ZeroParts::both: return "both";
    case ZeroParts::short_range: return "short";
    case ZeroParts::long_range: return "long";
  }
  return "?";
}

StepBranch parse_branch(const std::string& s) {
  if (s == "minimal") return StepBranch::minimal;
  if (s == "maximal") return StepBranch::maximal;
  throw std::invalid_argument("expected minimal or maximal");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

// Wraps a library parser so its Error becomes a per-key message.
template <class F>
auto enum_value(F parse) {
  return [parse](const std::string& v) {
    try {
      return parse(v);
    } catch (const Error& e) {
      throw std::invalid_argument(e.what());
    }
  };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"mode", [](RunConfig& c, const std::string& v) { c.mode = enum_value(parse_run_mode)(v); }},
      {"d", [](RunConfig& c, const std::string& v) { c.d = static_cast<int>(to_int(v)); }},
      {"n_cols", [](RunConfig& c, const std::string& v) { c.n_cols = static_cast<int>(to_int(v)); }},
      {"n_levels", [](RunConfig& c, const std::string& v) { c.n_levels = static_cast<int>(to_int(v)); }},
      {"R", [](RunConfig& c, const std::string& v) { c.R = to_double(v); }},
      {"perimeter", [](RunConfig& c, const std::string& v) { c.perimeter.kind = enum_value(parse_perimeter_kind)(v); }},
      {"s", [](RunConfig& c, const std::string& v) { c.perimeter.s = c.perimeter.kernel.s = to_double(v); }},
      {"alpha", [](RunConfig& c, const std::string& v) { c.perimeter.alpha = to_double(v); }},
      {"rho", [](RunConfig& c, const std::string& v) { c.perimeter.rho = to_double(v); }},
      {"kernel_family", [](RunConfig& c, const std::string& v) { c.perimeter.kernel.family = enum_value(parse_kernel_family)(v); }},
      {"kernel_p", [](RunConfig& c, const std::string& v) { c.perimeter.kernel.p = to_double(v); }},
      {"gamma", [](RunConfig& c, const std::string& v) { c.perimeter.kernel.gamma = to_double(v); }},
      {"r_cut", [](RunConfig& c, const std::string& v) { c.perimeter.kernel.r_cut = to_double(v); }},
      {"psi_table", [](RunConfig& c, const std::string& v) { c.psi_table = v; }},
      {"kernel_table", [](RunConfig& c, const std::string& v) { c.perimeter.kernel_table = v; }},
      {"weight_cache", [](RunConfig& c, const std::string& v) { c.perimeter.weight_cache = v; }},
      {"quad_q", [](RunConfig& c, const std::string& v) { c.perimeter.quad.q = static_cast<int>(to_int(v)); }},
      {"quad_tol", [](RunConfig& c, const std::string& v) { c.perimeter.quad.rel_tol = to_double(v); }},
      {"zero_parts", [](RunConfig& c, const std::string& v) { c.perimeter.zero_parts = parse_zero_parts(v); }},
      {"zero_r_cut", [](RunConfig& c, const std::string& v) { c.perimeter.zero_r_cut = to_double(v); }},
      {"initial", [](RunConfig& c, const std::string& v) { c.initial.kind = enum_value(parse_initial_kind)(v); }},
      {"amplitude", [](RunConfig& c, const std::string& v) { c.initial.amplitude = to_double(v); }},
      {"frequency", [](RunConfig& c, const std::string& v) { c.initial.frequency = static_cast<int>(to_int(v)); }},
      {"L", [](RunConfig& c, const std::string& v) { c.initial.L = to_double(v); }},
      {"initial_seed", [](RunConfig& c, const std::string& v) { c.initial.seed = to_u64(v); }},
      {"offset", [](RunConfig& c, const std::string& v) { c.initial.offset = to_double(v); }},
      {"h", [](RunConfig& c, const std::string& v) { c.h = to_double(v); }},
      {"hs", [](RunConfig& c, const std::string& v) { c.hs = to_list(v); }},
      {"T", [](RunConfig& c, const std::string& v) { c.T = to_double(v); }},
      {"record_every", [](RunConfig& c, const std::string& v) { c.record_every = static_cast<int>(to_int(v)); }},
      {"branch", [](RunConfig& c, const std::string& v) { c.branch = parse_branch(v); }},
      {"lovasz_max_iter", [](RunConfig& c, const std::string& v) { c.lovasz_max_iter = static_cast<int>(to_int(v)); }},
      {"eps", [](RunConfig& c, const std::string& v) { c.eps = to_list(v); }},
      {"delta", [](RunConfig& c, const std::string& v) { c.delta = to_double(v); }},
      {"dither", [](RunConfig& c, const std::string& v) { c.dither = static_cast<int>(to_int(v)); }},
      {"pairs", [](RunConfig& c, const std::string& v) { c.pairs = static_cast<int>(to_int(v)); }},
      {"competitors", [](RunConfig& c, const std::string& v) { c.competitors = static_cast<int>(to_int(v)); }},
      {"oracle_instances", [](RunConfig& c, const std::string& v) { c.oracle_instances = static_cast<int>(to_int(v)); }},
      {"oracle_h", [](RunConfig& c, const std::string& v) { c.oracle_h = to_double(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
  };
  return table;
}

bool multiple_of(double T, double h) {
  double r = T / h;
  return std::abs(r - std::nearbyint(r)) <= 1e-9 * std::max(1.0, r);
}

bool readable(const std::string& path) { return static_cast<bool>(std::ifstream(path)); }

void validate(RunConfig& c, std::vector<std::string>& errs) {
  auto check = [&](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) errs.push_back(key + ": " + msg);
  };
  check(c.d == 2 || c.d == 3, "d", "must be 2 or 3");
  check(c.n_cols >= 2, "n_cols", "must be >= 2");
  check(c.n_levels >= 2, "n_levels", "must be >= 2");
  check(c.R > 0.0, "R", "must be positive");
  const bool grid_ok = (c.d == 2 || c.d == 3) && c.n_cols >= 2 && c.n_levels >= 2 && c.R > 0.0;
  const double dx = 1.0 / std::max(c.n_cols, 1), dz = 2.0 * c.R / std::max(c.n_levels, 1);
  const double res = std::max(dx, dz);

  auto& p = c.perimeter;
  check(p.s > 0.0 && p.s < 1.0, "s", "must lie in (0,1)");
  check(p.alpha > 0.0 && p.alpha < c.d - 1.0, "alpha", "must lie in (0, d-1)");
  if (p.kind == PerimeterKind::minkowski)
    check(p.rho >= res, "rho", "must be >= max(dx, dz) = " + std::to_string(res));
  check(p.rho > 0.0, "rho", "must be positive");
  check(p.kernel.p > 2.0, "kernel_p", "must exceed 2");
  check(p.kernel.gamma > 0.0, "gamma", "must be positive");
  if (p.kind == PerimeterKind::kernel && p.kernel_table.empty())
    check(p.kernel.r_cut >= 2.0 * res, "r_cut", "must be >= 2 max(dx, dz) = " + std::to_string(2.0 * res));
  check(p.quad.q >= 1, "quad_q", "must be >= 1");
  check(p.quad.rel_tol > 0.0 && p.quad.rel_tol < 1.0, "quad_tol", "must lie in (0,1)");
  if (p.kernel.family == KernelFamily::fractional_aniso && p.kind == PerimeterKind::kernel)
    check(!c.psi_table.empty(), "psi_table", "required by kernel_family = fractional_aniso");
  if (!c.psi_table.empty()) {
    if (!readable(c.psi_table)) {
      check(false, "psi_table", "cannot read '" + c.psi_table + "'");
    } else {
      try {
        p.kernel.psi = PsiTable::load(c.psi_table);
      } catch (const std::exception& e) {
        check(false, "psi_table", e.what());
      }
    }
  }
  if (!p.kernel_table.empty()) check(readable(p.kernel_table), "kernel_table", "cannot read '" + p.kernel_table + "'");

  check(c.initial.L > 0.0, "L", "must be positive");
  check(c.initial.frequency >= 1, "frequency", "must be >= 1");
  check(c.initial.amplitude >= 0.0 || c.initial.kind == InitialKind::constant, "amplitude", "must be >= 0");
  if (grid_ok) check(std::abs(c.initial.amplitude) + std::abs(c.initial.offset) <= c.R, "amplitude", "graph would leave [-R, R]");

  check(c.h > 0.0, "h", "must be positive");
  check(c.T >= c.h, "T", "must be >= h");
  if (c.h > 0.0) check(multiple_of(c.T, c.h), "T", "must be a multiple of h");
  bool desc = true;
  for (std::size_t i = 0; i < c.hs.size(); ++i) {
    if (c.hs[i] <= 0.0 || (i > 0 && c.hs[i] >= c.hs[i - 1])) desc = false;
  }
  check(desc, "hs", "must be positive and strictly descending");
  if (c.mode == RunMode::ladder) {
    check(c.hs.size() >= 3, "hs", "ladder needs at least three time steps");
    for (double hh : c.hs)
      if (hh > 0.0 && !multiple_of(c.T, hh)) {
        check(false, "hs", "every time step must divide T");
        break;
      }
  }
  check(c.record_every >= 1, "record_every", "must be >= 1");
  check(c.lovasz_max_iter >= 1, "lovasz_max_iter", "must be >= 1");
  bool eps_ok = true;
  for (double e : c.eps) eps_ok = eps_ok && e > 0.0 && e < 1.0;
  check(eps_ok, "eps", "every entry must lie in (0,1)");
  check(c.delta >= 0.0, "delta", "must be >= 0");
  check(c.dither >= 1, "dither", "must be >= 1");
  check(c.pairs >= 1, "pairs", "must be >= 1");
  check(c.competitors >= 1, "competitors", "must be >= 1");
  check(c.oracle_instances >= 1, "oracle_instances", "must be >= 1");
  check(c.oracle_h > 0.0, "oracle_h", "must be positive");
  check(!c.out.empty(), "out", "must not be empty");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, const Setter*> by_name;
  for (const auto& [name, fn] : setters()) by_name[name] = &fn;

  RunConfig c;
  std::vector<std::string> errs;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      errs.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    auto it = by_name.find(key);
    if (it == by_name.end()) {
      errs.push_back(key + ": unknown key");
      continue;
    }
    if (seen[key]++) {
      errs.push_back(key + ": given more than once");
      continue;
    }
    try {
      (*it->second)(c, value);
    } catch (const std::exception& e) {
      errs.push_back(key + ": " + e.what());
    }
  }
  validate(c, errs);
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    fail(ErrorCode::config, msg);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto list = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s;
  };
  const auto& p = c.perimeter;
  os << "mode = " << run_mode_name(c.mode) << '\n'
     << "d = " << c.d << '\n'
     << "n_cols = " << c.n_cols << '\n'
     << "n_levels = " << c.n_levels << '\n'
     << "R = " << num(c.R) << '\n'
     << "perimeter = " << perimeter_kind_name(p.kind) << '\n'
     << "s = " << num(p.s) << '\n'
     << "alpha = " << num(p.alpha) << '\n'
     << "rho = " << num(p.rho) << '\n'
     << "kernel_family = " << kernel_family_name(p.kernel.family) << '\n'
     << "kernel_p = " << num(p.kernel.p) << '\n'
     << "gamma = " << num(p.kernel.gamma) << '\n'
     << "r_cut = " << num(p.kernel.r_cut) << '\n';
  if (!c.psi_table.empty()) os << "psi_table = " << c.psi_table << '\n';
  if (!p.kernel_table.empty()) os << "kernel_table = " << p.kernel_table << '\n';
  if (!p.weight_cache.empty()) os << "weight_cache = " << p.weight_cache << '\n';
  os << "quad_q = " << p.quad.q << '\n'
     << "quad_tol = " << num(p.quad.rel_tol) << '\n'
     << "zero_parts = " << zero_parts_name(p.zero_parts) << '\n'
     << "zero_r_cut = " << num(p.zero_r_cut) << '\n'
     << "initial = " << initial_kind_name(c.initial.kind) << '\n'
     << "amplitude = " << num(c.initial.amplitude) << '\n'
     << "frequency = " << c.initial.frequency << '\n'
     << "L = " << num(c.initial.L) << '\n'
     << "initial_seed = " << c.initial.seed << '\n'
     << "offset = " << num(c.initial.offset) << '\n'
     << "h = " << num(c.h) << '\n'
     << "hs = " << list(c.hs) << '\n'
     << "T = " << num(c.T) << '\n'
     << "record_every = " << c.record_every << '\n'
     << "branch = " << (c.branch == StepBranch::minimal ? "minimal" : "maximal") << '\n'
     << "lovasz_max_iter = " << c.lovasz_max_iter << '\n'
     << "eps = " << list(c.eps) << '\n'
     << "delta = " << num(c.delta) << '\n'
     << "dither = " << c.dither << '\n'
     << "pairs = " << c.pairs << '\n'
     << "competitors = " << c.competitors << '\n'
     << "oracle_instances = " << c.oracle_instances << '\n'
     << "oracle_h = " << num(c.oracle_h) << '\n'
     << "seed = " << c.seed << '\n'
     << "out = " << c.out << '\n';
  return os.str();
}

}  // namespace nlflow
