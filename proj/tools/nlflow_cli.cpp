// nlflow: command line driver.
//
//   nlflow <mode> --config <path> [--out <dir>] [--seed <u64>]
//
// Writes its results and a machine-readable report.json into the output
// directory. Exit status: 0 when every check passes, otherwise the numeric
// ErrorCode (see --help).

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nlflow/config.hpp"
#include "nlflow/error.hpp"
#include "nlflow/flow_driver.hpp"
#include "nlflow/initial.hpp"
#include "nlflow/io.hpp"
#include "nlflow/perimeters.hpp"
#include "nlflow/step_solver.hpp"

using namespace nlflow;
using json = nlohmann::ordered_json;

namespace {

struct Checks {
  json list = json::array();
  bool ok = true;

  void add(const std::string& name, double value, double tolerance, bool passed) {
    list.push_back({{"name", name}, {"value", value}, {"tolerance", tolerance}, {"passed", passed}});
    ok = ok && passed;
    std::printf("%-34s %s  value=%.6g  tol=%.3g\n", name.c_str(), passed ? "PASS" : "FAIL", value, tolerance);
  }
};

void apply_thread_cap() {
  if (const char* env = std::getenv("NLFLOW_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (*env == '\0' || *end != '\0' || n < 0)
      fail(ErrorCode::invalid_argument, "NLFLOW_THREADS must be a non-negative integer");
    if (n > 0) omp_set_num_threads(static_cast<int>(n));
  }
}

StepOptions step_options(const RunConfig& c) {
  StepOptions o;
  o.lovasz_max_iter = c.lovasz_max_iter;
  return o;
}

json trace_summary(const FlowTrace& tr) {
  double total = 0.0;
  for (double d : tr.dissipations) total += d;
  return {{"h", tr.h},
          {"steps", tr.steps},
          {"snapshots", tr.times.size()},
          {"perimeter_initial", tr.perimeters.front()},
          {"perimeter_final", tr.perimeters.back()},
          {"dissipation_total", total},
          {"certified", tr.certified},
          {"full_slab_fallbacks", tr.full_slab_fallbacks}};
}

void check_trace(const FlowTrace& tr, const PerimeterFunctional& P, Checks& ck, const std::string& tag) {
  const double tol = 1e-9 * P.scale();
  double rise = -INFINITY;
  for (std::size_t i = 1; i < tr.perimeters.size(); ++i)
    rise = std::max(rise, tr.perimeters[i] - tr.perimeters[i - 1]);
  if (tr.perimeters.size() < 2) rise = 0.0;
  ck.add(tag + "perimeter non-increasing", rise, tol, rise <= tol);
  double total = 0.0;
  for (double d : tr.dissipations) total += d;
  const double excess = total - tr.perimeters.front();
  ck.add(tag + "dissipation bound", excess, tol, excess <= tol);
  ck.add(tag + "steps certified", tr.certified ? 0.0 : 1.0, 0.0, tr.certified);
}

json run_flow_mode(const RunConfig& c, const PerimeterFunctional& P, Checks& ck) {
  HeightField f = generate_initial(c.grid(), c.initial);
  FlowConfig cfg = make_flow_config(f, c.h, c.T, P, c.record_every);
  cfg.step = step_options(c);
  cfg.branch = c.branch;
  FlowTrace tr = run_flow(cfg);
  write_trace(tr, c.out);
  check_trace(tr, P, ck, "");
  std::printf("flow: %d steps, solver %.2fs, P %.10g -> %.10g\n", tr.steps, tr.solver_seconds,
              tr.perimeters.front(), tr.perimeters.back());
  return trace_summary(tr);
}

json run_ladder_mode(const RunConfig& c, const PerimeterFunctional& P, Checks& ck) {
  HeightField f = generate_initial(c.grid(), c.initial);
  LadderReport rep = refinement_compare(f, c.hs, c.T, P, step_options(c));
  CsvTable t;
  t.header = {"h", "rung_deviation", "C_emp", "envelope_slope", "lambda"};
  json rungs = json::array();
  for (std::size_t i = 0; i < rep.hs.size(); ++i) {
    const auto& tr = rep.traces[i];
    char dir[64];
    std::snprintf(dir, sizeof dir, "/h_%.6g", rep.hs[i]);
    write_trace(tr, c.out + dir);
    HolderReport hr = tr.times.size() >= 10 ? holder_diagnostic(tr, c.T) : HolderReport{};
    ConvergenceReport cr = halfspace_convergence(tr, 3.0 * c.grid().dz());
    double dev = i + 1 < rep.hs.size() ? rep.rung_deviation[i] : NAN;
    t.rows.push_back({rep.hs[i], dev, hr.C_emp, hr.slope, cr.lambda});
    rungs.push_back({{"h", rep.hs[i]}, {"C_emp", hr.C_emp}, {"slope", hr.slope}, {"lambda", cr.lambda},
                     {"trace", trace_summary(tr)}});
    check_trace(tr, P, ck, "h=" + std::to_string(rep.hs[i]) + ": ");
  }
  // The last row has no finer partner.
  t.rows.back()[1] = 0.0;
  write_csv(t, c.out + "/ladder.csv");
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < rep.rung_deviation.size(); ++i)
    worst = std::max(worst, rep.rung_deviation[i + 1] - rep.rung_deviation[i]);
  ck.add("rung deviations non-increasing", worst, 0.0, rep.monotone);
  return {{"rung_deviation", rep.rung_deviation}, {"rungs", rungs}};
}

json run_probe_mode(const RunConfig& c, const PerimeterFunctional& P, Checks& ck) {
  HeightField f = generate_initial(c.grid(), c.initial);
  ProbeReport rep = assumption_H_probe(P, f, c.eps, c.delta, c.dither);
  CsvTable t;
  t.header = {"eps", "ratio"};
  json rows = json::array();
  for (const auto& r : rep.rows) {
    t.rows.push_back({r.eps, r.ratio});
    rows.push_back({{"eps", r.eps}, {"ratio", r.ratio}});
  }
  write_csv(t, c.out + "/probe.csv");
  ck.add("ratios bounded below by C > 0", rep.C_estimate, 0.0, rep.C_estimate > 0.0);
  json out = {{"rows", rows}, {"C_estimate", rep.C_estimate}, {"dither", rep.dither}};
  if (rep.euclidean_derivative) {
    const auto& smallest = *std::min_element(rep.rows.begin(), rep.rows.end(),
                                             [](const ProbeRow& a, const ProbeRow& b) { return a.eps < b.eps; });
    const double rel = std::abs(smallest.ratio - *rep.euclidean_derivative) / *rep.euclidean_derivative;
    ck.add("euclidean ratio vs derivative", rel, 0.05, rel <= 0.05);
    out["euclidean_derivative"] = *rep.euclidean_derivative;
  }
  return out;
}

json run_validate_mode(const RunConfig& c, const PerimeterFunctional& P, Checks& ck) {
  const TorusGrid g = c.grid();
  json out;
  if (const PairwiseWeights* w = P.weights()) {
    const double asym = max_weight_asymmetry(*w);
    ck.add("weight symmetry w(o) = w(-o)", asym, 1e-12, asym <= 1e-12);
    out["weight_asymmetry"] = asym;
  }
  const bool sharp = P.kind() == PerimeterKind::sharp_fractional;
  const Evaluator ev = P.kind() == PerimeterKind::euclidean ? Evaluator::solver : Evaluator::primary;
  SubmodularityReport sr = check_submodularity(P, c.pairs, c.seed, ev);
  const double sub_tol = sharp ? P.tolerance() : 1e-9 * P.scale();
  ck.add("submodularity", sr.max_violation, sub_tol, sr.max_violation <= sub_tol);

  SlabSet s = random_subgraph(g, c.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<CellOffset> shifts{{{1, 0}, 0}, {{g.n_cols(), 0}, 0}, {{0, 0}, 1}, {{0, 0}, -1}};
  if (g.d() == 3) shifts.push_back({{0, 1}, 0});
  TranslationReport tr = check_translation_invariance(P, s, shifts);
  const double tr_tol = std::max(1e-9, P.tolerance() / P.scale());
  ck.add("translation invariance", tr.max_rel_deviation, tr_tol, tr.max_rel_deviation <= tr_tol);

  HalfspaceReport hr = check_halfspace_minimality(P, c.competitors, c.seed + 1, c.initial.L);
  const double hs_tol = 1e-6 * P.scale();
  ck.add("halfspace minimality", hr.worst_margin, hs_tol, hr.worst_margin <= hs_tol);
  out["submodularity"] = {{"pairs", sr.pairs}, {"max_violation", sr.max_violation}};
  out["translation"] = {{"shifts", tr.shifts}, {"max_rel_deviation", tr.max_rel_deviation}};
  out["halfspace"] = {{"competitors", hr.competitors}, {"halfspace_value", hr.halfspace_value},
                      {"min_competitor", hr.min_competitor}, {"worst_margin", hr.worst_margin}};
  return out;
}

json run_oracle_mode(const RunConfig& c, const PerimeterFunctional& P, Checks& ck) {
  const TorusGrid g = c.grid();
  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<int> level(1, g.n_levels() - 1);
  const StepOptions opt = step_options(c);
  int energy_mismatch = 0, set_mismatch = 0;
  double worst_gap = 0.0;
  json rows = json::array();
  for (int i = 0; i < c.oracle_instances; ++i) {
    std::vector<int> counts(g.n_columns());
    for (auto& x : counts) x = level(rng);
    StepProblem prob = assemble_step_energy(SlabSet::from_counts(g, counts), c.oracle_h, P, opt);
    StepResult ex = solve_step_exhaustive(prob);
    StepResult r = solve_step(prob, opt);
    const bool e_ok = r.energy_int == ex.energy_int;
    const bool s_ok = r.minimal == ex.minimal && r.maximal == ex.maximal;
    worst_gap = std::max(worst_gap, (r.energy_int - ex.energy_int) * prob.quantum);
    energy_mismatch += !e_ok;
    set_mismatch += !s_ok;
    rows.push_back({{"counts", counts}, {"energy", ex.energy}, {"energy_match", e_ok}, {"extremal_match", s_ok}});
  }
  if (P.model()) {
    ck.add("min-cut energy equals enumeration", energy_mismatch, 0.0, energy_mismatch == 0);
    ck.add("extremal minimizers match", set_mismatch, 0.0, set_mismatch == 0);
  } else {
    const double tol = 1e-6 * P.scale();
    ck.add("relaxation energy within tolerance", worst_gap, tol, worst_gap <= tol);
  }
  return {{"instances", rows}};
}

const char* exit_help =
    "Exit status:\n"
    "  0   success, all checks passed\n"
    "  1   unexpected internal error\n"
    "  2   invalid argument\n"
    "  3   grid mismatch\n"
    "  4   set without boundary\n"
    "  5   slab margin exhausted\n"
    "  6   step solver not certified\n"
    "  7   instance too large\n"
    "  8   configuration error\n"
    "  9   input/output error\n"
    "  10  a check failed (see report.json)\n"
    "Environment: NLFLOW_THREADS caps the worker count (0 = automatic).";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal curvature flows of periodic Lipschitz subgraphs"};
  app.footer(exit_help);
  std::string mode, config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("mode", mode, "flow | ladder | probe | validate | oracle")->required();
  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--out", out_dir, "output directory (overrides `out`)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides `seed`)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorCode::invalid_argument);
  }

  json report = {{"mode", mode}, {"config", config_path}};
  std::string report_dir = out_dir;
  int status = 0;
  Checks ck;
  try {
    apply_thread_cap();
    RunConfig c = load_config(config_path);
    c.mode = parse_run_mode(mode);
    if (!out_dir.empty()) c.out = out_dir;
    if (*seed_opt) c.seed = seed;
    // Re-validate mode-dependent constraints.
    c = parse_config(to_config_text(c));
    report_dir = c.out;
    ensure_directory(c.out);
    write_text(c.out + "/config.txt", to_config_text(c));

    PerimeterFunctional P(c.grid(), c.perimeter);
    report["perimeter"] = perimeter_kind_name(P.kind());
    report["scale"] = P.scale();
    json result;
    switch (c.mode) {
      case RunMode::flow: result = run_flow_mode(c, P, ck); break;
      case RunMode::ladder: result = run_ladder_mode(c, P, ck); break;
      case RunMode::probe: result = run_probe_mode(c, P, ck); break;
      case RunMode::validate: result = run_validate_mode(c, P, ck); break;
      case RunMode::oracle: result = run_oracle_mode(c, P, ck); break;
    }
    report["result"] = result;
    report["checks"] = ck.list;
    report["status"] = ck.ok ? "ok" : "failed";
    if (!ck.ok) {
      status = static_cast<int>(ErrorCode::check_failed);
      json failed = json::array();
      for (const auto& x : ck.list)
        if (!x["passed"].get<bool>()) failed.push_back(x["name"]);
      report["error"] = {{"code", status}, {"name", error_code_name(ErrorCode::check_failed)},
                         {"message", "violated: " + failed.dump()}};
    }
  } catch (const Error& e) {
    status = static_cast<int>(e.code());
    report["status"] = "failed";
    report["checks"] = ck.list;
    report["error"] = {{"code", status}, {"name", error_code_name(e.code())}, {"message", e.what()}};
    std::fprintf(stderr, "error (%s): %s\n", error_code_name(e.code()), e.what());
  } catch (const std::exception& e) {
    status = 1;
    report["status"] = "failed";
    report["error"] = {{"code", 1}, {"name", "internal"}, {"message", e.what()}};
    std::fprintf(stderr, "internal error: %s\n", e.what());
  }
  const std::string text = report.dump(2) + "\n";
  if (!report_dir.empty()) {
    try {
      ensure_directory(report_dir);
      write_text(report_dir + "/report.json", text);
    } catch (const Error&) {
      std::cout << text;
    }
  } else {
    std::cout << text;
  }
  return status;
}
