#include "nlflow/flow_driver.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace nlflow {

namespace {

long long steps_for(double T, double h, const char* what) {
  require(h > 0.0 && T >= 0.0, std::string(what) + ": need h > 0 and T >= 0");
  const double r = T / h;
  const long long k = std::llround(r);
  require(std::abs(r - static_cast<double>(k)) <= 1e-9 * std::max(1.0, r),
          std::string(what) + ": T must be a multiple of h");
  return k;
}

void check_margin(const SlabSet& s, int cells, double t) {
  const int n = s.grid().n_levels();
  if (s.min_count() < cells || s.max_count() > n - cells) {
    std::ostringstream os;
    os << "flow: boundary within " << cells << " cells of the slab edge at t = " << t
       << " (counts in [" << s.min_count() << ", " << s.max_count() << "] of " << n << ")";
    fail(ErrorCode::slab_margin, os.str());
  }
}

void record(FlowTrace& tr, const FlowConfig& cfg, const SlabSet& s, const SlabSet& initial,
            double t) {
  HeightField f = height_of(s);
  tr.times.push_back(t);
  tr.perimeters.push_back(cfg.P.evaluate(s));
  tr.solver_perimeters.push_back(cfg.P.solver_energy(s));
  tr.symdiff_to_initial.push_back(symmetric_difference_volume(s, initial));
  tr.oscillations.push_back(oscillation(f));
  tr.lipschitz.push_back(f.L());
  tr.heights.push_back(std::move(f));
  tr.sets.push_back(s);
}

std::int64_t solver_perimeter_int(const StepProblem& prob, const SlabSet& s) {
  // Energy without the unary part.
  const int n = s.grid().n_levels();
  std::int64_t u = 0;
  for (int c = 0; c < s.grid().n_columns(); ++c)
    u += prob.unary_prefix[static_cast<std::size_t>(c) * (n + 1) + s.count(c)];
  return prob.energy_int(s.counts()) - u;
}

std::vector<int> counts_below(const TorusGrid& g, const std::vector<double>& v) {
  std::vector<int> c(g.n_columns(), 0);
  for (int col = 0; col < g.n_columns(); ++col) {
    require(v[col] >= -g.R() && v[col] <= g.R(), "probe: height outside the slab");
    int k = 0;
    while (k < g.n_levels() && g.level_center(k) <= v[col]) ++k;
    c[col] = k;
  }
  return c;
}

}  // namespace

FlowConfig make_flow_config(const HeightField& E0, double h, double T,
                            const PerimeterFunctional& P, int record_every) {
  FlowConfig cfg{E0, h, T, P, 1, {}};
  cfg.record_every = record_every;
  return cfg;
}

FlowTrace run_flow_from(const FlowConfig& cfg, const SlabSet& start, long long steps) {
  require_same_grid(start.grid(), cfg.P.grid());
  require(cfg.record_every >= 1, "flow: record_every must be >= 1");
  require(steps <= cfg.max_steps, "flow: step budget exceeded", ErrorCode::too_large);
  StepOptions opt = cfg.step;
  if (opt.quantum <= 0.0) opt.quantum = 1e-12 * cfg.P.scale();

  FlowTrace tr;
  tr.h = cfg.h;
  tr.quantum = opt.quantum;
  SlabSet E = start;
  record(tr, cfg, E, start, 0.0);
  bool have_int = false;
  for (long long k = 1; k <= steps; ++k) {
    check_margin(E, cfg.abort_cells, (k - 1) * cfg.h);
    StepProblem prob = assemble_step_energy(E, cfg.h, cfg.P, opt);
    if (!have_int) {
      tr.solver_perimeters_int.push_back(solver_perimeter_int(prob, E));
      have_int = true;
    }
    StepResult r = solve_step(prob, opt);
    if (!r.stats.certified) tr.certified = false;
    tr.solver_seconds += r.stats.wall_seconds;
    tr.augmentations += r.stats.augmentations;
    tr.max_arcs = std::max(tr.max_arcs, r.stats.arcs);
    tr.full_slab_fallbacks += r.stats.full_slab_fallback;
    SlabSet next = cfg.branch == StepBranch::minimal ? r.minimal : r.maximal;
    tr.dissipations.push_back(prob.dissipation(next));
    tr.dissipations_int.push_back(prob.dissipation_int(next));
    tr.solver_perimeters_int.push_back(solver_perimeter_int(prob, next));
    E = std::move(next);
    ++tr.steps;
    if (k % cfg.record_every == 0 || k == steps) record(tr, cfg, E, start, k * cfg.h);
  }
  if (steps > 0) check_margin(E, cfg.abort_cells, steps * cfg.h);
  return tr;
}

FlowTrace run_flow(const FlowConfig& cfg) {
  const TorusGrid& g = cfg.E0.grid();
  require(cfg.h <= cfg.T, "flow: need 0 < h <= T");
  const long long steps = steps_for(cfg.T, cfg.h, "flow");
  auto [lo, hi] = std::minmax_element(cfg.E0.values().begin(), cfg.E0.values().end());
  const double margin = cfg.margin_fraction * g.R();
  if (*lo < -g.R() + margin || *hi > g.R() - margin) {
    std::ostringstream os;
    os << "flow: initial graph must stay " << margin << " away from the slab edges";
    fail(ErrorCode::slab_margin, os.str());
  }
  return run_flow_from(cfg, build_slab_set(cfg.E0), steps);
}

HolderReport holder_diagnostic(const FlowTrace& tr, double T) {
  const int m = static_cast<int>(tr.times.size());
  require(m >= 10, "holder: need at least 10 snapshots");
  HolderReport rep;
  rep.snapshots = m;
  if (T <= 0.0) T = tr.times.back() - tr.times.front();
  const double sh = std::sqrt(tr.h);
  std::vector<std::pair<double, double>> lag_sd;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      double lag = tr.times[j] - tr.times[i];
      double sd = symmetric_difference_volume(tr.sets[i], tr.sets[j]);
      rep.C_emp = std::max(rep.C_emp, sd / std::max(sh, std::sqrt(lag)));
      lag_sd.emplace_back(lag, sd);
    }
  }
  std::sort(lag_sd.begin(), lag_sd.end());
  double run = 0.0;
  for (std::size_t i = 0; i < lag_sd.size(); ++i) {
    run = std::max(run, lag_sd[i].second);
    bool last = i + 1 == lag_sd.size() || lag_sd[i + 1].first - lag_sd[i].first > 1e-9 * tr.h;
    if (last) {
      rep.lags.push_back(lag_sd[i].first);
      rep.envelope.push_back(run);
    }
  }
  rep.lag_lo = 4.0 * tr.h;
  rep.lag_hi = 0.5 * T;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int np = 0;
  for (std::size_t i = 0; i < rep.lags.size(); ++i) {
    double l = rep.lags[i];
    if (l < rep.lag_lo * (1 - 1e-9) || l > rep.lag_hi * (1 + 1e-9) || rep.envelope[i] <= 0.0) continue;
    double x = std::log(l), y = std::log(rep.envelope[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++np;
  }
  rep.fit_points = np;
  if (np >= 2 && np * sxx - sx * sx > 0.0) rep.slope = (np * sxy - sx * sy) / (np * sxx - sx * sx);
  return rep;
}

namespace {

// Runs independent flows; each task owns its result slot.
template <class F>
void run_concurrently(int n, F&& task) {
  std::vector<std::exception_ptr> errs(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      task(i);
    } catch (...) {
      errs[i] = std::current_exception();
    }
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace

LadderReport refinement_compare(const HeightField& E0, const std::vector<double>& hs, double T,
                                const PerimeterFunctional& P, const StepOptions& step) {
  require(hs.size() >= 3, "ladder: need at least three time steps");
  for (std::size_t i = 0; i + 1 < hs.size(); ++i)
    require(hs[i + 1] < hs[i], "ladder: time steps must be descending");
  for (double h : hs) steps_for(T, h, "ladder");
  LadderReport rep;
  rep.hs = hs;
  rep.traces.resize(hs.size());
  run_concurrently(static_cast<int>(hs.size()), [&](int i) {
    FlowConfig cfg = make_flow_config(E0, hs[i], T, P, 1);
    cfg.step = step;
    rep.traces[i] = run_flow(cfg);
  });
  // Shared times: multiples of the coarsest step.
  const long long shared = steps_for(T, hs[0], "ladder");
  for (std::size_t i = 0; i + 1 < hs.size(); ++i) {
    double dev = 0.0;
    for (long long j = 0; j <= shared; ++j) {
      const double t = j * hs[0];
      const auto& a = rep.traces[i];
      const auto& b = rep.traces[i + 1];
      const auto ka = static_cast<std::size_t>(std::llround(t / hs[i]));
      const auto kb = static_cast<std::size_t>(std::llround(t / hs[i + 1]));
      dev = std::max(dev, symmetric_difference_volume(a.sets[ka], b.sets[kb]));
    }
    rep.rung_deviation.push_back(dev);
  }
  for (std::size_t i = 0; i + 1 < rep.rung_deviation.size(); ++i)
    if (rep.rung_deviation[i + 1] > rep.rung_deviation[i]) rep.monotone = false;
  return rep;
}

SemigroupReport semigroup_check(const HeightField& E0, double h, double t1, double t2,
                                const PerimeterFunctional& P, const StepOptions& step) {
  const long long k1 = steps_for(t1, h, "semigroup");
  const long long k2 = steps_for(t2, h, "semigroup");
  FlowConfig cfg = make_flow_config(E0, h, t1 + t2, P, 1);
  cfg.step = step;
  SlabSet start = build_slab_set(E0);
  FlowTrace whole = run_flow_from(cfg, start, k1 + k2);
  FlowTrace first = run_flow_from(cfg, start, k1);
  FlowTrace second = run_flow_from(cfg, first.sets.back(), k2);
  SemigroupReport rep;
  rep.equal = whole.sets.back() == second.sets.back();
  rep.symdiff = symmetric_difference_volume(whole.sets.back(), second.sets.back());
  return rep;
}

std::vector<double> semigroup_ladder(const HeightField& E0, const std::vector<double>& hs,
                                     double t1, double t2, const PerimeterFunctional& P,
                                     const StepOptions& step) {
  require(hs.size() >= 2, "semigroup ladder: need at least two time steps");
  SlabSet start = build_slab_set(E0);
  std::vector<double> dev(hs.size() - 1);
  run_concurrently(static_cast<int>(dev.size()), [&](int i) {
    FlowConfig coarse = make_flow_config(E0, hs[i], t1 + t2, P, 1);
    FlowConfig fine = make_flow_config(E0, hs[i + 1], t1, P, 1);
    coarse.step = step;
    fine.step = step;
    SlabSet direct = run_flow_from(coarse, start, steps_for(t1 + t2, hs[i], "semigroup")).sets.back();
    SlabSet mid = run_flow_from(fine, start, steps_for(t1, hs[i + 1], "semigroup")).sets.back();
    SlabSet composed = run_flow_from(coarse, mid, steps_for(t2, hs[i], "semigroup")).sets.back();
    dev[i] = symmetric_difference_volume(direct, composed);
  });
  return dev;
}

double mean_height(const SlabSet& s) {
  const auto& g = s.grid();
  double sum = 0.0;
  for (int c = 0; c < g.n_columns(); ++c) sum += g.level_top(s.count(c));
  return sum / g.n_columns();
}

ConvergenceReport halfspace_convergence(const FlowTrace& tr, double tol) {
  require(!tr.sets.empty(), "convergence: empty trace");
  ConvergenceReport rep;
  const double slack = tr.sets.front().grid().dz();
  for (std::size_t i = 0; i < tr.sets.size(); ++i) {
    double osc = tr.oscillations[i];
    rep.oscillation.push_back(osc);
    if (!rep.detection_time && osc <= tol) rep.detection_time = tr.times[i];
    if (i > 0) {
      double inc = osc - rep.oscillation[i - 1];
      rep.max_osc_increase = std::max(rep.max_osc_increase, inc);
      if (inc > slack * (1 + 1e-9)) ++rep.osc_increases;
    }
  }
  rep.lambda = mean_height(tr.sets.back());
  return rep;
}

double euclidean_derivative(const HeightField& f) {
  const auto& g = f.grid();
  double sum = 0.0;
  for (int c = 0; c < g.n_columns(); ++c) {
    const double q = gradient_norm_sq(f, c);
    sum += q / std::sqrt(1.0 + q);
  }
  return sum * g.column_area();
}

ProbeReport assumption_H_probe(const PerimeterFunctional& P, const HeightField& f,
                               const std::vector<double>& eps_list, double delta, int dither) {
  require(!eps_list.empty(), "probe: empty eps list");
  require(dither >= 1, "probe: dither must be >= 1");
  const double osc = oscillation(f);
  if (!(osc >= delta) || osc <= 0.0) {
    std::ostringstream os;
    os << "probe: oscillation " << osc << " below delta " << delta;
    fail(ErrorCode::invalid_argument, os.str());
  }
  const TorusGrid& g = f.grid();
  ProbeReport rep;
  rep.dither = P.kind() == PerimeterKind::euclidean ? 1 : dither;
  if (P.kind() == PerimeterKind::euclidean) rep.euclidean_derivative = euclidean_derivative(f);
  rep.rows.resize(eps_list.size());
  run_concurrently(static_cast<int>(eps_list.size()), [&](int i) {
    const double eps = eps_list[i];
    HeightField fe = vertical_scale(f, eps);
    double diff = 0.0;
    if (P.kind() == PerimeterKind::euclidean) {
      diff = eval_euclidean(f) - eval_euclidean(fe);
    } else {
      for (int j = 0; j < dither; ++j) {
        const double lam = (j + 0.5) / dither * g.dz() - 0.5 * g.dz();
        std::vector<double> a = f.values(), b = fe.values();
        for (double& v : a) v += lam;
        for (double& v : b) v += lam;
        diff += P.evaluate(SlabSet::from_counts(g, counts_below(g, a))) -
                P.evaluate(SlabSet::from_counts(g, counts_below(g, b)));
      }
      diff /= dither;
    }
    rep.rows[i] = {eps, diff / eps};
  });
  rep.C_estimate = rep.rows.front().ratio;
  for (const auto& r : rep.rows) rep.C_estimate = std::min(rep.C_estimate, r.ratio);
  return rep;
}

}  // namespace nlflow
