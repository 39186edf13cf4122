#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlflow/flow_driver.hpp"
#include "nlflow/grid.hpp"
#include "nlflow/initial.hpp"
#include "nlflow/perimeters.hpp"

namespace nlflow {

enum class RunMode { flow, ladder, probe, validate, oracle };

RunMode parse_run_mode(const std::string& s);
const char* run_mode_name(RunMode m);

struct RunConfig {
  RunMode mode = RunMode::flow;

  int d = 2;
  int n_cols = 64;
  int n_levels = 128;
  double R = 1.0;

  PerimeterParams perimeter;
  std::string psi_table;  // fractional_aniso direction table

  InitialParams initial;

  double h = 0.01;
  std::vector<double> hs{0.04, 0.02, 0.01};
  double T = 0.1;
  int record_every = 1;
  StepBranch branch = StepBranch::minimal;
  int lovasz_max_iter = 20000;

  std::vector<double> eps{1e-2, 1e-3};
  double delta = 0.05;
  int dither = 1024;

  int pairs = 1000;
  int competitors = 100;
  int oracle_instances = 20;
  double oracle_h = 0.05;

  std::uint64_t seed = 1;
  std::string out = "nlflow_out";

  TorusGrid grid() const { return TorusGrid(d, n_cols, n_levels, R); }
};

// `key = value` lines, `#` starts a comment. Every unknown key, malformed
// value and violated constraint is collected; the thrown Error
// (ErrorCode::config) lists all of them, one per line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Keys accepted by parse_config, in documentation order.
const std::vector<std::string>& config_keys();

// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const RunConfig& c);

}  // namespace nlflow
