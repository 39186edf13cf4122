#pragma once

#include <string>
#include <vector>

#include "nlflow/flow_driver.hpp"
#include "nlflow/grid.hpp"

namespace nlflow {

// Height field text: header `d n_cols n_levels R L`, then one height per
// line in column order, 17 significant digits.
std::string format_height_field(const HeightField& f);
HeightField parse_height_field(const std::string& text);
void write_height_field(const HeightField& f, const std::string& path);
HeightField read_height_field(const std::string& path);

// Numeric CSV: one header line, values with 12 significant digits.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};
std::string format_csv(const CsvTable& t);
CsvTable parse_csv(const std::string& text);
void write_csv(const CsvTable& t, const std::string& path);
CsvTable read_csv(const std::string& path);

// diagnostics.csv: time, perimeter, dissipation (summed since the previous
// snapshot), oscillation, symdiff_to_initial, lipschitz_constant.
CsvTable trace_diagnostics(const FlowTrace& tr);
// steps.csv: per-step dissipation and exact solver bookkeeping in quanta.
CsvTable trace_steps(const FlowTrace& tr);
// Writes diagnostics.csv, steps.csv and snapshots/snapshot_NNNNN.txt into
// `dir` (created if needed). Returns the written paths.
std::vector<std::string> write_trace(const FlowTrace& tr, const std::string& dir);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void ensure_directory(const std::string& dir);

}  // namespace nlflow
