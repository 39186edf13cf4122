#include "nlflow/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nlflow {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double parse_number(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::io, where + ": bad number '" + s + "'");
  }
  if (used != s.size()) fail(ErrorCode::io, where + ": bad number '" + s + "'");
  return v;
}

}  // namespace

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::io, "failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create directory '" + dir + "': " + ec.message());
}

std::string format_height_field(const HeightField& f) {
  const auto& g = f.grid();
  std::ostringstream os;
  os << g.d() << ' ' << g.n_cols() << ' ' << g.n_levels() << ' ' << fmt("%.17g", g.R()) << ' '
     << fmt("%.17g", f.L()) << '\n';
  for (double v : f.values()) os << fmt("%.17g", v) << '\n';
  return os.str();
}

HeightField parse_height_field(const std::string& text) {
  std::istringstream in(text);
  int d = 0, nc = 0, nl = 0;
  std::string sR, sL;
  if (!(in >> d >> nc >> nl >> sR >> sL)) fail(ErrorCode::io, "height field: bad header");
  TorusGrid g(d, nc, nl, parse_number(sR, "height field R"));
  const double L = parse_number(sL, "height field L");
  std::vector<double> v;
  std::string tok;
  while (in >> tok) v.push_back(parse_number(tok, "height field value"));
  if (static_cast<int>(v.size()) != g.n_columns())
    fail(ErrorCode::io, "height field: expected " + std::to_string(g.n_columns()) + " values, got " +
                            std::to_string(v.size()));
  return HeightField(g, std::move(v), L);
}

void write_height_field(const HeightField& f, const std::string& path) {
  write_text(path, format_height_field(f));
}

HeightField read_height_field(const std::string& path) { return parse_height_field(read_text(path)); }

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  fail(ErrorCode::io, "csv: no column '" + name + "'");
}

std::string format_csv(const CsvTable& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& r : t.rows) {
    require(r.size() == t.header.size(), "csv: row width differs from header");
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt("%.12g", r[i]);
    os << '\n';
  }
  return os.str();
}

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, "csv: empty input");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_number(cell, "csv line " + std::to_string(lineno)));
    if (row.size() != t.header.size()) fail(ErrorCode::io, "csv line " + std::to_string(lineno) + ": wrong width");
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const CsvTable& t, const std::string& path) { write_text(path, format_csv(t)); }

CsvTable read_csv(const std::string& path) { return parse_csv(read_text(path)); }

CsvTable trace_diagnostics(const FlowTrace& tr) {
  CsvTable t;
  t.header = {"time", "perimeter", "dissipation", "oscillation", "symdiff_to_initial", "lipschitz_constant"};
  std::size_t step = 0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const auto upto = static_cast<std::size_t>(std::llround(tr.times[i] / (tr.h > 0 ? tr.h : 1.0)));
    double diss = 0.0;
    for (; step < upto && step < tr.dissipations.size(); ++step) diss += tr.dissipations[step];
    t.rows.push_back({tr.times[i], tr.perimeters[i], diss, tr.oscillations[i], tr.symdiff_to_initial[i],
                      tr.lipschitz[i]});
  }
  return t;
}

CsvTable trace_steps(const FlowTrace& tr) {
  CsvTable t;
  t.header = {"step", "time", "dissipation", "dissipation_quanta", "solver_perimeter_quanta"};
  for (std::size_t k = 0; k < tr.dissipations.size(); ++k) {
    t.rows.push_back({static_cast<double>(k + 1), (k + 1) * tr.h, tr.dissipations[k],
                      static_cast<double>(tr.dissipations_int[k]),
                      static_cast<double>(tr.solver_perimeters_int[k + 1])});
  }
  return t;
}

std::vector<std::string> write_trace(const FlowTrace& tr, const std::string& dir) {
  ensure_directory(dir);
  ensure_directory(dir + "/snapshots");
  std::vector<std::string> paths;
  paths.push_back(dir + "/diagnostics.csv");
  write_csv(trace_diagnostics(tr), paths.back());
  paths.push_back(dir + "/steps.csv");
  write_csv(trace_steps(tr), paths.back());
  for (std::size_t i = 0; i < tr.heights.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "/snapshots/snapshot_%05zu.txt", i);
    paths.push_back(dir + name);
    write_height_field(tr.heights[i], paths.back());
  }
  return paths;
}

}  // namespace nlflow
