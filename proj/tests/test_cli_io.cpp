#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "nlflow/config.hpp"
#include "nlflow/error.hpp"
#include "nlflow/initial.hpp"
#include "nlflow/io.hpp"
#include "nlflow/weights.hpp"
#include "oracles.hpp"

using namespace nlflow;
namespace fs = std::filesystem;

namespace {

const char* kMinimal =
    "# grid\n"
    "n_cols = 16\n"
    "n_levels = 32\n"
    "perimeter = kernel\n"
    "s = 0.5\n"
    "r_cut = 0.15\n"
    "initial = sinusoid\n"
    "amplitude = 0.2\n"
    "h = 0.01\n"
    "T = 0.05\n";

// kMinimal with some keys replaced or added.
std::string with(std::map<std::string, std::string> kv) {
  std::istringstream in(kMinimal);
  std::string line, out;
  while (std::getline(in, line)) {
    auto eq = line.find(" = ");
    if (eq != std::string::npos) {
      auto it = kv.find(line.substr(0, eq));
      if (it != kv.end()) {
        line = it->first + " = " + it->second;
        kv.erase(it);
      }
    }
    out += line + "\n";
  }
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    return e.what();
  }
  return {};
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("nlflow_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& mode, const fs::path& config, const fs::path& out) {
  std::string cmd = std::string(NLFLOW_CLI) + " " + mode + " --config " + config.string() + " --out " +
                    out.string() + " > " + (out / "stdout.txt").string() + " 2>&1";
  fs::create_directories(out);
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "stdout.txt")
      files[fs::relative(e.path(), dir).string()] = read_text(e.path().string());
  return files;
}

nlohmann::json report(const fs::path& out) { return nlohmann::json::parse(read_text((out / "report.json").string())); }

}  // namespace

TEST_CASE("config parsing") {
  auto c = parse_config(kMinimal);
  CHECK(c.n_cols == 16);
  CHECK(c.n_levels == 32);
  CHECK(c.perimeter.kind == PerimeterKind::kernel);
  CHECK(c.perimeter.kernel.r_cut == 0.15);
  CHECK(c.h == 0.01);

  auto bad_s = config_error(with({{"s", "1.5"}}));
  CHECK(bad_s.find("s") != std::string::npos);
  CHECK(bad_s.find("(0,1)") != std::string::npos);
  CHECK(config_error(with({{"foo", "3"}})).find("foo") != std::string::npos);

  // Every offending key is listed.
  auto many = config_error(with({{"foo", "3"}, {"s", "1.5"}, {"h", "-1"}, {"n_cols", "banana"}}));
  for (const char* key : {"foo", "s", "h", "n_cols"}) CHECK(many.find(key) != std::string::npos);

  CHECK_FALSE(config_error("n_cols 16\n").empty());
  CHECK(config_error(std::string(kMinimal) + "s = 0.4\n").find("more than once") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/nlflow.cfg"), Error);
}

TEST_CASE("config text round trip") {
  RunConfig c = parse_config(kMinimal);
  c.mode = RunMode::ladder;
  c.hs = {0.08, 0.04, 0.02, 0.01};
  c.T = 0.16;
  c.perimeter.kind = PerimeterKind::zero_fractional;
  c.perimeter.zero_parts = ZeroParts::long_range;
  c.initial.kind = InitialKind::random_lipschitz;
  c.initial.seed = 987654321;
  c.initial.offset = 0.3 * c.grid().dz();
  c.seed = 42;
  c.eps = {0.1, 0.05};
  const auto text = to_config_text(c);
  const auto back = parse_config(text);
  CHECK(to_config_text(back) == text);
  CHECK(back.hs == c.hs);
  CHECK(back.initial.offset == c.initial.offset);
  CHECK(back.initial.seed == c.initial.seed);
  CHECK(back.perimeter.zero_parts == ZeroParts::long_range);
  for (const auto& k : config_keys()) CHECK(!k.empty());
}

TEST_CASE("height field and CSV round trips") {
  TorusGrid g(2, 16, 32, 1.0);
  auto f = random_lipschitz_field(g, 0.3, 1.5, 9);
  auto back = parse_height_field(format_height_field(f));
  CHECK(back.grid() == g);
  CHECK(back.values() == f.values());
  CHECK(back.L() == f.L());
  CHECK_THROWS_AS(parse_height_field("2 16 32 1 1.5\n0.1\n"), Error);

  CsvTable t{{"time", "perimeter"}, {{0.0, 1.0 / 3.0}, {0.1, 2.0 / 3.0}}};
  auto text = format_csv(t);
  auto parsed = parse_csv(text);
  CHECK(parsed.header == t.header);
  CHECK(format_csv(parsed) == text);
  CHECK(parsed.rows[0][1] == doctest::Approx(1.0 / 3.0).epsilon(1e-11));
  CHECK(parsed.column("perimeter") == 1);
  CHECK_THROWS_AS(parsed.column("missing"), Error);
}

TEST_CASE("initial data generation") {
  TorusGrid g(2, 64, 128, 1.0);
  InitialParams c;
  c.kind = InitialKind::constant;
  c.amplitude = 0.25;
  const auto cf = generate_initial(g, c);
  for (double v : cf.values()) CHECK(v == 0.25);

  InitialParams s;
  s.amplitude = 0.2;
  s.L = 2.0;
  auto f = generate_initial(g, s);
  CHECK(lipschitz_constant(f) <= 2.0 * std::numbers::pi * 0.2 + 1e-9);
  CHECK(oracle::lipschitz_all_pairs(g, f.values()) <= 2.0 * std::numbers::pi * 0.2 + 1e-9);
  s.frequency = 5;
  CHECK_THROWS_AS(generate_initial(g, s), Error);

  InitialParams r;
  r.kind = InitialKind::random_lipschitz;
  r.L = 1.0;
  r.amplitude = 0.3;
  r.seed = 77;
  auto a = generate_initial(g, r), b = generate_initial(g, r);
  CHECK(a.values() == b.values());
  CHECK(oracle::lipschitz_all_pairs(g, a.values()) <= 1.0 + 1e-12);
  double mean = 0.0;
  for (double v : a.values()) mean += v / g.n_columns();
  CHECK(std::abs(mean) <= 1e-12);
  r.seed = 78;
  CHECK(generate_initial(g, r).values() != a.values());

  InitialParams w;
  w.kind = InitialKind::sawtooth;
  w.amplitude = 0.2;
  w.L = 2.0;
  CHECK(oracle::lipschitz_all_pairs(g, generate_initial(g, w).values()) <= 2.0 + 1e-12);
}

TEST_CASE("cli flow on a halfspace") {
  auto dir = scratch_dir("flow");
  auto cfg = dir / "flow.cfg";
  write_text(cfg.string(), with({{"initial", "constant"}, {"amplitude", "0.1"}}));
  auto out = dir / "out";
  REQUIRE(run_cli("flow", cfg, out) == 0);
  auto diag = read_csv((out / "diagnostics.csv").string());
  const auto col = diag.column("perimeter");
  REQUIRE(diag.rows.size() == 6);
  for (const auto& row : diag.rows) CHECK(row[col] == diag.rows[0][col]);
  auto rep = report(out);
  CHECK(rep["status"] == "ok");
  CHECK(rep["mode"] == "flow");

  // Same config and seed, same bytes.
  auto first = read_tree(out);
  REQUIRE(run_cli("flow", cfg, out) == 0);
  CHECK(read_tree(out) == first);

  // Every output parses.
  for (const auto& [name, text] : first) {
    CAPTURE(name);
    const auto path = (out / name).string();
    if (name.ends_with(".csv")) CHECK_NOTHROW(read_csv(path));
    else if (name.ends_with(".json")) CHECK(nlohmann::json::accept(text));
    else if (name == "config.txt") CHECK_NOTHROW(load_config(path));
    else CHECK_NOTHROW(read_height_field(path));
  }
}

TEST_CASE("cli oracle and validate modes") {
  auto dir = scratch_dir("modes");
  auto cfg = dir / "oracle.cfg";
  write_text(cfg.string(),
             "n_cols = 4\nn_levels = 6\nr_cut = 0.7\ninitial = constant\namplitude = 0.0\n"
             "oracle_instances = 20\noracle_h = 0.05\n");
  auto out = dir / "oracle";
  CHECK(run_cli("oracle", cfg, out) == 0);
  auto rep = report(out);
  CHECK(rep["status"] == "ok");
  CHECK(rep["checks"].size() >= 2);

  // Asymmetric weight table: validate must fail and name the invariant.
  TorusGrid g(2, 16, 32, 1.0);
  KernelSpec k;
  k.r_cut = 0.15;
  auto pw = precompute_kernel_weights(k, g);
  pw.signature = "broken";
  pw.w[0] *= 1.5;
  auto table = dir / "broken.txt";
  save_weights(pw, table.string());
  auto vcfg = dir / "validate.cfg";
  write_text(vcfg.string(), with({{"kernel_table", table.string()}, {"pairs", "50"}, {"competitors", "10"}}));
  auto vout = dir / "validate";
  CHECK(run_cli("validate", vcfg, vout) == static_cast<int>(ErrorCode::check_failed));
  auto vrep = report(vout);
  CHECK(vrep["status"] == "failed");
  bool named = false;
  for (const auto& c : vrep["checks"])
    if (c["name"].get<std::string>().find("symmetry") != std::string::npos) named = named || !c["passed"].get<bool>();
  CHECK(named);
  CHECK(read_text((vout / "stdout.txt").string()).find("FAIL") != std::string::npos);

  // Bad configuration: config status, report still written.
  auto bcfg = dir / "bad.cfg";
  write_text(bcfg.string(), with({{"foo", "1"}}));
  auto bout = dir / "bad";
  CHECK(run_cli("flow", bcfg, bout) == static_cast<int>(ErrorCode::config));
  CHECK(report(bout)["error"]["name"].get<std::string>().size() > 0);
}
