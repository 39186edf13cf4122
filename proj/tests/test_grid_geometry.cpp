#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nlflow/distance.hpp"
#include "nlflow/grid.hpp"
#include "nlflow/initial.hpp"
#include "nlflow/perimeters.hpp"
#include "oracles.hpp"

using namespace nlflow;

namespace {

SlabSet random_monotone(const TorusGrid& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> lv(0, g.n_levels());
  std::vector<int> c(g.n_columns());
  for (auto& x : c) x = lv(rng);
  return SlabSet::from_counts(g, c);
}

HeightField sinusoid(const TorusGrid& g, double A, double offset = 0.0) {
  InitialParams p;
  p.kind = InitialKind::sinusoid;
  p.amplitude = A;
  p.L = 2.0 * std::numbers::pi * A + 1e-9 + 1.0;
  p.offset = offset;
  return generate_initial(g, p);
}

}  // namespace

TEST_CASE("periodic norm") {
  std::array<double, 2> z{0.0, 0.0}, a{0.75, 0.0}, b{0.0, 2.0}, c{0.25, 0.3};
  CHECK(periodic_norm(z) == 0.0);
  CHECK(periodic_norm(a) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(periodic_norm(b) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(periodic_norm(c) == doctest::Approx(std::sqrt(0.09 + 0.0625)).epsilon(1e-15));
  CHECK(periodic_norm(c, NormConvention::printed) == doctest::Approx(std::sqrt(0.09 + 0.25)).epsilon(1e-15));
}

TEST_CASE("grid and height field invariants") {
  CHECK_THROWS_AS(TorusGrid(2, 1, 4, 1.0), Error);
  CHECK_THROWS_AS(TorusGrid(2, 4, 1, 1.0), Error);
  CHECK_THROWS_AS(TorusGrid(2, 4, 4, 0.0), Error);
  CHECK_THROWS_AS(TorusGrid(4, 4, 4, 1.0), Error);
  TorusGrid g(2, 4, 8, 1.0);
  CHECK_THROWS_AS(HeightField(g, {0.0, 0.0, 1.5, 0.0}, 10.0), Error);
  // Adjacent columns 0.25 apart: slope 4 > L = 1.
  CHECK_THROWS_AS(HeightField(g, {0.0, 1.0, 0.0, 0.0}, 1.0), Error);
  CHECK_NOTHROW(HeightField(g, {0.0, 0.25, 0.0, 0.0}, 1.0));
}

TEST_CASE("build_slab_set") {
  TorusGrid g(2, 8, 4, 1.0);
  auto flat = build_slab_set(HeightField(g, std::vector<double>(8, 0.0), 0.0));
  for (int c = 0; c < 8; ++c) CHECK(flat.count(c) == 2);

  auto full = build_slab_set(HeightField(g, std::vector<double>(8, 1.0 - g.dz() / 4), 0.0));
  for (int c = 0; c < 8; ++c) CHECK(full.count(c) == 4);

  TorusGrid g2(2, 8, 16, 1.0);
  HeightField f = sinusoid(g2, 0.2);
  auto s = build_slab_set(f);
  for (int c = 0; c < 8; ++c)
    for (int k = 0; k < 16; ++k) CHECK(s.occupied(c, k) == (g2.level_center(k) <= f[c]));
}

TEST_CASE("height_of") {
  TorusGrid g(2, 4, 6, 1.0);
  auto h = height_of(SlabSet::halfspace(g, 4));
  for (double v : h.values()) CHECK(v == doctest::Approx(g.level_top(4)));

  HeightField f = sinusoid(TorusGrid(2, 16, 32, 1.0), 0.3);
  auto s = build_slab_set(f);
  auto back = height_of(s);
  CHECK(build_slab_set(back) == s);
  for (int c = 0; c < 16; ++c) {
    // Occupancy is decided at cell centers.
    CHECK(std::abs(back[c] - f[c]) <= 0.5 * s.grid().dz() + 1e-12);
  }

  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    auto r = random_monotone(g, rng);
    auto hf = height_of(r);
    for (int c = 0; c < 4; ++c) {
      int top = 0;
      for (int k = 0; k < 6; ++k)
        if (r.occupied(c, k)) top = k + 1;
      CHECK(hf[c] == doctest::Approx(-1.0 + top * g.dz()));
    }
  }
}

TEST_CASE("signed distance on a flat interface") {
  TorusGrid g(2, 4, 10, 1.0);
  auto sd = signed_distance(SlabSet::halfspace(g, 5));
  // Level 6 has center 0.3, level 2 has center -0.5.
  CHECK(sd.values[g.cell(1, 6)] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(sd.values[g.cell(2, 2)] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("signed distance matches brute-force face distances") {
  TorusGrid g(2, 8, 16, 1.0);
  std::vector<int> bump(8, 8);
  bump[3] = 12;
  auto s = SlabSet::from_counts(g, bump);
  auto ref = oracle::signed_distance_brute(s);
  auto sd = signed_distance(s);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(sd.values[i] == doctest::Approx(ref[i]).epsilon(1e-12));

  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    std::vector<int> c(8);
    for (auto& x : c) x = std::uniform_int_distribution<int>(1, 15)(rng);
    auto r = SlabSet::from_counts(g, c);
    auto o = oracle::signed_distance_brute(r);
    auto p = signed_distance(r);
    auto q = serial::signed_distance(CellSet::of(r));
    for (std::size_t i = 0; i < o.size(); ++i) {
      CHECK(p.values[i] == doctest::Approx(o[i]).epsilon(1e-12));
      CHECK(q.values[i] == p.values[i]);
    }
  }
}

TEST_CASE("signed distance is antisymmetric under complement") {
  TorusGrid g(2, 16, 24, 1.0);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    auto s = build_slab_set(random_lipschitz_field(g, 0.3, 2.0, rng()));
    auto a = signed_distance(s);
    auto b = signed_distance(CellSet::of(s).complement());
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] == doctest::Approx(-a.values[i]));
  }
}

TEST_CASE("signed distance needs a boundary") {
  TorusGrid g(2, 4, 6, 1.0);
  CellSet empty{g, std::vector<std::uint8_t>(g.n_cells(), 0), false, false};
  try {
    signed_distance(empty);
    FAIL("expected no_boundary");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_boundary);
  }
}

TEST_CASE("fat neighborhood") {
  TorusGrid g(2, 8, 16, 1.0);  // dz = 0.125
  auto h = SlabSet::halfspace(g, 8);
  auto m = fat_neighborhood(h, 0.25);
  for (int c = 0; c < 8; ++c)
    for (int k = 0; k < 16; ++k) CHECK(bool(m.mask[g.cell(c, k)]) == (std::abs(g.level_center(k)) <= 0.25));
  CHECK(m.volume() == doctest::Approx(0.5));

  auto thin = fat_neighborhood(h, 0.05);
  for (int c = 0; c < 8; ++c)
    for (int k = 0; k < 16; ++k)
      if (thin.mask[g.cell(c, k)]) CHECK((k == 7 || k == 8));

  TorusGrid g2(2, 32, 64, 1.0);
  auto s = build_slab_set(sinusoid(g2, 0.2));
  auto ref = oracle::signed_distance_brute(s);
  auto fm = fat_neighborhood(s, 0.1);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(bool(fm.mask[i]) == (std::abs(ref[i]) <= 0.1));
}

TEST_CASE("fat neighborhood volume bound for Lipschitz graphs") {
  TorusGrid g(2, 64, 128, 1.0);
  const double L = 2.0;
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    auto s = build_slab_set(random_lipschitz_field(g, 0.4, L, rng()));
    for (double rho : {0.05, 0.1, 0.2}) {
      double v = fat_neighborhood(s, rho).volume();
      CHECK(v <= 2.0 * rho * std::sqrt(1.0 + L * L) + 2.0 * g.d() * g.dz());
    }
  }
}

TEST_CASE("symmetric difference volume") {
  TorusGrid g(2, 4, 6, 1.0);
  auto h0 = SlabSet::halfspace(g, 3), h1 = SlabSet::halfspace(g, 4);
  CHECK(symmetric_difference_volume(h0, h0) == 0.0);
  CHECK(symmetric_difference_volume(h0, h1) == doctest::Approx(g.dz()));

  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    auto a = random_monotone(g, rng), b = random_monotone(g, rng), c = random_monotone(g, rng);
    int diff = 0;
    for (int col = 0; col < 4; ++col)
      for (int k = 0; k < 6; ++k) diff += a.occupied(col, k) != b.occupied(col, k);
    CHECK(symmetric_difference_volume(a, b) == doctest::Approx(diff * g.cell_volume()));
    CHECK(symmetric_difference_volume(a, b) == symmetric_difference_volume(b, a));
    CHECK(symmetric_difference_volume(a, c) <=
          symmetric_difference_volume(a, b) + symmetric_difference_volume(b, c) + 1e-15);
  }
  CHECK_THROWS_AS(symmetric_difference_volume(h0, SlabSet::halfspace(TorusGrid(2, 4, 8, 1.0), 3)), Error);
}

TEST_CASE("oscillation and vertical scaling") {
  TorusGrid g(2, 512, 16, 1.0);
  CHECK(oscillation(HeightField(g, std::vector<double>(512, 0.3), 0.0)) == 0.0);
  auto f = sinusoid(g, 0.2);
  CHECK(oscillation(f) == doctest::Approx(0.4).epsilon(1e-3));

  const double L = 1.6;
  InitialParams p;
  p.kind = InitialKind::sawtooth;
  p.amplitude = L / 4.0;
  p.L = L;
  auto saw = generate_initial(g, p);
  CHECK(oscillation(saw) == doctest::Approx(L / 2.0).epsilon(2.0 * L * g.dx()));

  auto c = vertical_scale(HeightField(g, std::vector<double>(512, 0.5), 0.0), 0.1);
  for (double v : c.values()) CHECK(v == doctest::Approx(0.45));
  auto fs = vertical_scale(f, 0.25);
  CHECK(oscillation(fs) == doctest::Approx(0.75 * oscillation(f)));
  CHECK(fs.L() == doctest::Approx(0.75 * f.L()));
  auto id = vertical_scale(f, 1e-15);
  for (int i = 0; i < 512; ++i) CHECK(id[i] == doctest::Approx(f[i]));
}

TEST_CASE("lipschitz constant") {
  TorusGrid g(2, 8, 16, 1.0);
  CHECK(lipschitz_constant(HeightField(g, std::vector<double>(8, 0.1), 0.0)) == 0.0);
  TorusGrid two(2, 2, 4, 1.0);
  CHECK(lipschitz_constant(two, std::vector<double>{0.0, 0.3}) == doctest::Approx(0.6));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(8);
    for (auto& x : v) x = u(rng);
    CHECK(lipschitz_constant(g, v) == doctest::Approx(oracle::lipschitz_all_pairs(g, v)).epsilon(1e-14));
  }

  TorusGrid g3(3, 12, 16, 1.0);
  for (int t = 0; t < 5; ++t) {
    auto f = random_lipschitz_field(g3, 0.3, 1.5, rng());
    std::vector<double> v = f.values();
    double all = lipschitz_constant(g3, v, LipschitzMode::all_pairs);
    CHECK(all == doctest::Approx(oracle::lipschitz_all_pairs(g3, v)).epsilon(1e-14));
    CHECK(lipschitz_constant(g3, v, LipschitzMode::ring) <= all + 1e-15);
  }
}

TEST_CASE("translate_set") {
  TorusGrid g(2, 8, 16, 1.0);
  std::mt19937_64 rng(9);
  auto s = build_slab_set(random_lipschitz_field(g, 0.3, 2.0, 4));
  CHECK(translate_set(s, CellOffset{}) == s);
  std::array<double, 2> period{1.0, 0.0};
  CHECK(translate_set(s, period) == s);
  CHECK(translate_set(SlabSet::halfspace(g, 8), CellOffset{{0, 0}, 1}) == SlabSet::halfspace(g, 9));
  for (int t = 0; t < 20; ++t) {
    CellOffset o{{std::uniform_int_distribution<int>(-10, 10)(rng), 0}, std::uniform_int_distribution<int>(-2, 2)(rng)};
    auto r = translate_set(s, o);
    CHECK(r.cell_count() == s.cell_count() + static_cast<long>(o.level) * g.n_columns());
    if (o.level == 0) CHECK(r.cell_count() == s.cell_count());
  }
  CHECK_THROWS_AS(translate_set(SlabSet::halfspace(g, 15), CellOffset{{0, 0}, 3}), Error);
  std::array<double, 2> off_grid{0.3 * g.dx(), 0.0};
  CHECK_THROWS_AS(translate_set(s, off_grid), Error);
}

TEST_CASE("union and intersection are pointwise max and min") {
  TorusGrid g(2, 4, 6, 1.0);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    auto a = random_monotone(g, rng), b = random_monotone(g, rng);
    auto u = set_union(a, b), i = set_intersection(a, b);
    for (int c = 0; c < 4; ++c) {
      CHECK(u.count(c) == std::max(a.count(c), b.count(c)));
      CHECK(i.count(c) == std::min(a.count(c), b.count(c)));
    }
    CHECK(is_subset(i, a));
    CHECK(is_subset(a, u));
  }
}
