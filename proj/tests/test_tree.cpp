#include <doctest.h>

#include <cmath>

#include "dyadlab/rng.hpp"
#include "dyadlab/tree.hpp"

using namespace dyadlab;

TEST_CASE("lebesgue preset: n=1 L=1 gives two half leaves") {
  auto t = build_tree(1, 1, MeasurePreset{});
  CHECK(t.leaf_count() == 2);
  CHECK(t.leaf_mass(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.leaf_mass(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.total_mass() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("lebesgue preset: n=2 L=1 gives four quarter leaves") {
  auto t = build_tree(2, 1, MeasurePreset{});
  CHECK(t.leaf_count() == 4);
  for (std::uint64_t i = 0; i < 4; ++i) CHECK(t.leaf_mass(i) == doctest::Approx(0.25));
}

TEST_CASE("exponential-imbalanced: geometric leaf masses, root is the geometric sum") {
  MeasurePreset p;
  p.kind = PresetKind::exponential_imbalanced;
  p.ratio = 4.0;
  auto t = build_tree(1, 2, p);
  // lexicographic leaf order coincides with path order for n=1
  CHECK(t.leaf_mass(0) == doctest::Approx(1.0));
  CHECK(t.leaf_mass(1) == doctest::Approx(4.0));
  CHECK(t.leaf_mass(2) == doctest::Approx(16.0));
  CHECK(t.leaf_mass(3) == doctest::Approx(64.0));
  CHECK(t.total_mass() == doctest::Approx(85.0));
}

TEST_CASE("explicit preset rejects nonpositive masses naming the cube") {
  MeasurePreset p;
  p.kind = PresetKind::explicit_masses;
  p.masses = {1.0, -2.0};
  CHECK_THROWS_WITH_AS(build_tree(1, 1, p), doctest::Contains("index=1"), std::invalid_argument);
}

TEST_CASE("additivity: mu(Q) equals the exact child sum in construction order") {
  MeasurePreset p;
  p.kind = PresetKind::random_balanced;
  p.seed = 42;
  auto t = build_tree(1, 6, p);
  for (int lev = 0; lev < t.depth(); ++lev) {
    for (std::uint64_t i = 0; i < t.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      double s = 0.0;
      for (const auto& c : t.children(q)) s += t.mu(c);
      CHECK(t.mu(q) == s);  // bitwise: same aggregation order
    }
  }
}

TEST_CASE("preset determinism: same seed, same masses") {
  MeasurePreset p;
  p.kind = PresetKind::random_balanced;
  p.seed = 7;
  auto a = build_tree(1, 5, p);
  auto b = build_tree(1, 5, p);
  for (std::uint64_t i = 0; i < a.leaf_count(); ++i) CHECK(a.leaf_mass(i) == b.leaf_mass(i));
}

TEST_CASE("dyadic distance: identity, parent, siblings") {
  auto t = build_tree(1, 3, MeasurePreset{});
  const CubeId q{2, 1};
  CHECK(t.dyadic_distance(q, q) == 0);
  CHECK(t.dyadic_distance(q, t.parent(q)) == 1);
  CHECK(t.dyadic_distance(CubeId{2, 0}, CubeId{2, 1}) == 2);
  CHECK(t.dyadic_distance(CubeId{3, 0}, CubeId{3, 7}) == 6);
}

TEST_CASE("dyadic distance: chain triangle inequality through common ancestors") {
  auto t = build_tree(2, 3, MeasurePreset{});
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int lj = rng.index(4), lk = rng.index(4);
    const CubeId j{lj, rng.below(t.cubes_at(lj))};
    const CubeId k{lk, rng.below(t.cubes_at(lk))};
    const int lp = std::min(lj, lk) > 0 ? rng.index(std::min(lj, lk)) : 0;
    // P = common ancestor of both at level lp along j's chain, if it contains k
    const CubeId p = t.ancestor(j, lj - lp);
    if (!t.contains(p, k)) continue;
    CHECK(t.dyadic_distance(j, k) <= t.dyadic_distance(j, p) + t.dyadic_distance(p, k));
  }
}

TEST_CASE("descendants and ancestors") {
  auto t = build_tree(1, 3, MeasurePreset{});
  CHECK(t.descendants_at(t.root(), 0).size() == 1);
  CHECK(t.descendants_at(t.root(), 2).size() == 4);
  CHECK(t.ancestor(CubeId{3, 5}, 3) == t.root());
  CHECK(t.ancestor(CubeId{3, 5}, 0) == CubeId{3, 5});
  CHECK_THROWS_AS(t.descendants_at(CubeId{3, 0}, 1), std::out_of_range);
  CHECK_THROWS_AS(t.ancestor(CubeId{1, 0}, 2), std::out_of_range);
}

TEST_CASE("lexicographic/path leaf index conversion round-trips") {
  auto t = build_tree(2, 3, MeasurePreset{});
  for (std::uint64_t lex = 0; lex < t.leaf_count(); ++lex) {
    CHECK(t.leaf_path_to_lex(t.leaf_lex_to_path(lex)) == lex);
  }
  // n=2, L=1: path digit o has bit0 = coordinate-0 step, so path 1 -> coords (1,0) -> lex 2
  auto s = build_tree(2, 1, MeasurePreset{});
  CHECK(s.leaf_path_to_lex(0) == 0);
  CHECK(s.leaf_path_to_lex(1) == 2);
  CHECK(s.leaf_path_to_lex(2) == 1);
  CHECK(s.leaf_path_to_lex(3) == 3);
}

TEST_CASE("random-balanced generator keeps the normalized m-ratio within B") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 99ull}) {
    MeasurePreset p;
    p.kind = PresetKind::random_balanced;
    p.balance_bound = 2.0;
    p.seed = seed;
    auto t = build_tree(1, 6, p);
    auto m = [&](const CubeId& q) {
      const double a = t.mu(t.child(q, 0)), b = t.mu(t.child(q, 1));
      return a * b / t.mu(q);
    };
    for (int lev = 1; lev < t.depth(); ++lev) {
      for (std::uint64_t i = 0; i < t.cubes_at(lev); ++i) {
        const CubeId q{lev, i};
        const double rho = 2.0 * m(q) / m(t.parent(q));
        CHECK(rho >= 0.5 * (1 - 1e-9));
        CHECK(rho <= 2.0 * (1 + 1e-9));
      }
    }
  }
}
