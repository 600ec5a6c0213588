#include <doctest.h>

#include <cmath>

#include "dyadlab/haar.hpp"
#include "dyadlab/rng.hpp"
#include "dyadlab/tree.hpp"

using namespace dyadlab;

namespace {

MeasuredTree random_tree_1d(int L, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> masses(std::uint64_t{1} << L);
  for (auto& m : masses) m = rng.log_uniform(0.05, 20.0);
  return MeasuredTree(1, L, std::move(masses));
}

double inner(const HaarSystem& hs, const CubeId& a, const CubeId& b) {
  const MeasuredTree& t = hs.tree();
  double s = 0.0;
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
    s += hs.value_at_leaf(a, x) * hs.value_at_leaf(b, x) * t.leaf_mass(x);
  }
  return s;
}

}  // namespace

TEST_CASE("1d haar on lebesgue: m-formula value, sup-norm, xi(0,0)=1") {
  const int L = 4;
  auto t = build_tree(1, L, MeasurePreset{});
  auto hs = build_haar_1d(t);
  for (int lev = 0; lev < L; ++lev) {
    const CubeId q{lev, 0};
    const double len = std::pow(2.0, -lev);
    // Example formula: m_f(I) = mu+ mu- / mu = |I|/4; recorded m = ||h||_1^2 = 4 m_f
    const double mu_p = t.mu(t.child(q, 1)), mu_m = t.mu(t.child(q, 0));
    CHECK(mu_p * mu_m / t.mu(q) == doctest::Approx(len / 4).epsilon(1e-13));
    CHECK(hs.m(q) == doctest::Approx(len).epsilon(1e-13));
    CHECK(hs.norm_linf(q) == doctest::Approx(std::pow(2.0, lev / 2.0)).epsilon(1e-13));
    CHECK(hs.norm_l1(q) == doctest::Approx(std::sqrt(len)).epsilon(1e-13));
  }
  CHECK(xi(hs, 0, 0) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("1d haar with masses (1,1): symmetric coefficients") {
  auto t = MeasuredTree(1, 1, {1.0, 1.0});
  auto hs = build_haar_1d(t);
  const CubeId q{0, 0};
  const auto& h = hs.function(q);
  CHECK(h.alpha(1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(h.alpha(0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(inner(hs, q, q) == doctest::Approx(1.0));
  // mean zero
  CHECK(h.alpha(0) * 1.0 + h.alpha(1) * 1.0 == doctest::Approx(0.0));
}

TEST_CASE("1d haar with masses (1,3): example coefficients, unit L2 norm") {
  auto t = MeasuredTree(1, 1, {1.0, 3.0});
  auto hs = build_haar_1d(t);
  const CubeId q{0, 0};
  const auto& h = hs.function(q);
  CHECK(h.alpha(0) == doctest::Approx(-std::sqrt(3.0) / 2.0));
  CHECK(h.alpha(1) == doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))));
  CHECK(inner(hs, q, q) == doctest::Approx(1.0));
}

TEST_CASE("haar invariants on random 1d trees: mean zero, normalized, orthonormal, m <= mu") {
  for (std::uint64_t seed : {3ull, 17ull, 2025ull}) {
    auto t = random_tree_1d(5, seed);
    auto hs = build_haar_1d(t);
    for (int lev = 0; lev < t.depth(); ++lev) {
      for (std::uint64_t i = 0; i < t.cubes_at(lev); ++i) {
        const CubeId q{lev, i};
        const auto& h = hs.function(q);
        double mean = 0.0;
        for (int o = 0; o < 2; ++o) mean += h.alpha(o) * t.mu(t.child(q, o));
        CHECK(std::abs(mean) <= 1e-12 * t.total_mass() * hs.norm_linf(q) + 1e-300);
        CHECK(inner(hs, q, q) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(hs.m(q) <= t.mu(q) * (1 + 1e-12));
        // Prop 2.7(2) lower half: ||h||_inf sqrt(m) >= 1
        CHECK(hs.norm_linf(q) * std::sqrt(hs.m(q)) >= 1.0 - 1e-12);
      }
    }
    // pairwise orthogonality via the Gram matrix of all functions
    for (int lev = 0; lev < t.depth(); ++lev) {
      for (std::uint64_t i = 0; i < t.cubes_at(lev); ++i) {
        for (int lev2 = lev; lev2 < t.depth(); ++lev2) {
          for (std::uint64_t i2 = (lev2 == lev ? i + 1 : 0); i2 < t.cubes_at(lev2); ++i2) {
            CHECK(std::abs(inner(hs, CubeId{lev, i}, CubeId{lev2, i2})) <= 1e-9);
          }
        }
      }
    }
  }
}

TEST_CASE("nd haar: lebesgue halfspace split is the tensor-style two-valued system") {
  auto t = build_tree(2, 2, MeasurePreset{});
  auto hs = build_haar_nd(t, SplitSpec::halfspace(0));
  const CubeId q{0, 0};
  // |h| = 1/sqrt(mu(Q)) everywhere on Q
  CHECK(hs.norm_linf(q) == doctest::Approx(1.0 / std::sqrt(t.mu(q))));
  CHECK(inner(hs, q, q) == doctest::Approx(1.0));
  CHECK(inner(hs, q, CubeId{1, 2}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nd haar: lopsided group mass drives ||h||_inf ~ 1/sqrt(m)") {
  // one child carries nearly all mass and sits alone in the plus group
  const double eps = 1e-6;
  std::vector<double> masses = {eps / 3, eps / 3, eps / 3, 1.0};  // path order, n=2 L=1
  auto t = MeasuredTree(2, 1, masses);
  SplitSpec split;
  split.per_cube = {0x8u};  // child 3 alone in G+
  auto hs = build_haar_nd(t, split);
  const CubeId q{0, 0};
  CHECK(hs.m(q) <= 4.1 * eps);  // m = ||h||_1^2 = 4 mu+ mu- / mu is small
  CHECK(hs.norm_linf(q) * std::sqrt(hs.m(q)) >= 1.0 - 1e-12);
  CHECK(hs.norm_linf(q) * std::sqrt(hs.m(q)) <= 2.0 + 1e-12);  // two-valued: <= 2 exactly
}

TEST_CASE("xi finiteness tracks the balanced certificate on random trees") {
  // Prop 2.7(4): the chain Xi[0,1]^{-1} <= sqrt(m(parent)/m(Q)) <= Xi[1,0] holds exactly
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto t = random_tree_1d(4, 1000 + seed);
    auto hs = build_haar_1d(t);
    const double x10 = xi(hs, 1, 0), x01 = xi(hs, 0, 1);
    for (int lev = 1; lev < t.depth(); ++lev) {
      for (std::uint64_t i = 0; i < t.cubes_at(lev); ++i) {
        const CubeId q{lev, i};
        const double ratio = std::sqrt(hs.m(t.parent(q)) / hs.m(q));
        CHECK(ratio <= x10 * (1 + 1e-12));
        CHECK(ratio >= 1.0 / x01 * (1 - 1e-12));
      }
    }
  }
}

TEST_CASE("check_balanced: lebesgue is balanced at B=2 with unit normalized ratio") {
  auto t = build_tree(1, 5, MeasurePreset{});
  auto hs = build_haar_1d(t);
  auto rep = check_balanced(hs, 2.0);
  CHECK(rep.ratio_max == doctest::Approx(0.5));
  CHECK(rep.ratio_min == doctest::Approx(0.5));
  CHECK(rep.norm_ratio_max == doctest::Approx(1.0));
  CHECK(rep.is_balanced);
}

TEST_CASE("check_balanced: random-balanced preset passes at its bound") {
  MeasurePreset p;
  p.kind = PresetKind::random_balanced;
  p.balance_bound = 2.0;
  for (std::uint64_t seed : {5ull, 6ull, 7ull}) {
    p.seed = seed;
    auto t = build_tree(1, 6, p);
    auto hs = build_haar_1d(t);
    CHECK(check_balanced(hs, 2.0).is_balanced);
  }
}

TEST_CASE("check_balanced: exponential imbalance ratio 100 fails at B=10") {
  MeasurePreset p;
  p.kind = PresetKind::exponential_imbalanced;
  p.ratio = 100.0;
  auto t = build_tree(1, 3, p);
  auto hs = build_haar_1d(t);
  auto rep = check_balanced(hs, 10.0);
  CHECK_FALSE(rep.is_balanced);
}

TEST_CASE("min-child comparability constants: c2 <= 4 in one dimension") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    MeasurePreset p;
    p.kind = PresetKind::random_balanced;
    p.seed = seed;
    auto t = build_tree(1, 6, p);
    auto hs = build_haar_1d(t);
    auto rep = check_balanced(hs, 2.0);
    CHECK(rep.min_child_c2 <= 4.0 + 1e-9);
    CHECK(rep.min_child_c1 >= 2.0 - 1e-9);  // m / min-child = 4 mu_max / mu in 1d
  }
}

TEST_CASE("xi empty range raises") {
  auto t = build_tree(1, 2, MeasurePreset{});
  auto hs = build_haar_1d(t);
  CHECK_THROWS_AS(xi(hs, 2, 0), std::out_of_range);
}
