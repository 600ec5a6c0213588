#include <doctest.h>

#include <cmath>

#include "dyadlab/carleson.hpp"

using namespace dyadlab;

namespace {

MeasuredTree random_tree(int L, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> masses(std::uint64_t{1} << L);
  for (auto& m : masses) m = rng.log_uniform(0.2, 5.0);
  return MeasuredTree(1, L, std::move(masses));
}

}  // namespace

TEST_CASE("compatibility: constant family has A = 1") {
  auto t = random_tree(4, 1);
  Rng rng(2);
  std::vector<double> w(t.leaf_count());
  for (auto& v : w) v = rng.log_uniform(0.1, 10.0);
  auto fam = WeightFamily::constant(t, w);
  CHECK(compatibility_constant(fam) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compatibility: hand-built two-level family") {
  auto t = MeasuredTree(1, 1, {0.5, 0.5});
  WeightFamily fam(t);
  // root weight spikes on leaf 0 where the leaf-cube weight is flat
  fam.set(t.root(), 0, 8.0);
  fam.set(t.root(), 1, 1.0);
  fam.set(CubeId{1, 0}, 0, 1.0);
  fam.set(CubeId{1, 1}, 1, 1.0);
  // pair (P=root, Q=leaf0): sup w_P/w_Q = 8, <w_Q>_Q = 1, <w_P>_Q = 8 -> 1
  // pair (P=root, Q=root): sup(w/w)=1 * 1 = 1; pair (root, leaf1): 1*1/1 = 1
  CHECK(compatibility_constant(fam) == doctest::Approx(1.0));
  // now make the leaf-cube weight large where the root is small
  fam.set(CubeId{1, 1}, 1, 5.0);
  // (P=root, Q=leaf1): sup w_P/w_Q = 1/5, <w_Q>_Q = 5, <w_P>_Q = 1 -> 1
  CHECK(compatibility_constant(fam) == doctest::Approx(1.0));
  // spike w_P inside Q against a flat w_Q with mass elsewhere: A > 1
  auto t2 = MeasuredTree(1, 2, {0.25, 0.25, 0.25, 0.25});
  WeightFamily f2(t2);
  f2.set(t2.root(), 0, 100.0);
  // (P = root, Q = level-1 left): sup = 100, <w_Q>_Q = 1, <w_P>_Q = 50.5
  // -> 100/50.5 = 1.9802
  const double a = compatibility_constant(f2);
  CHECK(a == doctest::Approx(100.0 / 50.5).epsilon(1e-12));
}

TEST_CASE("compatibility floor: A >= 1 always") {
  auto t = random_tree(3, 5);
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto fam = WeightFamily::random_adversarial(t, rng, 30.0);
    CHECK(compatibility_constant(fam) >= 1.0 - 1e-12);
  }
}

TEST_CASE("testing constant: zero alpha gives zero") {
  auto t = random_tree(3, 7);
  WeightFamily fam(t);
  auto alpha = CarlesonData::zeros(t);
  CHECK(testing_constant_c2(fam, alpha, 2.0) == 0.0);
}

TEST_CASE("testing constant: unit weights with disjoint-family alpha give C2 = 1") {
  auto t = random_tree(4, 8);
  WeightFamily fam(t);
  auto alpha = CarlesonData::zeros(t);
  // alpha_Q = mu(Q) on a disjoint family (level-2 cubes)
  std::size_t flat = 0;
  for (int lev = 0; lev <= t.depth(); ++lev) {
    for (std::uint64_t i = 0; i < t.cubes_at(lev); ++i, ++flat) {
      if (lev == 2) alpha.alpha[flat] = t.mu(CubeId{2, i});
    }
  }
  CHECK(testing_constant_c2(fam, alpha, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("testing constant: single root alpha closed form") {
  auto t = random_tree(3, 9);
  Rng rng(10);
  std::vector<double> w(t.leaf_count());
  for (auto& v : w) v = rng.log_uniform(0.3, 3.0);
  auto fam = WeightFamily::constant(t, w);
  auto alpha = CarlesonData::zeros(t);
  alpha.alpha[0] = 1.7;  // root only
  const double p = 2.5;
  double avg = 0.0;
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) avg += w[x] * t.leaf_mass(x);
  avg /= t.total_mass();
  const double expected = std::pow(avg, p - 1.0) * 1.7 / t.total_mass();
  CHECK(testing_constant_c2(fam, alpha, p) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("exact C1 p=2: single cube = single leaf matches C2") {
  auto t = MeasuredTree(1, 1, {0.75, 0.25});
  WeightFamily fam(t);
  auto alpha = CarlesonData::zeros(t);
  // alpha on the leaf cube {leaf 0}
  alpha.alpha[fam.flat(CubeId{1, 0})] = 0.6;
  const double c1 = embedding_constant_c1(fam, alpha, 2.0, C1Method::exact).value;
  const double c2 = testing_constant_c2(fam, alpha, 2.0);
  // single-leaf cube: both equal alpha / mu(leaf)
  CHECK(c1 == doctest::Approx(0.6 / 0.75).epsilon(1e-12));
  CHECK(c2 == doctest::Approx(c1).epsilon(1e-12));
}

TEST_CASE("classical carleson: full-tree alpha ratio within [1, 4]") {
  auto t = build_tree(1, 5, MeasurePreset{});
  WeightFamily fam(t);
  auto alpha = CarlesonData::zeros(t);
  std::size_t flat = 0;
  for (int lev = 0; lev <= t.depth(); ++lev) {
    for (std::uint64_t i = 0; i < t.cubes_at(lev); ++i, ++flat) alpha.alpha[flat] = t.mu(CubeId{lev, i});
  }
  const double c1 = embedding_constant_c1(fam, alpha, 2.0, C1Method::exact).value;
  const double c2 = testing_constant_c2(fam, alpha, 2.0);
  CHECK(c1 >= c2 * (1 - 1e-12));
  CHECK(c1 <= 4.0 * c2);
}

TEST_CASE("specialization: constant family matches classical checkers to 1e-10") {
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    auto t = random_tree(4, seed);
    Rng rng(seed + 100);
    std::vector<double> w(t.leaf_count());
    for (auto& v : w) v = rng.log_uniform(0.2, 6.0);
    auto fam = WeightFamily::constant(t, w);
    auto alpha = CarlesonData::zeros(t);
    for (auto& a : alpha.alpha) a = rng.uniform() < 0.4 ? rng.log_uniform(0.01, 2.0) : 0.0;
    for (double p : {2.0, 1.5, 3.0}) {
      CHECK(testing_constant_c2(fam, alpha, p) ==
            doctest::Approx(classical_c2(t, w, alpha, p)).epsilon(1e-10));
    }
    CHECK(embedding_constant_c1(fam, alpha, 2.0, C1Method::exact).value ==
          doctest::Approx(classical_c1_exact_p2(t, w, alpha)).epsilon(1e-10));
  }
}

TEST_CASE("monotonicity of C1 and C2 in alpha") {
  auto t = random_tree(3, 21);
  Rng rng(22);
  auto fam = WeightFamily::random_smooth(t, rng);
  auto alpha = CarlesonData::zeros(t);
  for (auto& a : alpha.alpha) a = rng.log_uniform(0.05, 1.0);
  const double c1 = embedding_constant_c1(fam, alpha, 2.0, C1Method::exact).value;
  const double c2 = testing_constant_c2(fam, alpha, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    auto bumped = alpha;
    bumped.alpha[rng.below(bumped.alpha.size())] *= 1.5;
    CHECK(embedding_constant_c1(fam, bumped, 2.0, C1Method::exact).value >= c1 * (1 - 1e-12));
    CHECK(testing_constant_c2(fam, bumped, 2.0) >= c2 * (1 - 1e-12));
  }
}

TEST_CASE("scale invariance: per-cube rescaling leaves A, C1, C2 unchanged") {
  // the normalization w_Q -> c_Q w_Q is paired with alpha_Q -> c_Q^{-(p-1)} alpha_Q,
  // exactly as in the reduction to <w_Q>_Q = 1; A needs no compensation
  const double p = 2.0;
  auto t = random_tree(3, 31);
  Rng rng(32);
  auto fam = WeightFamily::random_smooth(t, rng);
  auto alpha = CarlesonData::zeros(t);
  for (auto& a : alpha.alpha) a = rng.log_uniform(0.05, 1.0);
  const double a0 = compatibility_constant(fam);
  const double c10 = embedding_constant_c1(fam, alpha, p, C1Method::exact).value;
  const double c20 = testing_constant_c2(fam, alpha, p);
  auto scaled = fam;
  auto alpha2 = alpha;
  for (int lev = 0; lev <= t.depth(); ++lev) {
    for (std::uint64_t i = 0; i < t.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const double c = rng.log_uniform(0.1, 10.0);
      scaled.rescale(q, c);
      alpha2.alpha[fam.flat(q)] *= std::pow(c, -(p - 1.0));
    }
  }
  CHECK(compatibility_constant(scaled) == doctest::Approx(a0).epsilon(1e-10));
  CHECK(embedding_constant_c1(scaled, alpha2, p, C1Method::exact).value ==
        doctest::Approx(c10).epsilon(1e-10));
  CHECK(testing_constant_c2(scaled, alpha2, p) == doctest::Approx(c20).epsilon(1e-10));
}

TEST_CASE("embedding bounds: exact oracle satisfies the two-sided theorem at p=2") {
  for (std::uint64_t seed : {41ull, 42ull, 43ull, 44ull}) {
    auto t = random_tree(4, seed);
    Rng rng(seed);
    WeightFamily fam = (seed % 2 == 0) ? WeightFamily::random_smooth(t, rng)
                                       : WeightFamily::random_adversarial(t, rng, 20.0);
    auto alpha = CarlesonData::zeros(t);
    for (auto& a : alpha.alpha) a = rng.uniform() < 0.5 ? rng.log_uniform(0.02, 1.0) : 0.0;
    auto rep = verify_embedding_bounds(fam, alpha, 2.0);
    CHECK(rep.lower_ok);
    CHECK(rep.upper_ratio <= 16.0);
  }
}

TEST_CASE("ascent calibration: reaches 99 percent of the exact value at p=2") {
  auto t = random_tree(3, 51);
  Rng rng(52);
  auto fam = WeightFamily::random_smooth(t, rng);
  auto alpha = CarlesonData::zeros(t);
  for (auto& a : alpha.alpha) a = rng.log_uniform(0.05, 1.0);
  const double exact = embedding_constant_c1(fam, alpha, 2.0, C1Method::exact).value;
  const double ascent = embedding_constant_c1(fam, alpha, 2.0, C1Method::ascent, 99, 16).value;
  CHECK(ascent <= exact * (1 + 1e-9));
  CHECK(ascent >= 0.99 * exact);
}

TEST_CASE("ascent at p != 2 stays below the theoretical upper bound") {
  auto t = random_tree(3, 61);
  Rng rng(62);
  auto fam = WeightFamily::random_smooth(t, rng);
  auto alpha = CarlesonData::zeros(t);
  for (auto& a : alpha.alpha) a = rng.log_uniform(0.05, 1.0);
  for (double p : {1.5, 3.0}) {
    auto rep = verify_embedding_bounds(fam, alpha, p);
    // kappa_p floor from the paper's A^{1+1/p'} C2 shape; generous here
    CHECK(rep.C1 <= 64.0 * std::pow(rep.A, 1.0 + (p - 1.0) / p) * rep.C2);
  }
}

TEST_CASE("negative alpha is rejected") {
  auto t = random_tree(2, 71);
  WeightFamily fam(t);
  auto alpha = CarlesonData::zeros(t);
  alpha.alpha[1] = -0.25;
  CHECK_THROWS_AS(testing_constant_c2(fam, alpha, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(embedding_constant_c1(fam, alpha, 2.0, C1Method::exact), std::invalid_argument);
}

TEST_CASE("expanding sum: single element and the (1,1) example") {
  std::vector<double> one = {2.5};
  auto r1 = expanding_sum_check(one, 2.0);
  CHECK(r1.ok);
  CHECK(r1.lhs == doctest::Approx(std::pow(2.5, 2.0)));
  CHECK(r1.rhs == doctest::Approx(3.0 * 2.5 * 2.5));

  std::vector<double> pair = {1.0, 1.0};
  auto r2 = expanding_sum_check(pair, 2.0);
  CHECK(r2.lhs == doctest::Approx(4.0));
  CHECK(r2.rhs == doctest::Approx(12.0));
  CHECK(r2.ok);
}

TEST_CASE("expanding sum fuzz: no violations across exponents") {
  Rng rng(81);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + rng.index(8);
    std::vector<double> a(n);
    for (auto& v : a) v = rng.uniform() < 0.2 ? 0.0 : rng.log_uniform(0.01, 100.0);
    for (double p : {1.5, 2.0, 2.7, 3.0}) {
      CHECK(expanding_sum_check(a, p).ok);
    }
  }
}

TEST_CASE("from_matrix_weight family: compatibility stays d-bounded") {
  auto t = random_tree(3, 91);
  Rng rng(92);
  auto w = MatrixWeight::random_iid(t, 2, 25.0, rng);
  auto fam = WeightFamily::from_matrix_weight(w, 2.0);
  // Lemma 4.2 configuration: A <~ d, with a generous margin for the sandwich
  CHECK(compatibility_constant(fam) <= 8.0);
}
