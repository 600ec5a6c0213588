#include <doctest.h>

#include <cmath>

#include "dyadlab/orlicz.hpp"
#include "dyadlab/rng.hpp"

using namespace dyadlab;

namespace {

MeasuredTree random_tree(int L, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> masses(std::uint64_t{1} << L);
  for (auto& m : masses) m = rng.log_uniform(0.2, 5.0);
  return MeasuredTree(1, L, std::move(masses));
}

LeafFunction random_scalar(const MeasuredTree& t, Rng& rng) {
  LeafFunction f(t, 1);
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) f(x, 0) = rng.normal() * rng.log_uniform(0.2, 4.0);
  return f;
}

}  // namespace

TEST_CASE("power Young function: Luxemburg norm is the L^p average") {
  auto t = random_tree(4, 1);
  Rng rng(2);
  auto f = random_scalar(t, rng);
  for (double r : {1.5, 2.0, 3.0}) {
    auto phi = YoungFunction::power(r);
    for (const CubeId& q : {CubeId{0, 0}, CubeId{2, 1}}) {
      double avg = 0.0;
      for (std::uint64_t x = t.first_leaf(q); x < t.first_leaf(q) + t.leaves_under(q); ++x) {
        avg += std::pow(std::abs(f(x, 0)), r) * t.leaf_mass(x);
      }
      avg /= t.mu(q);
      CHECK(local_orlicz_norm(f, q, phi) == doctest::Approx(std::pow(avg, 1.0 / r)).epsilon(1e-9));
    }
  }
}

TEST_CASE("constant function: norm c for Phi(t) = t-like, c / Phi^{-1}(1) in general") {
  auto t = random_tree(3, 3);
  LeafFunction f(t, 1);
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) f(x, 0) = 2.5;
  auto phi = YoungFunction::power_log(2.0, 1.0);
  const double expected = 2.5 / phi.inverse(1.0);
  CHECK(local_orlicz_norm(f, t.root(), phi) == doctest::Approx(expected).epsilon(1e-9));
  auto p2 = YoungFunction::power(2.0);
  CHECK(local_orlicz_norm(f, t.root(), p2) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("zero function has zero norm") {
  auto t = random_tree(2, 4);
  LeafFunction f(t, 1);
  CHECK(local_orlicz_norm(f, t.root(), YoungFunction::power(2.0)) == 0.0);
}

TEST_CASE("dual of t^p/p is t^p'/p' (checked through the scaled transform)") {
  // Legendre of Phi(t) = t^2/2 is itself; our table stores sup(st - Phi(s))
  auto half_square = YoungFunction::from_table(
      []() {
        std::vector<double> ts;
        for (int k = 0; k < 200; ++k) ts.push_back(std::pow(10.0, -8.0 + 16.0 * k / 199.0));
        return ts;
      }(),
      []() {
        std::vector<double> vs;
        for (int k = 0; k < 200; ++k) {
          const double tt = std::pow(10.0, -8.0 + 16.0 * k / 199.0);
          vs.push_back(tt * tt / 2.0);
        }
        return vs;
      }());
  auto dual = dual_young(half_square);
  for (double x : {0.1, 1.0, 7.5, 120.0}) {
    CHECK(dual(x) == doctest::Approx(x * x / 2.0).epsilon(2e-2));
  }
}

TEST_CASE("generalized Hoelder fuzz: <|fg|>_Q <= 2 ||f||_Phi ||g||_dual") {
  auto t = random_tree(4, 5);
  Rng rng(6);
  auto phi = YoungFunction::power(2.0);
  auto dual = dual_young(phi);
  for (int trial = 0; trial < 300; ++trial) {
    auto f = random_scalar(t, rng);
    auto g = random_scalar(t, rng);
    const int lev = rng.index(t.depth() + 1);
    const CubeId q{lev, rng.below(t.cubes_at(lev))};
    double avg = 0.0;
    for (std::uint64_t x = t.first_leaf(q); x < t.first_leaf(q) + t.leaves_under(q); ++x) {
      avg += std::abs(f(x, 0) * g(x, 0)) * t.leaf_mass(x);
    }
    avg /= t.mu(q);
    const double bound = 2.0 * local_orlicz_norm(f, q, phi) * local_orlicz_norm(g, q, dual);
    CHECK(avg <= bound * (1 + 1e-9) + 1e-300);
  }
}

TEST_CASE("orlicz norm is a norm: homogeneity and triangle inequality fuzz") {
  auto t = random_tree(3, 7);
  Rng rng(8);
  auto phi = YoungFunction::power_log(2.0, -1.5);
  for (int trial = 0; trial < 60; ++trial) {
    auto f = random_scalar(t, rng);
    auto g = random_scalar(t, rng);
    const CubeId q{1, rng.below(2)};
    const double c = rng.log_uniform(0.1, 8.0);
    auto cf = f;
    cf.scale(c);
    CHECK(local_orlicz_norm(cf, q, phi) ==
          doctest::Approx(c * local_orlicz_norm(f, q, phi)).epsilon(1e-8));
    auto fg = f;
    fg.axpy(1.0, g);
    CHECK(local_orlicz_norm(fg, q, phi) <=
          (local_orlicz_norm(f, q, phi) + local_orlicz_norm(g, q, phi)) * (1 + 1e-8));
  }
}

TEST_CASE("bp check: calibrated verdicts on analytic presets") {
  // finite: t^{p-1/2}; divergent: t^p; finite log bump: t^p / log^{1.5}
  CHECK(bp_check(YoungFunction::power(1.5), 2.0).finite);
  CHECK_FALSE(bp_check(YoungFunction::power(2.0), 2.0).finite);
  CHECK(bp_check(YoungFunction::power_log(2.0, -1.5), 2.0).finite);
  CHECK_FALSE(bp_check(YoungFunction::power_log(2.0, 1.0), 2.0).finite);
  CHECK(bp_check(YoungFunction::power(2.0), 3.0).finite);
}

TEST_CASE("orlicz maximal with Phi(t) = t^{1+eps} tracks the dyadic maximal function") {
  // at r -> 1 the Luxemburg norm approaches the average of |f|
  auto t = random_tree(4, 9);
  Rng rng(10);
  LeafFunction f(t, 1);
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) f(x, 0) = std::abs(rng.normal()) + 0.1;
  auto phi = YoungFunction::power(1.0 + 1e-9);
  auto mf = orlicz_maximal(f, phi);
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
    double best = 0.0;
    for (int lev = 0; lev <= t.depth(); ++lev) {
      const CubeId q = t.ancestor_of_leaf(x, lev);
      double avg = 0.0;
      for (std::uint64_t y = t.first_leaf(q); y < t.first_leaf(q) + t.leaves_under(q); ++y) {
        avg += std::abs(f(y, 0)) * t.leaf_mass(y);
      }
      best = std::max(best, avg / t.mu(q));
    }
    CHECK(mf(x, 0) == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("bump constant: identity weights with power functions collapse to sup c_p^b") {
  auto t = random_tree(3, 11);
  auto hs = build_haar_1d(t);
  auto w = MatrixWeight::identity(t, 2);
  auto phi = YoungFunction::power(2.0);
  const double bump = bump_constant(w, w, phi, phi, 2.0, 1, hs);
  // |I W^{-1/2}(y)| = 1 pointwise: nested norms are 1, so the sup is over c_p^b
  double expect = 0.0;
  for (int il = 0; il <= t.depth(); ++il) {
    for (std::uint64_t ii = 0; ii < t.cubes_at(il); ++ii) {
      const CubeId I{il, ii};
      for (int up = 0; up <= std::min(3, il); ++up) {
        const CubeId anc = t.ancestor(I, up);
        for (int down = 0; down + up <= 3 && anc.level + down <= t.depth(); ++down) {
          for (const CubeId& J : t.descendants_at(anc, down)) {
            if (t.dyadic_distance(I, J) != up + down) continue;
            expect = std::max(expect, cpb_weight(hs, 2.0, I, J));
          }
        }
      }
    }
  }
  CHECK(bump == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("young validation rejects non-convex tables") {
  std::vector<double> ts = {0.1, 1.0, 10.0, 100.0};
  std::vector<double> vs = {0.01, 5.0, 6.0, 7.0};  // concave kink
  CHECK_THROWS_AS(YoungFunction::from_table(ts, vs), std::invalid_argument);
}

TEST_CASE("two-weight bump bound: empirical shift norms against the bump constant") {
  // ||Tf||_{L^p(V)} <= kappa ([W,V]^b)^{1/p} ||f||_{L^p(W)} with a recorded kappa
  double kappa = 0.0;
  auto phi = YoungFunction::power_log(2.0, -1.5);
  auto psi = YoungFunction::power_log(2.0, -1.5);
  for (std::uint64_t seed : {1ull, 2ull}) {
    MeasurePreset pr;
    pr.kind = PresetKind::random_balanced;
    pr.balance_bound = 2.0;
    pr.seed = 600 + seed;
    auto t = build_tree(1, 4, pr);
    auto hs = build_haar_1d(t);
    Rng rng(700 + seed);
    auto w = MatrixWeight::random_iid(t, 2, 16.0, rng);
    auto v = MatrixWeight::random_iid(t, 2, 16.0, rng);
    auto shift = HaarShift::random(hs, 1, 0, rng, 1.0, 0.5);
    const double bump = bump_constant(w, v, phi, psi, 2.0, 1, hs);
    const auto& vp = v.powers(0.5);
    const auto& wp = w.powers(0.5);
    for (int trial = 0; trial < 5; ++trial) {
      auto f = random_test_function(t, 2, rng);
      auto tf = shift.apply(f);
      double num = 0.0, den = 0.0;
      for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
        Eigen::Vector2d fx(f(x, 0), f(x, 1)), tx(tf(x, 0), tf(x, 1));
        num += (vp[x] * tx).squaredNorm() * t.leaf_mass(x);
        den += (wp[x] * fx).squaredNorm() * t.leaf_mass(x);
      }
      if (den > 0) kappa = std::max(kappa, std::sqrt(num / den) / std::sqrt(bump));
    }
  }
  MESSAGE("two-weight bump constant kappa = ", kappa);
  CHECK(kappa < 64.0);
}

TEST_CASE("legendre pair: dual of t^p/p is t^p'/p', biconjugate returns the original") {
  const double p = 3.0, pc = 1.5;
  std::vector<double> ts, vs;
  for (int k = 0; k < 240; ++k) {
    const double t = std::pow(10.0, -8.0 + 16.0 * k / 239.0);
    ts.push_back(t);
    vs.push_back(std::pow(t, p) / p);
  }
  auto phi = YoungFunction::from_table(ts, vs);
  auto dual = dual_young(phi);
  for (double x : {0.2, 1.0, 4.0, 50.0}) {
    CHECK(dual(x) == doctest::Approx(std::pow(x, pc) / pc).epsilon(3e-2));
  }
  auto bidual = dual_young(dual);
  for (double x : {0.5, 1.0, 3.0, 20.0}) {
    CHECK(bidual(x) == doctest::Approx(phi(x)).epsilon(1e-2));
  }
}
