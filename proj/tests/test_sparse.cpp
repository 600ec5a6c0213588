#include <doctest.h>

#include <cmath>

#include "dyadlab/sparse.hpp"

using namespace dyadlab;

namespace {

MeasuredTree random_tree(int L, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> masses(std::uint64_t{1} << L);
  for (auto& m : masses) m = rng.log_uniform(0.1, 10.0);
  return MeasuredTree(1, L, std::move(masses));
}

MeasuredTree balanced_tree(int L, std::uint64_t seed) {
  MeasurePreset p;
  p.kind = PresetKind::random_balanced;
  p.balance_bound = 2.0;
  p.seed = seed;
  return build_tree(1, L, p);
}

SparseFamily family_of(const MeasuredTree& t, std::vector<CubeId> cubes) {
  SparseFamily f;
  f.tree = &t;
  std::sort(cubes.begin(), cubes.end());
  f.cubes = std::move(cubes);
  return f;
}

}  // namespace

TEST_CASE("verify_sparseness: pairwise disjoint family has eta = 1, lambda = 1") {
  auto t = build_tree(1, 3, MeasurePreset{});
  auto fam = family_of(t, {{2, 0}, {2, 1}, {1, 1}});
  auto rep = verify_sparseness(fam);
  CHECK(rep.lambda_carleson == doctest::Approx(1.0));
  CHECK(rep.eta_achieved == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.eta_greedy_full == doctest::Approx(1.0));
}

TEST_CASE("verify_sparseness: the full dyadic tree on lebesgue has lambda = L + 1") {
  const int L = 4;
  auto t = build_tree(1, L, MeasurePreset{});
  std::vector<CubeId> all;
  for (int lev = 0; lev <= L; ++lev) {
    for (std::uint64_t i = 0; i < t.cubes_at(lev); ++i) all.push_back({lev, i});
  }
  auto fam = family_of(t, std::move(all));
  auto rep = verify_sparseness(fam);
  CHECK(rep.lambda_carleson == doctest::Approx(L + 1.0));
  // leaves claim everything; interior cubes get nothing in the claim-all greedy
  CHECK(rep.eta_greedy_full == doctest::Approx(0.0));
  // with fractional (Borel) assignments the exact optimum is 1/lambda
  CHECK(rep.eta_achieved == doctest::Approx(1.0 / (L + 1.0)).epsilon(1e-6));
}

TEST_CASE("verify_sparseness: disjoint sets returned are valid") {
  auto t = random_tree(5, 71);
  auto fam = family_of(t, {{0, 0}, {1, 0}, {2, 0}, {2, 3}, {3, 7}});
  auto rep = verify_sparseness(fam);
  REQUIRE(fam.disjoint_sets.size() == fam.cubes.size());
  std::vector<double> used(t.leaf_count(), 0.0);
  for (std::size_t i = 0; i < fam.cubes.size(); ++i) {
    double mass = 0.0;
    for (const auto& [x, m] : fam.disjoint_sets[i]) {
      CHECK(t.contains(fam.cubes[i], t.leaf_cube(x)));
      used[x] += m;
      mass += m;
    }
    CHECK(mass >= rep.eta_achieved * t.mu(fam.cubes[i]) * (1 - 1e-6));
  }
  // disjointness: total mass drawn from each leaf stays within the leaf
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) CHECK(used[x] <= t.leaf_mass(x) * (1 + 1e-12));
}

TEST_CASE("sparse_form: single cube with unit constant vectors gives mu(Q)") {
  auto t = build_tree(1, 3, MeasurePreset{});
  LeafFunction f(t, 2), g(t, 2);
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
    f(x, 0) = 1.0;
    g(x, 0) = 1.0;
  }
  auto fam = family_of(t, {{1, 0}});
  CHECK(sparse_form(fam, f, g) == doctest::Approx(t.mu(CubeId{1, 0})));
}

TEST_CASE("sparse_form: pointwise orthogonal constants vanish, modified too") {
  auto t = build_tree(1, 3, MeasurePreset{});
  auto hs = build_haar_1d(t);
  LeafFunction f(t, 2), g(t, 2);
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
    f(x, 0) = 2.0;
    g(x, 1) = -3.0;
  }
  auto fam = family_of(t, {{0, 0}, {1, 0}, {1, 1}});
  CHECK(sparse_form(fam, f, g) == 0.0);
  CHECK(modified_sparse_form(fam, 1, hs, f, g) == 0.0);
}

TEST_CASE("modified_sparse_form: single diagonal pair contributes the m(Q)-weighted square") {
  auto t = random_tree(3, 5);
  auto hs = build_haar_1d(t);
  LeafFunction f(t, 1), g(t, 1);
  Rng rng(6);
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
    f(x, 0) = rng.normal();
    g(x, 0) = rng.normal();
  }
  const CubeId q{1, 1};
  auto fam = family_of(t, {q});
  const std::uint64_t a = t.first_leaf(q), b = a + t.leaves_under(q);
  double dbl = 0.0;
  for (std::uint64_t x = a; x < b; ++x) {
    for (std::uint64_t y = a; y < b; ++y) {
      dbl += std::abs(f(x, 0) * g(y, 0)) * t.leaf_mass(x) * t.leaf_mass(y);
    }
  }
  dbl /= t.mu(q) * t.mu(q);
  CHECK(modified_sparse_form(fam, 0, hs, f, g) == doctest::Approx(dbl * hs.m(q)).epsilon(1e-12));
}

TEST_CASE("pointwise-to-form: zero g is trivial, constants give equality, fuzz holds") {
  auto t = random_tree(4, 9);
  LeafFunction f(t, 2), zero(t, 2);
  Rng rng(10);
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
    f(x, 0) = rng.normal();
    f(x, 1) = rng.normal();
  }
  auto fam = family_of(t, {{0, 0}, {2, 1}});
  auto triv = pointwise_form_check(fam, f, zero);
  CHECK(triv.ok);
  CHECK(triv.lhs == 0.0);

  // constants on a single cube: both sides equal mu(Q) |f.g|
  auto t2 = build_tree(1, 3, MeasurePreset{});
  LeafFunction fc(t2, 2), gc(t2, 2);
  for (std::uint64_t x = 0; x < t2.leaf_count(); ++x) {
    fc(x, 0) = 1.5;
    fc(x, 1) = -0.5;
    gc(x, 0) = 2.0;
    gc(x, 1) = 1.0;
  }
  auto fam2 = family_of(t2, {{0, 0}});
  auto eq = pointwise_form_check(fam2, fc, gc);
  CHECK(eq.ok);
  CHECK(eq.lhs == doctest::Approx(eq.rhs).epsilon(1e-12));
  CHECK(eq.rhs == doctest::Approx(std::abs(1.5 * 2.0 - 0.5 * 1.0)).epsilon(1e-12));

  for (int trial = 0; trial < 50; ++trial) {
    auto tt = random_tree(4, 100 + trial);
    LeafFunction ff(tt, 2), gg(tt, 2);
    Rng r2(trial);
    for (std::uint64_t x = 0; x < tt.leaf_count(); ++x) {
      for (int c = 0; c < 2; ++c) {
        ff(x, c) = r2.normal();
        gg(x, c) = r2.normal();
      }
    }
    std::vector<CubeId> cs;
    for (int lev = 0; lev <= tt.depth(); ++lev) {
      for (std::uint64_t i = 0; i < tt.cubes_at(lev); ++i) {
        if (r2.uniform() < 0.3) cs.push_back({lev, i});
      }
    }
    if (cs.empty()) cs.push_back(tt.root());
    auto fm = family_of(tt, std::move(cs));
    CHECK(pointwise_form_check(fm, ff, gg).ok);
  }
}

TEST_CASE("zero shift: balanced construction returns a trivial passing certificate") {
  auto t = balanced_tree(4, 21);
  auto hs = build_haar_1d(t);
  HaarShift zero(hs, 0, 1, {});
  Rng rng(22);
  auto f = random_test_function(t, 2, rng);
  auto res = build_sparse_balanced(zero, f, t.root());
  CHECK(res.cert.all_pass);
  CHECK(res.stats.max_fraction == 0.0);
  CHECK(res.family.contains(t.root()));
  // enlargement adds the children generation for t = 1
  CHECK(res.family.contains(CubeId{1, 0}));
}

TEST_CASE("balanced construction: random balanced measure, (0,1) shift, certificate passes") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto t = balanced_tree(5, 30 + seed);
    auto hs = build_haar_1d(t);
    Rng rng(40 + seed);
    auto shift = HaarShift::random(hs, 0, 1, rng, 1.0, 0.5);
    auto f = random_test_function(t, 2, rng);
    auto res = build_sparse_balanced(shift, f, t.root());
    CHECK(res.cert.all_pass);
    CHECK(res.stats.max_fraction <= 0.5);
    CHECK(res.sparseness.eta_achieved > 0.05);
    CHECK(res.sparseness.lambda_carleson < 50.0);
  }
}

TEST_CASE("balanced construction: scalar d=1 instance") {
  auto t = balanced_tree(6, 77);
  auto hs = build_haar_1d(t);
  Rng rng(78);
  auto shift = HaarShift::random(hs, 1, 1, rng, 1.0, 0.5);
  auto f = random_test_function(t, 1, rng);
  auto res = build_sparse_balanced(shift, f, t.root());
  CHECK(res.cert.all_pass);
  CHECK(res.stopping_C >= 1.0);
}

TEST_CASE("l1 construction: haar multiplier with unit coefficients on any measure passes plain") {
  MeasurePreset p;
  p.kind = PresetKind::exponential_imbalanced;
  p.ratio = 8.0;
  auto t = build_tree(1, 5, p);
  auto hs = build_haar_1d(t);
  // (0,0) multiplier is L1-normalized on lebesgue; on this measure rescale
  Rng rng(50);
  auto shift = HaarShift::random_l1_normalized(hs, 0, 0, rng, 1.0);
  REQUIRE(shift.is_l1_normalized(1.0).verdict);
  auto f = random_test_function(t, 2, rng);
  auto res = build_sparse_l1(shift, f, t.root());
  CHECK(res.cert.all_pass);
  CHECK(res.cert.mode == DominationMode::plain);
  CHECK(res.sparseness.eta_achieved > 0.2);
}

TEST_CASE("l1 construction: (1,0) shift on non-balanced measure passes plain") {
  MeasurePreset p;
  p.kind = PresetKind::exponential_imbalanced;
  p.ratio = 30.0;
  auto t = build_tree(1, 6, p);
  auto hs = build_haar_1d(t);
  Rng rng(51);
  auto shift = HaarShift::random_l1_normalized(hs, 1, 0, rng, 1.0);
  auto f = random_test_function(t, 2, rng);
  auto res = build_sparse_l1(shift, f, t.root());
  CHECK(res.cert.all_pass);
}

TEST_CASE("multiplier construction: constant sigma on constant f is trivial") {
  auto t = random_tree(4, 60);
  auto hs = build_haar_1d(t);
  auto sigma = MartingaleMultiplier::constant(t, +1);
  LeafFunction f(t, 2);
  for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
    f(x, 0) = 1.0;
    f(x, 1) = -2.0;
  }
  auto res = build_sparse_multiplier(sigma, f, t.root(), hs);
  CHECK(res.cert.all_pass);
  CHECK(res.stats.max_fraction == 0.0);  // T_sigma f = 0 and <f>_J is in <<f>>_Q0 for C >= 1
}

TEST_CASE("multiplier construction: random sigma on non-doubling measures passes, eta >= 0.4") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    MeasurePreset p;
    p.kind = PresetKind::cantor_like;
    p.cantor_fraction = 0.15;
    auto t = build_tree(1, 6, p);
    auto hs = build_haar_1d(t);
    Rng rng(90 + seed);
    auto sigma = MartingaleMultiplier::random(t, rng);
    auto f = random_test_function(t, 2, rng);
    auto res = build_sparse_multiplier(sigma, f, t.root(), hs);
    CHECK(res.cert.all_pass);
    CHECK(res.sparseness.eta_achieved >= 0.4);
  }
}

TEST_CASE("certificate recheck: larger C still passes, tiny C fails") {
  auto t = balanced_tree(5, 33);
  auto hs = build_haar_1d(t);
  Rng rng(34);
  auto shift = HaarShift::random(hs, 0, 1, rng, 1.0, 0.5);
  auto f = random_test_function(t, 2, rng);
  auto res = build_sparse_balanced(shift, f, t.root());
  REQUIRE(res.cert.all_pass);
  auto tf = shift.apply(f);
  auto looser = check_certificate(tf, f, res.family, t.root(), res.cert.C * 4, DominationMode::modified,
                                  res.cert.N, hs);
  CHECK(looser.all_pass);
  auto tight = check_certificate(tf, f, res.family, t.root(), res.cert.C * 1e-7,
                                 DominationMode::modified, res.cert.N, hs);
  CHECK_FALSE(tight.all_pass);
  CHECK(tight.failing_leaves > 0);
}

TEST_CASE("stopping measure control: fractions stay below one half at auto C") {
  auto t = balanced_tree(6, 44);
  auto hs = build_haar_1d(t);
  Rng rng(45);
  auto shift = HaarShift::random(hs, 1, 0, rng, 1.0, 0.5);
  auto f = random_test_function(t, 1, rng);
  auto res = build_sparse_balanced(shift, f, t.root());
  for (double fr : res.stats.fractions) CHECK(fr <= 0.5);
}

TEST_CASE("enlargement bound: lambda(S) <= (t+1) 2^{tn} (lambda(S') + 1)") {
  auto t = balanced_tree(5, 55);
  auto hs = build_haar_1d(t);
  Rng rng(56);
  auto shift = HaarShift::random(hs, 0, 1, rng, 1.0, 0.5);
  auto f = random_test_function(t, 2, rng);
  auto res = build_sparse_balanced(shift, f, t.root());
  // rebuild the un-enlarged family: strip cubes whose parent chain shows they
  // came only from enlargement is awkward; instead check the bound against the
  // certified lambda of the enlarged family using the stopping fractions
  // guarantee lambda(S') <= 2 (half-measure stopping)
  const int tt = shift.t();
  const double bound = (tt + 1) * std::pow(2.0, tt * 1) * (2.0 + 1.0);
  CHECK(res.sparseness.lambda_carleson <= bound + 1e-9);
}

TEST_CASE("vector weak type via john components: truncation exclusion sets obey the lemma") {
  // if Tf(x) escapes lambda <<f>>_{Q0}, then some john component of Tf(x) must
  // exceed (lambda/d) <|f.e_i|>_{Q0}; summing the scalar weak-type bounds gives
  // mu{escape} <= (d^2/lambda) kappa mu(Q0)
  for (std::uint64_t seed : {5ull, 6ull}) {
    auto t = balanced_tree(5, 200 + seed);
    auto hs = build_haar_1d(t);
    Rng rng(300 + seed);
    auto shift = HaarShift::random(hs, 0, 1, rng, 1.0, 0.5);
    const int d = 2;
    auto f = random_test_function(t, d, rng, 3);
    // random truncation: drop a random subset of coefficient entries
    std::vector<ShiftCoeff> kept;
    for (const auto& e : shift.coeffs()) {
      if (rng.uniform() < 0.6) kept.push_back(e);
    }
    HaarShift trunc(hs, 0, 1, std::move(kept));
    auto tf = trunc.apply(f);
    auto body = convex_body_avg(f, t.root());
    auto ell = john_ellipsoid(body, 1e-7);
    std::vector<double> comp_avg(d, 0.0);
    for (int i = 0; i < d; ++i) {
      for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
        double dot = 0.0;
        for (int c = 0; c < d; ++c) dot += f(x, c) * ell.basis(c, i);
        comp_avg[i] += std::abs(dot) * t.leaf_mass(x);
      }
      comp_avg[i] /= t.total_mass();
    }
    for (double lambda : {0.5, 2.0, 8.0}) {
      double escape_mass = 0.0;
      for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
        std::vector<double> v(d);
        for (int c = 0; c < d; ++c) v[c] = tf(x, c);
        if (!member(v, {{lambda, &body}}).inside) {
          escape_mass += t.leaf_mass(x);
          // contrapositive of the component lemma, exact at this leaf
          bool some_component_large = false;
          for (int i = 0; i < d; ++i) {
            double dot = 0.0;
            for (int c = 0; c < d; ++c) dot += v[c] * ell.basis(c, i);
            if (std::abs(dot) > lambda / d * comp_avg[i] * (1 - 1e-9)) some_component_large = true;
          }
          CHECK(some_component_large);
        }
      }
      // scalar weak-type mass bound, with the empirical constant measured on
      // exactly the thresholds the proof uses
      double sum_bound = 0.0;
      for (int i = 0; i < d; ++i) {
        LeafFunction fi(t, 1);
        for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
          for (int c = 0; c < d; ++c) fi(x, 0) += f(x, c) * ell.basis(c, i);
        }
        auto tfi = trunc.apply(fi);
        double mass = 0.0;
        for (std::uint64_t x = 0; x < t.leaf_count(); ++x) {
          if (std::abs(tfi(x, 0)) > lambda / d * comp_avg[i]) mass += t.leaf_mass(x);
        }
        sum_bound += mass;
      }
      CHECK(escape_mass <= sum_bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("domination on a proper subcube: certificate restricted to Q0") {
  auto t = balanced_tree(5, 88);
  auto hs = build_haar_1d(t);
  Rng rng(89);
  auto shift = HaarShift::random(hs, 1, 0, rng, 1.0, 0.5);
  auto f = random_test_function(t, 2, rng);
  const CubeId q0{1, 1};
  auto res = build_sparse_balanced(shift, f, q0);
  CHECK(res.cert.all_pass);
  CHECK(res.cert.per_leaf.size() == t.leaves_under(q0));
  CHECK(res.family.contains(q0));
  // every family cube lies inside q0 or is q0 itself (construction is local)
  for (const auto& q : res.family.cubes) CHECK(t.contains(q0, q));
}
