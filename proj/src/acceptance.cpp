#include "dyadlab/acceptance.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dyadlab/carleson.hpp"
#include "dyadlab/json_io.hpp"
#include "dyadlab/matrix_weight.hpp"
#include "dyadlab/orlicz.hpp"
#include "dyadlab/sparse.hpp"
#include "dyadlab/zonotope.hpp"

namespace dyadlab::acceptance {

namespace {

using namespace dyadlab;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

MeasuredTree random_explicit_tree(int n, int L, double spread, Rng& rng) {
  const std::uint64_t nl = std::uint64_t{1} << (static_cast<std::uint64_t>(L) * n);
  std::vector<double> masses(nl);
  for (auto& m : masses) m = rng.log_uniform(1.0 / spread, spread);
  return MeasuredTree(n, L, std::move(masses));
}

MeasuredTree mixed_preset_tree(int n, int L, std::uint64_t seed, Rng& rng) {
  const int kind = rng.index(n == 1 ? 5 : 4);
  MeasurePreset p;
  p.seed = seed;
  switch (kind) {
    case 0:
      p.kind = PresetKind::lebesgue;
      return build_tree(n, L, p);
    case 1:
      p.kind = PresetKind::cantor_like;
      p.cantor_fraction = rng.uniform(0.15, 0.45);
      return build_tree(n, L, p);
    case 2:
      p.kind = PresetKind::exponential_imbalanced;
      p.ratio = rng.log_uniform(1.5, n == 1 ? 6.0 : 2.5);
      return build_tree(n, L, p);
    case 3:
      return random_explicit_tree(n, L, 20.0, rng);
    default:
      p.kind = PresetKind::random_balanced;
      p.balance_bound = 2.0;
      return build_tree(n, L, p);
  }
}

HaarSystem haar_for(const MeasuredTree& tree, Rng& rng) {
  if (tree.dimension() == 1) return build_haar_1d(tree);
  SplitSpec split = SplitSpec::halfspace(rng.index(tree.dimension()));
  if (rng.coin()) {
    // random per-cube bipartitions
    std::size_t cubes = 0;
    for (int lev = 0; lev < tree.depth(); ++lev) cubes += tree.cubes_at(lev);
    split.per_cube.resize(cubes);
    const std::uint32_t full = (1u << tree.branching()) - 1u;
    for (auto& m : split.per_cube) {
      std::uint32_t mask = 0;
      while (mask == 0 || mask == full) mask = static_cast<std::uint32_t>(rng.below(full + 1));
      m = mask;
    }
  }
  return build_haar_nd(tree, split);
}

double gram_deviation(const HaarSystem& hs) {
  const MeasuredTree& tree = hs.tree();
  double dev = 0.0;
  auto inner = [&](const CubeId& a, const CubeId& b) {
    double s = 0.0;
    const CubeId inner_cube = a.level >= b.level ? a : b;
    const std::uint64_t lo = tree.first_leaf(inner_cube), hi = lo + tree.leaves_under(inner_cube);
    for (std::uint64_t x = lo; x < hi; ++x) {
      s += hs.value_at_leaf(a, x) * hs.value_at_leaf(b, x) * tree.leaf_mass(x);
    }
    return s;
  };
  for (int lev = 0; lev < tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      if (hs.degenerate(q)) continue;
      dev = std::max(dev, std::abs(inner(q, q) - 1.0));
      // nested pairs only: disjoint supports vanish identically
      for (int lev2 = lev; lev2 < tree.depth(); ++lev2) {
        for (const CubeId& r : tree.descendants_at(q, lev2 - lev)) {
          if (r == q || hs.degenerate(r)) continue;
          dev = std::max(dev, std::abs(inner(q, r)));
        }
      }
    }
  }
  return dev;
}

struct PinSet {
  std::vector<std::pair<std::string, double>> pins;
  bool loaded = false;
};

PinSet load_pinset(const Options& opts) {
  PinSet ps;
  try {
    ps.pins = load_pins(opts.pins_path);
    ps.loaded = true;
  } catch (const std::exception&) {
    ps.loaded = false;
  }
  return ps;
}

bool check_pin(const PinSet& ps, const std::string& name, double achieved, std::string& note) {
  if (!ps.loaded) {
    note += " [pins file missing: " + name + " unchecked]";
    return false;
  }
  try {
    const double pin = pin_value(ps.pins, name);
    if (achieved > pin) {
      note += " [" + name + " exceeded: " + fmt(achieved) + " > " + fmt(pin) + "]";
      return false;
    }
    return true;
  } catch (const std::exception&) {
    note += " [pin missing: " + name + "]";
    return false;
  }
}

// ---------------------------------------------------------------- criterion 1
CriterionResult criterion_haar_validity(const Options& opts) {
  CriterionResult res{1, "haar validity (gram, m <= mu, norm product)", true, "", {}};
  const int trials = opts.quick ? 20 : 100;
  double worst_gram = 0.0, worst_product_low = 1.0, worst_m_excess = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(opts.seed, 1000 + trial));
    const int n = trial % 5 == 4 ? 2 : 1;
    const int L = n == 1 ? 4 + rng.index(3) : 2 + rng.index(2);
    auto tree = mixed_preset_tree(n, L, derive_seed(opts.seed, trial), rng);
    auto hs = haar_for(tree, rng);
    worst_gram = std::max(worst_gram, gram_deviation(hs));
    const double xi00 = xi(hs, 0, 0);
    for (int lev = 0; lev < tree.depth(); ++lev) {
      for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
        const CubeId q{lev, i};
        if (hs.degenerate(q)) continue;
        const double m = hs.m(q);
        worst_m_excess = std::max(worst_m_excess, m / tree.mu(q) - 1.0);
        const double prod = hs.norm_linf(q) * std::sqrt(m);
        worst_product_low = std::min(worst_product_low, prod);
        if (prod > xi00 * (1 + 1e-12)) res.pass = false;
      }
    }
  }
  if (worst_gram > 1e-9) res.pass = false;
  if (worst_m_excess > 1e-12) res.pass = false;
  if (worst_product_low < 1.0 - 1e-12) res.pass = false;
  res.achieved = {{"gram_deviation", worst_gram},
                  {"m_over_mu_excess", worst_m_excess},
                  {"min_norm_product", worst_product_low}};
  res.detail = "gram " + fmt(worst_gram) + ", m/mu excess " + fmt(worst_m_excess) +
               ", min ||h||_inf sqrt(m) " + fmt(worst_product_low);
  return res;
}

// ---------------------------------------------------------------- criterion 2
CriterionResult criterion_balanced_characterization(const Options& opts) {
  CriterionResult res{2, "balanced characterization and imbalance growth", true, "", {}};
  const int trials = opts.quick ? 8 : 30;
  double worst_hi = 0.0, worst_lo = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    MeasurePreset p;
    p.kind = PresetKind::random_balanced;
    p.balance_bound = 2.0;
    p.seed = derive_seed(opts.seed, 2000 + trial);
    auto tree = build_tree(1, 5 + trial % 2, p);
    auto hs = build_haar_1d(tree);
    const double x10 = xi(hs, 1, 0), x01 = xi(hs, 0, 1);
    for (int lev = 1; lev < tree.depth(); ++lev) {
      for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
        const CubeId q{lev, i};
        const double r = std::sqrt(hs.m(tree.parent(q)) / hs.m(q));
        worst_hi = std::max(worst_hi, r / x10);
        worst_lo = std::max(worst_lo, (1.0 / x01) / r);
        if (r > x10 * (1 + 1e-12) || r < (1.0 / x01) * (1 - 1e-12)) res.pass = false;
      }
    }
  }
  // imbalance sweep: Xi[1,0] Xi[0,1] grows monotonically with the ratio.
  // Depth 3 keeps every cube clear of the degeneracy cutoff at ratio 100.
  std::vector<double> products;
  for (double ratio : {2.0, 5.0, 10.0, 30.0, 100.0}) {
    MeasurePreset p;
    p.kind = PresetKind::exponential_imbalanced;
    p.ratio = ratio;
    auto tree = build_tree(1, 3, p);
    auto hs = build_haar_1d(tree);
    products.push_back(xi(hs, 1, 0) * xi(hs, 0, 1));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < products.size(); ++i) {
    if (products[i] <= products[i - 1]) monotone = false;
  }
  if (!monotone) res.pass = false;
  res.achieved = {{"chain_hi_slack", worst_hi}, {"chain_lo_slack", worst_lo},
                  {"xi_product_at_100", products.back()}};
  res.detail = "chain slacks " + fmt(worst_hi) + "/" + fmt(worst_lo) + ", xi-product sweep " +
               fmt(products.front()) + " -> " + fmt(products.back()) +
               (monotone ? " (monotone)" : " (NOT monotone)");
  return res;
}

// ---------------------------------------------------------------- criterion 3
CriterionResult criterion_convex_body(const Options& opts) {
  CriterionResult res{3, "convex body geometry (member/support, john, components)", true, "", {}};
  int violations = 0;
  const int zon_trials = opts.quick ? 40 : 200;
  for (int trial = 0; trial < zon_trials; ++trial) {
    Rng rng(derive_seed(opts.seed, 3000 + trial));
    const int d = 2 + rng.index(3);
    const int m = 4 + rng.index(61 - 4);
    Zonotope z(d);
    std::vector<double> g(d);
    for (int j = 0; j < m; ++j) {
      for (int c = 0; c < d; ++c) g[c] = rng.normal() * rng.log_uniform(0.3, 3.0);
      z.add_generator(g.data());
    }
    // member/support consistency on a batch of candidate points
    for (int pt = 0; pt < 4; ++pt) {
      std::vector<double> v(d);
      for (auto& c : v) c = rng.normal() * rng.log_uniform(0.2, 4.0);
      auto mem = member(v, z);
      if (mem.inside) {
        for (int k = 0; k < 1000; ++k) {
          std::vector<double> u(d);
          double dot = 0.0;
          for (int c = 0; c < d; ++c) u[c] = rng.normal();
          for (int c = 0; c < d; ++c) dot += u[c] * v[c];
          if (dot > z.support(u.data()) + 1e-9 * (1.0 + std::abs(dot))) ++violations;
        }
      } else {
        bool certified = false;
        if (mem.separator.size() == static_cast<std::size_t>(d)) {
          double dot = 0.0;
          for (int c = 0; c < d; ++c) dot += mem.separator[c] * v[c];
          if (std::abs(dot) >= z.support(mem.separator.data()) * (1 - 1e-6)) certified = true;
        }
        if (!certified) ++violations;
      }
    }
    // john sandwich
    auto e = john_ellipsoid(z, 1e-6);
    for (int k = 0; k < 12; ++k) {
      std::vector<double> s(d);
      double nrm = 0.0;
      for (auto& c : s) c = rng.normal();
      for (auto c : s) nrm += c * c;
      nrm = std::sqrt(nrm);
      for (auto& c : s) c /= nrm;
      if (!member(e.boundary_point(s), z, 1e-7).inside) ++violations;
      std::vector<double> u(d);
      for (int c = 0; c < d; ++c) u[c] = rng.normal();
      if (z.support(u.data()) > std::sqrt(double(d)) * (1 + 1e-5) * e.support(u.data()) * (1 + 1e-9)) {
        ++violations;
      }
    }
  }
  // component lemma instances: |v.e_j| <= A <|f.e_j|>_Q implies v in A d <<f>>_Q
  const int lem_trials = opts.quick ? 100 : 500;
  for (int trial = 0; trial < lem_trials; ++trial) {
    Rng rng(derive_seed(opts.seed, 3500 + trial));
    const int d = 1 + rng.index(3);
    auto tree = random_explicit_tree(1, 3 + rng.index(3), 10.0, rng);
    LeafFunction f(tree, d);
    for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
      for (int c = 0; c < d; ++c) f(x, c) = rng.normal() * rng.log_uniform(0.2, 4.0);
    }
    if (rng.uniform() < 0.2) {
      // rank-deficient direction mix
      for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
        for (int c = 1; c < d; ++c) f(x, c) = 2.0 * f(x, 0);
      }
    }
    const int lev = rng.index(tree.depth());
    const CubeId q{lev, rng.below(tree.cubes_at(lev))};
    auto body = convex_body_avg(f, q);
    auto ell = john_ellipsoid(body, 1e-7);
    const double a = rng.log_uniform(0.5, 3.0);
    std::vector<double> v(d, 0.0);
    for (int jdx = 0; jdx < d; ++jdx) {
      // <|f . e_j|>_Q in the john basis
      double comp = 0.0;
      for (std::uint64_t x = tree.first_leaf(q); x < tree.first_leaf(q) + tree.leaves_under(q); ++x) {
        double dot = 0.0;
        for (int c = 0; c < d; ++c) dot += f(x, c) * ell.basis(c, jdx);
        comp += std::abs(dot) * tree.leaf_mass(x);
      }
      comp /= tree.mu(q);
      const double coeff = rng.sign() * rng.uniform(0.0, 1.0) * a * comp;
      for (int c = 0; c < d; ++c) v[c] += coeff * ell.basis(c, jdx);
    }
    auto mem = member(v, {{a * d, &body}});
    if (!mem.inside) ++violations;
  }
  if (violations > 0) res.pass = false;
  res.achieved = {{"violations", double(violations)}};
  res.detail = fmt(double(violations)) + " violations across member/support, john, component tests";
  return res;
}

// ---------------------------------------------------------------- criterion 4
struct CuratedPlainFail {
  std::uint64_t tree_seed, shift_seed, f_seed;
  int depth, d, s, t;
};

// found by seed search: balanced measures where the plain-mode recheck fails at
// 10x the construction constant while the modified mode passes
constexpr CuratedPlainFail kCurated[] = {
    {10, 1001, 10022, 6, 2, 1, 1},
    {13, 1301, 13012, 6, 2, 1, 1},
    {21, 2101, 21022, 6, 2, 0, 1},
};

CriterionResult criterion_theorem_a_balanced(const Options& opts) {
  CriterionResult res{4, "theorem A, balanced regime (modified certificates)", true, "", {}};
  const int trials = opts.quick ? 10 : 50;
  double min_eta = 1.0, max_c = 0.0;
  int failing = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(opts.seed, 4000 + trial));
    MeasurePreset p;
    p.kind = PresetKind::random_balanced;
    p.balance_bound = 2.0;
    p.seed = derive_seed(opts.seed, 4100 + trial);
    auto tree = build_tree(1, 5 + trial % 2, p);
    auto hs = build_haar_1d(tree);
    static constexpr int kComplexities[][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 0}, {0, 2}};
    const auto& st = kComplexities[trial % 6];
    auto shift = HaarShift::random(hs, st[0], st[1], rng, 1.0, 0.4);
    const int d = 1 + trial % 3;
    auto f = random_test_function(tree, d, rng);
    auto out = build_sparse_balanced(shift, f, tree.root());
    if (!out.cert.all_pass) ++failing;
    min_eta = std::min(min_eta, out.sparseness.eta_achieved);
    max_c = std::max(max_c, out.cert.C);
  }
  if (failing > 0 || min_eta < 0.1) res.pass = false;

  // curated necessity-of-the-modified-term demonstrations
  int curated_ok = 0;
  for (const auto& cur : kCurated) {
    MeasurePreset p;
    p.kind = PresetKind::random_balanced;
    p.balance_bound = 2.0;
    p.seed = cur.tree_seed;
    auto tree = build_tree(1, cur.depth, p);
    auto hs = build_haar_1d(tree);
    Rng srng(cur.shift_seed);
    auto shift = HaarShift::random(hs, cur.s, cur.t, srng, 1.0, 0.5);
    Rng frng(cur.f_seed);
    auto f = random_test_function(tree, cur.d, frng, 3);
    auto out = build_sparse_balanced(shift, f, tree.root());
    if (!out.cert.all_pass) continue;
    auto tf = shift.apply(f);
    auto plain = check_certificate(tf, f, out.family, tree.root(), 10.0 * out.cert.C,
                                   DominationMode::plain, out.cert.N, hs);
    if (!plain.all_pass) ++curated_ok;
  }
  if (curated_ok < 3) res.pass = false;
  res.achieved = {{"failing_instances", double(failing)},
                  {"min_eta", min_eta},
                  {"max_C", max_c},
                  {"curated_plain_failures", double(curated_ok)}};
  res.detail = fmt(double(failing)) + " failing instances, min eta " + fmt(min_eta) + ", max C " +
               fmt(max_c) + ", curated plain-mode failures " + fmt(double(curated_ok)) + "/3";
  return res;
}

// ---------------------------------------------------------------- criterion 5
CriterionResult criterion_theorem_a_l1(const Options& opts, const PinSet& pins) {
  CriterionResult res{5, "theorem A, L1-normalized regime (plain certificates)", true, "", {}};
  const int trials = opts.quick ? 12 : 50;
  int failing = 0;
  // track C per total complexity for the linear-growth check
  std::vector<double> max_c_by_n(5, 0.0);
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(opts.seed, 5000 + trial));
    MeasuredTree tree = [&]() {
      switch (trial % 3) {
        case 0: {
          MeasurePreset p;
          p.kind = PresetKind::exponential_imbalanced;
          p.ratio = rng.log_uniform(3.0, 20.0);
          return build_tree(1, 5, p);
        }
        case 1: {
          MeasurePreset p;
          p.kind = PresetKind::cantor_like;
          p.cantor_fraction = rng.uniform(0.1, 0.3);
          return build_tree(1, 6, p);
        }
        default:
          return random_explicit_tree(1, 5, 50.0, rng);
      }
    }();
    auto hs = build_haar_1d(tree);
    static constexpr int kComplexities[][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1},
                                               {2, 0}, {0, 2}, {2, 1}, {2, 2}};
    const auto& st = kComplexities[trial % 8];
    if (st[0] + st[1] + 1 > tree.depth() - 1) continue;
    auto shift = HaarShift::random_l1_normalized(hs, st[0], st[1], rng, 1.0);
    const int d = 1 + trial % 2;
    auto f = random_test_function(tree, d, rng);
    auto out = build_sparse_l1(shift, f, tree.root());
    if (!out.cert.all_pass) ++failing;
    const int n = st[0] + st[1];
    max_c_by_n[n] = std::max(max_c_by_n[n], out.cert.C);
  }
  if (failing > 0) res.pass = false;
  // no superlinear blowup: C(N) <= kappa_lin (N + 1) against the pinned slope
  double worst_slope = 0.0;
  for (int n = 0; n < 5; ++n) {
    if (max_c_by_n[n] > 0) worst_slope = std::max(worst_slope, max_c_by_n[n] / (n + 1.0));
  }
  std::string note;
  if (!check_pin(pins, "kappa_l1_linear", worst_slope, note)) res.pass = false;
  res.achieved = {{"failing_instances", double(failing)}, {"kappa_l1_linear", worst_slope}};
  res.detail = fmt(double(failing)) + " failing instances, C/(N+1) max " + fmt(worst_slope) + note;
  return res;
}

// ---------------------------------------------------------------- criterion 6
CriterionResult criterion_multiplier(const Options& opts) {
  CriterionResult res{6, "martingale multiplier construction over non-doubling measures", true,
                      "", {}};
  const int trials = opts.quick ? 12 : 50;
  int failing = 0;
  double min_eta = 1.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(opts.seed, 6000 + trial));
    MeasuredTree tree = [&]() {
      switch (trial % 3) {
        case 0: {
          MeasurePreset p;
          p.kind = PresetKind::cantor_like;
          p.cantor_fraction = rng.uniform(0.08, 0.3);
          return build_tree(1, 6, p);
        }
        case 1: {
          MeasurePreset p;
          p.kind = PresetKind::exponential_imbalanced;
          p.ratio = rng.log_uniform(4.0, 40.0);
          return build_tree(1, 5, p);
        }
        default:
          return random_explicit_tree(1, 6, 100.0, rng);
      }
    }();
    auto hs = build_haar_1d(tree);
    auto sigma = MartingaleMultiplier::random(tree, rng);
    const int d = 1 + trial % 3;
    auto f = random_test_function(tree, d, rng);
    auto out = build_sparse_multiplier(sigma, f, tree.root(), hs);
    if (!out.cert.all_pass) ++failing;
    min_eta = std::min(min_eta, out.sparseness.eta_achieved);
  }
  if (failing > 0 || min_eta < 0.4) res.pass = false;
  res.achieved = {{"failing_instances", double(failing)}, {"min_eta", min_eta}};
  res.detail = fmt(double(failing)) + " failing instances, min eta " + fmt(min_eta);
  return res;
}

// ---------------------------------------------------------------- criterion 7
CriterionResult criterion_carleson(const Options& opts, const PinSet& pins) {
  CriterionResult res{7, "generalized Carleson embedding (exact p=2 oracle + ascent)", true, "", {}};
  const int families = opts.quick ? 40 : 200;
  int lower_violations = 0;
  double kappa2 = 0.0;
  double worst_classical_dev = 0.0;
  double kappa15 = 0.0, kappa3 = 0.0;
  for (int trial = 0; trial < families; ++trial) {
    Rng rng(derive_seed(opts.seed, 7000 + trial));
    auto tree = random_explicit_tree(1, 4, 8.0, rng);
    const int kind = trial % 3;
    WeightFamily fam = [&]() {
      if (kind == 0) {
        std::vector<double> w(tree.leaf_count());
        for (auto& v : w) v = rng.log_uniform(0.1, 10.0);
        return WeightFamily::constant(tree, w);
      }
      if (kind == 1) {
        auto w = MatrixWeight::random_iid(tree, 1 + rng.index(3), 100.0, rng);
        return WeightFamily::from_matrix_weight(w, 2.0);
      }
      return WeightFamily::random_adversarial(tree, rng, 50.0);
    }();
    auto alpha = CarlesonData::zeros(tree);
    if (trial % 2 == 0) {
      for (auto& a : alpha.alpha) a = rng.uniform() < 0.5 ? rng.log_uniform(0.01, 2.0) : 0.0;
    } else {
      // sparse-family alphas: alpha_Q = mu(Q) on a random subfamily
      std::size_t flat = 0;
      for (int lev = 0; lev <= tree.depth(); ++lev) {
        for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i, ++flat) {
          if (rng.uniform() < 0.35) alpha.alpha[flat] = tree.mu(CubeId{lev, i});
        }
      }
    }
    auto rep = verify_embedding_bounds(fam, alpha, 2.0, derive_seed(opts.seed, trial));
    if (!rep.lower_ok && rep.C2 > 0) ++lower_violations;
    if (rep.C2 > 0) kappa2 = std::max(kappa2, rep.upper_ratio);

    if (kind == 0 && trial % 5 == 0) {
      // classical checker specialization at p in {1.5, 3}
      std::vector<double> w(tree.leaf_count());
      for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) w[x] = fam.at(tree.leaf_cube(x), x);
      for (double p : {1.5, 3.0}) {
        const double mine = testing_constant_c2(fam, alpha, p);
        const double cls = classical_c2(tree, w, alpha, p);
        worst_classical_dev =
            std::max(worst_classical_dev, std::abs(mine - cls) / std::max(1e-30, cls));
      }
    }
    if (trial % 7 == 0) {
      for (double p : {1.5, 3.0}) {
        auto repp = verify_embedding_bounds(fam, alpha, p, derive_seed(opts.seed, trial * 2));
        if (repp.C2 > 0) (p < 2 ? kappa15 : kappa3) = std::max(p < 2 ? kappa15 : kappa3, repp.upper_ratio);
      }
    }
  }
  std::string note;
  bool pins_ok = check_pin(pins, "kappa_carleson_p2", kappa2, note);
  pins_ok &= check_pin(pins, "kappa_carleson_p15", kappa15, note);
  pins_ok &= check_pin(pins, "kappa_carleson_p3", kappa3, note);
  if (lower_violations > 0 || !pins_ok || worst_classical_dev > 1e-10) res.pass = false;
  res.achieved = {{"lower_violations", double(lower_violations)},
                  {"kappa_carleson_p2", kappa2},
                  {"kappa_carleson_p15", kappa15},
                  {"kappa_carleson_p3", kappa3},
                  {"classical_dev", worst_classical_dev}};
  res.detail = fmt(double(lower_violations)) + " lower violations, kappa(p=2) " + fmt(kappa2) +
               ", kappa(1.5/3) " + fmt(kappa15) + "/" + fmt(kappa3) + ", classical dev " +
               fmt(worst_classical_dev) + note;
  return res;
}

// ---------------------------------------------------------------- criterion 8
CriterionResult criterion_theorem_b(const Options& opts, const PinSet& pins) {
  CriterionResult res{8, "theorem B at p=2: multiplier norms vs [W]_{A2}^{3/2}", true, "", {}};
  const int trials = opts.quick ? 20 : 100;
  double kappa = 0.0;
  double exp_band = 0.0;
  std::filesystem::create_directories(opts.out_dir);
  std::ofstream csv(opts.out_dir + "/theorem_b_scatter.csv");
  csv << "instance,d,A2,multiplier_norm,ratio\n";
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(opts.seed, 8000 + trial));
    auto tree = random_explicit_tree(1, 4 + trial % 2, 6.0, rng);
    const int d = 1 + trial % 3;
    auto w = trial % 2 == 0 ? MatrixWeight::random_iid(tree, d, 1000.0, rng)
                            : MatrixWeight::random_smooth(tree, d, 1000.0, rng);
    auto sigma = MartingaleMultiplier::random(tree, rng);
    const double a2 = ap_constant(w, 2.0).value;
    const double norm = opnorm_l2w(tree, w, sigma);
    const double ratio = norm / std::pow(a2, 1.5);
    kappa = std::max(kappa, ratio);
    csv << trial << "," << d << "," << a2 << "," << norm << "," << ratio << "\n";

    if (trial % 10 == 0) {
      // expectation operator band: ||E_Q||^2 within a d-band of the Q-term
      MatrixWeight v = w.inverse_power(-1.0);
      for (int lev = 0; lev <= tree.depth(); lev += 2) {
        const CubeId q{lev, rng.below(tree.cubes_at(lev))};
        const double nq = opnorm_l2w_expectation(tree, w, q);
        // Q-term of [W]_{A2}: avg_Q ( avg_Q |W^{1/2}(x) W^{-1/2}(y)|^2 )
        double term = 0.0;
        const auto& wh = w.powers(0.5);
        const auto& whi = w.powers(-0.5);
        const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
        for (std::uint64_t x = a; x < b; ++x) {
          double inner = 0.0;
          for (std::uint64_t y = a; y < b; ++y) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(wh[x] * whi[y]);
            inner += svd.singularValues()[0] * svd.singularValues()[0] * tree.leaf_mass(y);
          }
          term += inner / tree.mu(q) * tree.leaf_mass(x);
        }
        term /= tree.mu(q);
        const double band = std::max(nq * nq / term, term / (nq * nq));
        exp_band = std::max(exp_band, band);
      }
    }
  }
  std::string note;
  bool ok = check_pin(pins, "kappa_theorem_b", kappa, note);
  // Prop 2.16 factor-d band (d <= 3)
  if (exp_band > 3.0 * (1 + 1e-9)) ok = false;
  if (!ok) res.pass = false;
  res.achieved = {{"kappa_theorem_b", kappa}, {"expectation_band", exp_band}};
  res.detail = "kappa " + fmt(kappa) + ", expectation band " + fmt(exp_band) + note +
               "; scatter in " + opts.out_dir + "/theorem_b_scatter.csv";
  return res;
}

// ---------------------------------------------------------------- criterion 9
CriterionResult criterion_necessity(const Options& opts, const PinSet& pins) {
  CriterionResult res{9, "necessity (rank-one shifts) and A_p^b <= A_p^N stability", true, "", {}};
  const int trials = opts.quick ? 20 : 100;
  const int N = 2;
  double kappa = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(opts.seed, 9000 + trial));
    auto tree = random_explicit_tree(1, 4 + trial % 2, 6.0, rng);
    auto hs = build_haar_1d(tree);
    const int d = 1 + trial % 3;
    auto w = MatrixWeight::random_iid(tree, d, 100.0, rng);
    // random pair with dist <= N+2, both non-root
    CubeId j, k;
    for (;;) {
      const int lj = 1 + rng.index(tree.depth()), lk = 1 + rng.index(tree.depth());
      j = CubeId{lj, rng.below(tree.cubes_at(lj))};
      k = CubeId{lk, rng.below(tree.cubes_at(lk))};
      if (tree.dyadic_distance(j, k) <= N + 2) break;
    }
    auto out = necessity_experiment(w, 2.0, hs, j, k);
    kappa = std::max(kappa, out.ratio);
  }
  // stability: [W]_{A_p^b} <= [W]_{A_p^N} exactly on every instance
  int stability_violations = 0;
  const int stab_trials = opts.quick ? 6 : 20;
  for (int trial = 0; trial < stab_trials; ++trial) {
    Rng rng(derive_seed(opts.seed, 9500 + trial));
    auto tree = random_explicit_tree(1, 4, 8.0, rng);
    auto hs = build_haar_1d(tree);
    auto w = MatrixWeight::random_iid(tree, 1 + rng.index(2), 60.0, rng);
    for (double p : {2.0, 1.5}) {
      const double apb = apb_constant(w, p, hs).value;
      const double apn = apN_constant(w, p, 1 + trial % 2, hs).value;
      if (apb > apn * (1 + 1e-12)) ++stability_violations;
    }
  }
  std::string note;
  bool ok = check_pin(pins, "kappa_necessity", kappa, note);
  if (stability_violations > 0 || !ok) res.pass = false;
  res.achieved = {{"kappa_necessity", kappa},
                  {"stability_violations", double(stability_violations)}};
  res.detail = "kappa " + fmt(kappa) + ", stability violations " +
               fmt(double(stability_violations)) + note;
  return res;
}

// --------------------------------------------------------------- criterion 10
CriterionResult criterion_fuzz_floor(const Options& opts) {
  CriterionResult res{10, "inequality fuzz floor (expanding sum, pointwise-to-form, hoelder, CZ)",
                      true, "", {}};
  int violations = 0;
  const int big = opts.quick ? 1000 : 10000;

  // expanding sum
  {
    Rng rng(derive_seed(opts.seed, 10100));
    static constexpr double kPs[] = {1.5, 2.0, 2.7, 3.0};
    for (int trial = 0; trial < big; ++trial) {
      const int n = 1 + rng.index(8);
      std::vector<double> a(n);
      for (auto& v : a) v = rng.uniform() < 0.15 ? 0.0 : rng.log_uniform(0.01, 50.0);
      if (!expanding_sum_check(a, kPs[trial % 4]).ok) ++violations;
    }
  }
  // pointwise-to-form
  {
    Rng rng(derive_seed(opts.seed, 10200));
    for (int trial = 0; trial < big; ++trial) {
      auto tree = random_explicit_tree(1, 3, 10.0, rng);
      const int d = 1 + rng.index(2);
      LeafFunction f(tree, d), g(tree, d);
      for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
        for (int c = 0; c < d; ++c) {
          f(x, c) = rng.normal();
          g(x, c) = rng.normal();
        }
      }
      SparseFamily fam;
      fam.tree = &tree;
      for (int lev = 0; lev <= tree.depth(); ++lev) {
        for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
          if (rng.uniform() < 0.35) fam.cubes.push_back({lev, i});
        }
      }
      if (fam.cubes.empty()) fam.cubes.push_back(tree.root());
      std::sort(fam.cubes.begin(), fam.cubes.end());
      if (!pointwise_form_check(fam, f, g).ok) ++violations;
    }
  }
  // generalized hoelder
  {
    Rng rng(derive_seed(opts.seed, 10300));
    const auto phi1 = YoungFunction::power(2.0);
    const auto phi2 = YoungFunction::power(1.7);
    const auto phi3 = YoungFunction::power_log(2.0, -1.2);
    const YoungFunction* phis[] = {&phi1, &phi2, &phi3};
    const YoungFunction duals[] = {dual_young(phi1), dual_young(phi2), dual_young(phi3)};
    for (int trial = 0; trial < big; ++trial) {
      auto tree = random_explicit_tree(1, 3, 8.0, rng);
      LeafFunction f(tree, 1), g(tree, 1);
      for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
        f(x, 0) = rng.normal() * rng.log_uniform(0.1, 5.0);
        g(x, 0) = rng.normal() * rng.log_uniform(0.1, 5.0);
      }
      const int lev = rng.index(tree.depth() + 1);
      const CubeId q{lev, rng.below(tree.cubes_at(lev))};
      const int pi = trial % 3;
      double avg = 0.0;
      for (std::uint64_t x = tree.first_leaf(q); x < tree.first_leaf(q) + tree.leaves_under(q); ++x) {
        avg += std::abs(f(x, 0) * g(x, 0)) * tree.leaf_mass(x);
      }
      avg /= tree.mu(q);
      const double bound =
          2.0 * local_orlicz_norm(f, q, *phis[pi]) * local_orlicz_norm(g, q, duals[pi]);
      if (avg > bound * (1 + 1e-9) + 1e-300) ++violations;
    }
  }
  // CZ invariants
  {
    Rng rng(derive_seed(opts.seed, 10400));
    const int trials = opts.quick ? 100 : 1000;
    for (int trial = 0; trial < trials; ++trial) {
      auto tree = random_explicit_tree(1, 4 + rng.index(2), 20.0, rng);
      auto f = random_test_function(tree, 1, rng, 1 + rng.index(3));
      const double f1 = f.norm_l1();
      if (f1 <= 0) continue;
      const double lambda = rng.log_uniform(0.1, 10.0) * f1 / tree.total_mass();
      auto cz = cz_decompose(f, lambda);
      const double scale = std::max(1.0, f.max_abs());
      for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
        if (std::abs(cz.g(x, 0) + cz.b(x, 0) - f(x, 0)) > 1e-12 * scale) ++violations;
      }
      for (std::size_t kk = 0; kk < cz.b_parts.size(); ++kk) {
        const CubeId qk = cz.stopping_cubes[kk];
        const CubeId up = qk.level == 0 ? qk : tree.parent(qk);
        double mean = 0.0;
        for (std::uint64_t x = tree.first_leaf(up); x < tree.first_leaf(up) + tree.leaves_under(up); ++x) {
          mean += cz.b_parts[kk](x, 0) * tree.leaf_mass(x);
        }
        if (std::abs(mean) > 1e-12 * f1) ++violations;
        double avg = 0.0;
        for (std::uint64_t x = tree.first_leaf(qk); x < tree.first_leaf(qk) + tree.leaves_under(qk); ++x) {
          avg += std::abs(f(x, 0)) * tree.leaf_mass(x);
        }
        if (!(avg / tree.mu(qk) > lambda)) ++violations;
      }
    }
  }
  if (violations > 0) res.pass = false;
  res.achieved = {{"violations", double(violations)}};
  res.detail = fmt(double(violations)) + " violations across the four fuzz batteries";
  return res;
}

// --------------------------------------------------------------- criterion 11
CriterionResult criterion_orlicz_maximal(const Options& opts) {
  CriterionResult res{11, "orlicz maximal operator: B_p stability vs t^p divergence", true, "", {}};
  const double p = 2.0;
  // Spike extremals of M_Phi stabilize at rate 2^{-k(p/q-1)} down the scales:
  // the power-type B_p gauges saturate inside depth 4, while t^p never does.
  // The log-bump tail decays only like log^{-3/2}, so its supremum is still
  // drifting at depth 8; it is recorded below but not gated.
  const auto bp1 = YoungFunction::power(1.2);
  const auto bp2 = YoungFunction::power(4.0 / 3.0);
  const auto logbump = YoungFunction::power_log(2.0, -1.5);
  const auto div = YoungFunction::power(2.0);
  const int fcount = opts.quick ? 40 : 200;

  auto stat = [&](const YoungFunction& phi, int depth) {
    MeasurePreset pr;
    auto tree = build_tree(1, depth, pr);
    double best = 0.0;
    for (int trial = 0; trial < fcount; ++trial) {
      Rng rng(derive_seed(opts.seed, 11000 + trial));
      LeafFunction f(tree, 1);
      // spike ensemble saturates the maximal operator quickly
      const int spikes = 1 + rng.index(3);
      for (int s = 0; s < spikes; ++s) {
        const std::uint64_t x = rng.below(tree.leaf_count());
        f(x, 0) += rng.log_uniform(0.5, 2.0) / tree.leaf_mass(x);
      }
      auto mf = orlicz_maximal(f, phi);
      const double r = mf.norm_lp(p) / f.norm_lp(p);
      best = std::max(best, r);
    }
    return best;
  };

  double bp_drift = 0.0;
  for (const auto* phi : {&bp1, &bp2}) {
    const double s4 = stat(*phi, 4);
    const double s8 = stat(*phi, 8);
    bp_drift = std::max(bp_drift, std::abs(s8 - s4) / s4);
  }
  const double logbump_drift = std::abs(stat(logbump, 8) - stat(logbump, 4)) / stat(logbump, 4);
  const double d4 = stat(div, 4), d8 = stat(div, 8);
  const double div_growth = d8 / d4;
  if (bp_drift > 0.10) res.pass = false;
  if (div_growth < 1.15) res.pass = false;  // divergence trend must be flagged
  res.achieved = {{"bp_drift", bp_drift},
                  {"divergence_growth", div_growth},
                  {"logbump_drift_recorded", logbump_drift}};
  res.detail = "B_p drift " + fmt(bp_drift) + " (<= 0.10), t^p growth " + fmt(div_growth) +
               " (>= 1.15), log-bump drift " + fmt(logbump_drift) + " (recorded)";
  return res;
}

}  // namespace

CriterionResult run_criterion(int id, const Options& opts) {
  const PinSet pins = load_pinset(opts);
  switch (id) {
    case 1:
      return criterion_haar_validity(opts);
    case 2:
      return criterion_balanced_characterization(opts);
    case 3:
      return criterion_convex_body(opts);
    case 4:
      return criterion_theorem_a_balanced(opts);
    case 5:
      return criterion_theorem_a_l1(opts, pins);
    case 6:
      return criterion_multiplier(opts);
    case 7:
      return criterion_carleson(opts, pins);
    case 8:
      return criterion_theorem_b(opts, pins);
    case 9:
      return criterion_necessity(opts, pins);
    case 10:
      return criterion_fuzz_floor(opts);
    case 11:
      return criterion_orlicz_maximal(opts);
    default:
      throw std::invalid_argument("unknown acceptance criterion id");
  }
}

std::vector<CriterionResult> run_all(const Options& opts) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= 11; ++id) out.push_back(run_criterion(id, opts));
  return out;
}

}  // namespace dyadlab::acceptance
