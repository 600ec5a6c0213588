#include "dyadlab/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace dyadlab {

bool SparseFamily::contains(const CubeId& q) const {
  return std::binary_search(cubes.begin(), cubes.end(), q);
}

SparsenessReport verify_sparseness(SparseFamily& family) {
  const MeasuredTree& tree = *family.tree;
  SparsenessReport rep;
  if (family.cubes.empty()) {
    rep.eta_achieved = rep.eta_greedy_full = 1.0;
    rep.lambda_carleson = 0.0;
    return rep;
  }

  // exact Carleson constant: max over P of sum_{Q in S, Q subset P} mu(Q) / mu(P)
  {
    std::vector<std::vector<double>> acc(tree.depth() + 1);
    for (int lev = 0; lev <= tree.depth(); ++lev) acc[lev].assign(tree.cubes_at(lev), 0.0);
    for (const CubeId& q : family.cubes) {
      CubeId p = q;
      for (;;) {
        acc[p.level][p.index] += tree.mu(q);
        if (p.level == 0) break;
        p = tree.parent(p);
      }
    }
    for (int lev = 0; lev <= tree.depth(); ++lev) {
      for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
        if (acc[lev][i] > 0.0) {
          rep.lambda_carleson = std::max(rep.lambda_carleson, acc[lev][i] / tree.mu(lev, i));
        }
      }
    }
  }

  // order deepest-first (and by index for determinism)
  std::vector<std::size_t> order(family.cubes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const CubeId &qa = family.cubes[a], &qb = family.cubes[b];
    if (qa.level != qb.level) return qa.level > qb.level;
    return qa.index < qb.index;
  });

  // claim-everything greedy: each cube takes all still-unclaimed leaves below it
  {
    std::vector<char> claimed(tree.leaf_count(), 0);
    double worst = 1.0;
    for (std::size_t oi : order) {
      const CubeId& q = family.cubes[oi];
      double got = 0.0;
      const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b; ++x) {
        if (!claimed[x]) {
          got += tree.leaf_mass(x);
          claimed[x] = 1;
        }
      }
      worst = std::min(worst, got / tree.mu(q));
    }
    rep.eta_greedy_full = worst;
  }

  // certified eta: binary-search the target fraction. Each cube draws mass from
  // the remaining budget of its leaves (a Borel set may take part of a leaf
  // cube), deepest cubes first; for a laminar family this greedy is exact.
  auto attempt = [&](double eta, std::vector<std::vector<std::pair<std::uint64_t, double>>>* out) {
    std::vector<double> remaining(tree.leaf_count());
    for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) remaining[x] = tree.leaf_mass(x);
    std::vector<std::vector<std::pair<std::uint64_t, double>>> sets(family.cubes.size());
    for (std::size_t oi : order) {
      const CubeId& q = family.cubes[oi];
      double need = eta * tree.mu(q);
      const double target = need;
      std::vector<std::pair<std::uint64_t, double>> take;
      const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b && need > 0.0; ++x) {
        if (remaining[x] <= 0.0) continue;
        const double grab = std::min(remaining[x], need);
        remaining[x] -= grab;
        need -= grab;
        take.push_back({x, grab});
      }
      if (need > 1e-12 * (target + 1.0)) return false;
      sets[oi] = std::move(take);
    }
    if (out) *out = std::move(sets);
    return true;
  };

  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 48; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (attempt(mid, nullptr)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  rep.eta_achieved = lo;
  family.eta_claimed = lo;
  if (lo > 0.0) {
    std::vector<std::vector<std::pair<std::uint64_t, double>>> sets;
    attempt(lo, &sets);
    family.disjoint_sets = std::move(sets);
  }
  return rep;
}

double sparse_form(const SparseFamily& s, const LeafFunction& f, const LeafFunction& g) {
  if (f.dim() != g.dim()) throw std::invalid_argument("sparse_form: dimension mismatch");
  const MeasuredTree& tree = *s.tree;
  f.check_same_tree(tree);
  g.check_same_tree(tree);
  const int d = f.dim();
  double total = 0.0;
  for (const CubeId& q : s.cubes) {
    const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
    double acc = 0.0;
    for (std::uint64_t x = a; x < b; ++x) {
      const double mx = tree.leaf_mass(x);
      for (std::uint64_t y = a; y < b; ++y) {
        double dot = 0.0;
        for (int c = 0; c < d; ++c) dot += f(x, c) * g(y, c);
        acc += std::abs(dot) * mx * tree.leaf_mass(y);
      }
    }
    total += acc / tree.mu(q);
  }
  return total;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> close_pairs(const SparseFamily& s, int N) {
  const MeasuredTree& tree = *s.tree;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < s.cubes.size(); ++i) {
    for (std::size_t j = 0; j < s.cubes.size(); ++j) {
      if (tree.dyadic_distance(s.cubes[i], s.cubes[j]) <= N + 2) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

}  // namespace

double modified_sparse_form(const SparseFamily& s, int N, const HaarSystem& m_source,
                            const LeafFunction& f, const LeafFunction& g) {
  if (f.dim() != g.dim()) throw std::invalid_argument("modified_sparse_form: dimension mismatch");
  const MeasuredTree& tree = *s.tree;
  const int d = f.dim();
  double total = 0.0;
  for (const auto& [ji, ki] : close_pairs(s, N)) {
    const CubeId &J = s.cubes[ji], &K = s.cubes[ki];
    const double w = std::sqrt(m_source.m_ext(J)) * std::sqrt(m_source.m_ext(K));
    const std::uint64_t ja = tree.first_leaf(J), jb = ja + tree.leaves_under(J);
    const std::uint64_t ka = tree.first_leaf(K), kb = ka + tree.leaves_under(K);
    double acc = 0.0;
    for (std::uint64_t x = ja; x < jb; ++x) {
      const double mx = tree.leaf_mass(x);
      for (std::uint64_t y = ka; y < kb; ++y) {
        double dot = 0.0;
        for (int c = 0; c < d; ++c) dot += f(x, c) * g(y, c);
        acc += std::abs(dot) * mx * tree.leaf_mass(y);
      }
    }
    total += acc / (tree.mu(J) * tree.mu(K)) * w;
  }
  return total;
}

PointwiseFormCheck pointwise_form_check(const SparseFamily& s, const LeafFunction& f,
                                        const LeafFunction& g) {
  const MeasuredTree& tree = *s.tree;
  const int d = f.dim();
  PointwiseFormCheck out;
  // |L_S f(y) . g(y)| = sum over S-cubes containing y of the support of <<f>>_Q
  // in direction g(y); supports add over Minkowski sums of symmetric bodies
  std::vector<Zonotope> bodies;
  bodies.reserve(s.cubes.size());
  for (const CubeId& q : s.cubes) bodies.push_back(convex_body_avg(f, q));
  std::vector<double> gy(d);
  for (std::uint64_t y = 0; y < tree.leaf_count(); ++y) {
    for (int c = 0; c < d; ++c) gy[c] = g(y, c);
    double v = 0.0;
    for (std::size_t i = 0; i < s.cubes.size(); ++i) {
      if (!tree.contains(s.cubes[i], tree.leaf_cube(y))) continue;
      v += bodies[i].support(gy.data());
    }
    out.lhs += v * tree.leaf_mass(y);
  }
  out.rhs = sparse_form(s, f, g);
  out.ok = out.lhs <= out.rhs + 1e-9 * (1.0 + std::abs(out.rhs));
  return out;
}

DominationCertificate check_certificate(const LeafFunction& tf, const LeafFunction& f,
                                        const SparseFamily& family, const CubeId& q0, double C,
                                        DominationMode mode, int N, const HaarSystem& hs) {
  const MeasuredTree& tree = *family.tree;
  DominationCertificate cert;
  cert.mode = mode;
  cert.C = C;
  cert.N = N;
  cert.q0 = q0;

  // cache per-cube bodies
  std::vector<Zonotope> bodies;
  bodies.reserve(family.cubes.size());
  for (const CubeId& q : family.cubes) bodies.push_back(convex_body_avg(f, q).merged());

  // modified pairs grouped by the K index
  std::vector<std::vector<std::pair<std::size_t, double>>> by_k(family.cubes.size());
  if (mode == DominationMode::modified) {
    for (const auto& [ji, ki] : close_pairs(family, N)) {
      const CubeId &J = family.cubes[ji], &K = family.cubes[ki];
      const double w = std::sqrt(hs.m_ext(J)) * std::sqrt(hs.m_ext(K)) / tree.mu(K);
      by_k[ki].emplace_back(ji, w);
    }
  }

  const std::uint64_t a = tree.first_leaf(q0), b = a + tree.leaves_under(q0);
  cert.per_leaf.resize(b - a);
  cert.all_pass = true;
  const int d = f.dim();
  std::vector<double> v(d);
  for (std::uint64_t x = a; x < b; ++x) {
    std::vector<std::pair<double, const Zonotope*>> combo;
    for (std::size_t i = 0; i < family.cubes.size(); ++i) {
      if (!tree.contains(family.cubes[i], tree.leaf_cube(x))) continue;
      combo.emplace_back(C, &bodies[i]);
      for (const auto& [ji, w] : by_k[i]) combo.emplace_back(C * w, &bodies[ji]);
    }
    for (int c = 0; c < d; ++c) v[c] = tf(x, c);
    auto res = member(v, combo);
    LeafVerdict verdict{res.inside, res.residual};
    cert.per_leaf[x - a] = verdict;
    if (!verdict.pass) {
      cert.all_pass = false;
      ++cert.failing_leaves;
      if (verdict.residual > cert.worst_residual) {
        cert.worst_residual = verdict.residual;
        cert.worst_leaf = x;
      }
    }
  }
  return cert;
}

namespace {

enum class StopMode { balanced, l1 };

// per-level operator contributions below q0: contrib[lev - base][leaf] in R^d
struct LevelContribs {
  int base = 0;
  std::vector<LeafFunction> per_level;
};

LevelContribs shift_level_contribs(const HaarShift& piece, const LeafFunction& floc,
                                   const CubeId& q0) {
  const MeasuredTree& tree = piece.tree();
  const HaarSystem& hs = piece.haar();
  LevelContribs out;
  out.base = q0.level;
  for (int lev = q0.level; lev <= tree.depth(); ++lev) out.per_level.emplace_back(tree, floc.dim());
  const int d = floc.dim();
  for (const auto& e : piece.coeffs()) {
    if (!tree.contains(q0, e.q)) continue;
    const HaarFunction& hk = hs.function(e.k);
    if (hk.degenerate || hs.degenerate(e.j)) continue;
    // <floc, h_J> componentwise
    std::vector<double> cj(d, 0.0);
    const std::uint64_t ja = tree.first_leaf(e.j), jb = ja + tree.leaves_under(e.j);
    for (std::uint64_t y = ja; y < jb; ++y) {
      const double hv = hs.value_at_leaf(e.j, y) * tree.leaf_mass(y);
      for (int c = 0; c < d; ++c) cj[c] += floc(y, c) * hv;
    }
    LeafFunction& dst = out.per_level[e.q.level - q0.level];
    for (int o = 0; o < tree.branching(); ++o) {
      const double av = hk.alpha(o);
      if (av == 0.0) continue;
      const CubeId child = tree.child(e.k, o);
      const std::uint64_t lo = tree.first_leaf(child), hi = lo + tree.leaves_under(child);
      for (std::uint64_t x = lo; x < hi; ++x) {
        for (int c = 0; c < d; ++c) dst(x, c) += e.c * cj[c] * av;
      }
    }
  }
  return out;
}

LevelContribs multiplier_level_contribs(const MartingaleMultiplier& sigma, const LeafFunction& floc,
                                        const CubeId& q0) {
  const MeasuredTree& tree = sigma.tree();
  LevelContribs out;
  out.base = q0.level;
  for (int lev = q0.level; lev <= tree.depth(); ++lev) out.per_level.emplace_back(tree, floc.dim());
  const int d = floc.dim();
  for (int lev = q0.level; lev < tree.depth(); ++lev) {
    LeafFunction& dst = out.per_level[lev - q0.level];
    const std::uint64_t qa = q0.index << (static_cast<std::uint64_t>(lev - q0.level) * tree.dimension());
    const std::uint64_t qn = std::uint64_t{1} << (static_cast<std::uint64_t>(lev - q0.level) * tree.dimension());
    for (std::uint64_t qi = qa; qi < qa + qn; ++qi) {
      const CubeId q{lev, qi};
      const int sg = sigma.sigma(q);
      const auto avg_q = floc.average(q);
      for (int o = 0; o < tree.branching(); ++o) {
        const CubeId child = tree.child(q, o);
        const auto avg_c = floc.average(child);
        const std::uint64_t lo = tree.first_leaf(child), hi = lo + tree.leaves_under(child);
        for (std::uint64_t x = lo; x < hi; ++x) {
          for (int c = 0; c < d; ++c) dst(x, c) += sg * (avg_c[c] - avg_q[c]);
        }
      }
    }
  }
  return out;
}

struct EngineConfig {
  double C = 1.0;
  StopMode mode = StopMode::balanced;
  int residue = -1;     // level residue of the t-separated piece; -1 = no 3.1 condition gate
  int modulus = 1;      // t + 1
  double lp_tol = 1e-9;
  double john_tol = 1e-5;
  bool test_partial_all_levels = false;  // multiplier: every cube qualifies for 3.1
};

// One stopping generation below q'. Returns the selected maximal cubes and the
// measure fraction they carry.
template <typename ContribFn>
std::vector<CubeId> stopping_generation(const MeasuredTree& tree, const LeafFunction& f,
                                        const CubeId& qp, const EngineConfig& cfg,
                                        ContribFn&& contribs_for, double* fraction) {
  const int d = f.dim();
  LeafFunction floc = f.restricted(qp);
  Zonotope body = convex_body_avg(floc, qp).merged();

  LevelContribs contribs = contribs_for(floc, qp);

  // prefix partial sums along each leaf chain: partial up to level L means the
  // sum of contributions from cubes at levels [qp.level, L-1]
  // stopping candidates J test partial at level(J): contributions strictly above J
  const std::uint64_t qa = tree.first_leaf(qp), qb = qa + tree.leaves_under(qp);
  std::vector<std::vector<double>> prefix(tree.depth() + 1 - qp.level);
  {
    std::vector<double> acc((qb - qa) * d, 0.0);
    prefix[0] = acc;  // partial at level qp.level: empty sum
    for (int lev = qp.level; lev < tree.depth(); ++lev) {
      const LeafFunction& c = contribs.per_level[lev - qp.level];
      for (std::uint64_t x = qa; x < qb; ++x) {
        for (int k = 0; k < d; ++k) acc[(x - qa) * d + k] += c(x, k);
      }
      prefix[lev + 1 - qp.level] = acc;
    }
  }

  // L1 mode: John basis of <<f>>_{q'} and componentwise absolute averages
  Eigen::MatrixXd john_basis;
  std::vector<std::vector<double>> abs_sums;  // per basis vector: subtree integral of |f.e_i|
  std::vector<double> abs_avg_qp;
  if (cfg.mode == StopMode::l1) {
    Ellipsoid e = john_ellipsoid(body, cfg.john_tol);
    john_basis = e.basis;
    abs_sums.assign(d, std::vector<double>(qb - qa, 0.0));
    abs_avg_qp.assign(d, 0.0);
    for (int i = 0; i < d; ++i) {
      for (std::uint64_t x = qa; x < qb; ++x) {
        double dot = 0.0;
        for (int c = 0; c < d; ++c) dot += floc(x, c) * john_basis(c, i);
        abs_sums[i][x - qa] = std::abs(dot) * tree.leaf_mass(x);
        abs_avg_qp[i] += abs_sums[i][x - qa];
      }
      abs_avg_qp[i] /= tree.mu(qp);
    }
  }

  auto abs_avg = [&](int i, const CubeId& j) {
    const std::uint64_t ja = tree.first_leaf(j), jb = ja + tree.leaves_under(j);
    double s = 0.0;
    for (std::uint64_t x = ja; x < jb; ++x) s += abs_sums[i][x - qa];
    return s / tree.mu(j);
  };

  const double scale = 1.0 + floc.max_abs();
  auto selected = [&](const CubeId& j) {
    // (3.1): partial sums above j, constant on j by the t-separated reduction
    const bool gate = cfg.test_partial_all_levels ||
                      (cfg.residue >= 0 && j.level % cfg.modulus == cfg.residue);
    if (gate) {
      const std::uint64_t ja = tree.first_leaf(j), jb = ja + tree.leaves_under(j);
      const auto& row = prefix[j.level - qp.level];
      std::vector<double> v(d);
      for (int c = 0; c < d; ++c) v[c] = row[(ja - qa) * d + c];
      for (std::uint64_t x = ja + 1; x < jb; ++x) {
        for (int c = 0; c < d; ++c) {
          if (std::abs(row[(x - qa) * d + c] - v[c]) > 1e-9 * scale) {
            throw std::logic_error("t-separated partial sums not constant on the candidate cube");
          }
        }
      }
      if (!member(v, {{cfg.C, &body}}, cfg.lp_tol).inside) return true;
    }
    // (3.2) or its L1-mode replacement
    if (cfg.mode == StopMode::balanced) {
      const auto avg = floc.average(j);
      if (!member(avg, {{cfg.C, &body}}, cfg.lp_tol).inside) return true;
    } else {
      for (int i = 0; i < d; ++i) {
        if (abs_avg(i, j) > cfg.C / d * abs_avg_qp[i] * (1.0 + 1e-12) + 1e-300) return true;
      }
    }
    return false;
  };

  std::vector<CubeId> picked;
  double picked_mass = 0.0;
  std::vector<CubeId> frontier;
  if (!tree.is_leaf(qp)) frontier = tree.children(qp);
  while (!frontier.empty()) {
    std::vector<CubeId> next;
    for (const CubeId& j : frontier) {
      if (selected(j)) {
        picked.push_back(j);
        picked_mass += tree.mu(j);
      } else if (!tree.is_leaf(j)) {
        for (const auto& c : tree.children(j)) next.push_back(c);
      }
    }
    frontier = std::move(next);
  }
  if (fraction) *fraction = picked_mass / tree.mu(qp);
  return picked;
}

template <typename ContribFn>
std::vector<CubeId> stopping_family(const MeasuredTree& tree, const LeafFunction& f,
                                    const CubeId& q0, const EngineConfig& cfg,
                                    ContribFn&& contribs_for, StoppingStats* stats) {
  std::vector<CubeId> family = {q0};
  std::vector<CubeId> generation = {q0};
  int gen = 0;
  while (!generation.empty()) {
    std::vector<CubeId> next;
    for (const CubeId& qp : generation) {
      double frac = 0.0;
      auto picked = stopping_generation(tree, f, qp, cfg, contribs_for, &frac);
      if (stats) {
        stats->fractions.push_back(frac);
        stats->max_fraction = std::max(stats->max_fraction, frac);
      }
      for (const auto& j : picked) {
        family.push_back(j);
        next.push_back(j);
      }
    }
    generation = std::move(next);
    ++gen;
  }
  if (stats) stats->generations = gen;
  return family;
}

SparseFamily finalize_family(const MeasuredTree& tree, std::vector<CubeId> cubes, int enlarge_t) {
  if (enlarge_t > 0) {
    std::vector<CubeId> extra;
    for (const CubeId& q : cubes) {
      for (int l = 1; l <= enlarge_t && q.level + l <= tree.depth(); ++l) {
        for (const auto& r : tree.descendants_at(q, l)) extra.push_back(r);
      }
    }
    cubes.insert(cubes.end(), extra.begin(), extra.end());
  }
  std::sort(cubes.begin(), cubes.end());
  cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
  SparseFamily fam;
  fam.tree = &tree;
  fam.cubes = std::move(cubes);
  return fam;
}

template <typename BuildFamily, typename ApplyOp>
SparseBuildResult run_build(const MeasuredTree& tree, const LeafFunction& f, const CubeId& q0,
                            const SparseBuildOptions& opts, DominationMode mode, int N,
                            int enlarge_t, const HaarSystem& hs, BuildFamily&& build_family,
                            ApplyOp&& apply_op) {
  SparseBuildResult out;
  const LeafFunction tf = apply_op(f.restricted(q0));

  double C = opts.C > 0 ? opts.C : 1.0;
  const bool auto_c = opts.C <= 0;

  // stopping constant: smallest doubling C with all generation fractions <= 1/2
  StoppingStats stats;
  std::vector<CubeId> cubes;
  for (;;) {
    stats = StoppingStats{};
    cubes = build_family(C, &stats);
    if (!auto_c || stats.max_fraction <= 0.5 || C > opts.C_cap) break;
    C *= 2.0;
  }
  out.stopping_C = C;
  out.stats = stats;
  out.family = finalize_family(tree, std::move(cubes), enlarge_t);

  // certificate constant: doubling search on the fixed family
  double Cc = C;
  DominationCertificate cert;
  for (;;) {
    cert = check_certificate(tf, f.restricted(q0), out.family, q0, Cc, mode, N, hs);
    if (cert.all_pass || !auto_c || Cc > opts.C_cap) break;
    Cc *= 2.0;
  }
  out.cert = cert;
  out.sparseness = verify_sparseness(out.family);
  return out;
}

}  // namespace

SparseBuildResult build_sparse_balanced(const HaarShift& shift, const LeafFunction& f,
                                        const CubeId& q0, const SparseBuildOptions& opts) {
  const MeasuredTree& tree = shift.tree();
  f.check_same_tree(tree);
  const int N = shift.s() + shift.t();
  auto pieces = shift.t_separated_split();

  auto build_family = [&](double C, StoppingStats* stats) {
    std::vector<CubeId> cubes = {q0};
    for (const auto& piece : pieces) {
      if (piece.coeffs().empty()) continue;  // zero piece contributes nothing
      EngineConfig cfg;
      cfg.C = C;
      cfg.mode = StopMode::balanced;
      cfg.modulus = shift.t() + 1;
      cfg.residue = piece.coeffs().front().q.level % cfg.modulus;
      cfg.lp_tol = opts.lp_tol;
      auto contribs = [&](const LeafFunction& floc, const CubeId& qp) {
        return shift_level_contribs(piece, floc, qp);
      };
      auto fam = stopping_family(tree, f, q0, cfg, contribs, stats);
      cubes.insert(cubes.end(), fam.begin(), fam.end());
    }
    return cubes;
  };

  return run_build(tree, f, q0, opts, DominationMode::modified, N, shift.t(), shift.haar(),
                   build_family, [&](const LeafFunction& g) { return shift.apply(g); });
}

SparseBuildResult build_sparse_l1(const HaarShift& shift, const LeafFunction& f, const CubeId& q0,
                                  const SparseBuildOptions& opts) {
  const MeasuredTree& tree = shift.tree();
  f.check_same_tree(tree);
  auto pieces = shift.t_separated_split();

  auto build_family = [&](double C, StoppingStats* stats) {
    std::vector<CubeId> cubes = {q0};
    for (const auto& piece : pieces) {
      if (piece.coeffs().empty()) continue;
      EngineConfig cfg;
      cfg.C = C;
      cfg.mode = StopMode::l1;
      cfg.modulus = shift.t() + 1;
      cfg.residue = piece.coeffs().front().q.level % cfg.modulus;
      cfg.lp_tol = opts.lp_tol;
      cfg.john_tol = opts.john_tol;
      auto contribs = [&](const LeafFunction& floc, const CubeId& qp) {
        return shift_level_contribs(piece, floc, qp);
      };
      auto fam = stopping_family(tree, f, q0, cfg, contribs, stats);
      cubes.insert(cubes.end(), fam.begin(), fam.end());
    }
    return cubes;
  };

  return run_build(tree, f, q0, opts, DominationMode::plain, shift.s() + shift.t(), 0,
                   shift.haar(), build_family,
                   [&](const LeafFunction& g) { return shift.apply(g); });
}

SparseBuildResult build_sparse_multiplier(const MartingaleMultiplier& sigma, const LeafFunction& f,
                                          const CubeId& q0, const HaarSystem& hs,
                                          const SparseBuildOptions& opts) {
  const MeasuredTree& tree = sigma.tree();
  f.check_same_tree(tree);

  auto build_family = [&](double C, StoppingStats* stats) {
    EngineConfig cfg;
    cfg.C = C;
    cfg.mode = StopMode::balanced;  // same two conditions as the balanced engine
    cfg.test_partial_all_levels = true;
    cfg.lp_tol = opts.lp_tol;
    auto contribs = [&](const LeafFunction& floc, const CubeId& qp) {
      return multiplier_level_contribs(sigma, floc, qp);
    };
    return stopping_family(tree, f, q0, cfg, contribs, stats);
  };

  return run_build(tree, f, q0, opts, DominationMode::plain, 0, 0, hs, build_family,
                   [&](const LeafFunction& g) { return sigma.apply(g); });
}

}  // namespace dyadlab
