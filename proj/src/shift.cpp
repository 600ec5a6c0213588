#include "dyadlab/shift.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dyadlab {

namespace {

// per-cube Haar coefficients <f_c, h_Q> for every non-leaf cube, via subtree sums
std::vector<std::vector<double>> haar_coefficients(const HaarSystem& hs, const LeafFunction& f) {
  const MeasuredTree& tree = hs.tree();
  const int d = f.dim();
  const int b = tree.branching();
  // subtree integrals of f, level by level
  std::vector<std::vector<double>> sums(tree.depth() + 1);
  sums[tree.depth()].resize(tree.leaf_count() * d);
  for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
    const double mu = tree.leaf_mass(x);
    for (int c = 0; c < d; ++c) sums[tree.depth()][x * d + c] = f(x, c) * mu;
  }
  for (int lev = tree.depth() - 1; lev >= 0; --lev) {
    sums[lev].assign(tree.cubes_at(lev) * d, 0.0);
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      for (int o = 0; o < b; ++o) {
        for (int c = 0; c < d; ++c) sums[lev][i * d + c] += sums[lev + 1][(i * b + o) * d + c];
      }
    }
  }
  std::vector<std::vector<double>> coef(tree.depth());
  for (int lev = 0; lev < tree.depth(); ++lev) {
    coef[lev].assign(tree.cubes_at(lev) * d, 0.0);
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const HaarFunction& h = hs.function(CubeId{lev, i});
      if (h.degenerate) continue;
      for (int o = 0; o < b; ++o) {
        const double a = h.alpha(o);
        if (a == 0.0) continue;
        for (int c = 0; c < d; ++c) coef[lev][i * d + c] += a * sums[lev + 1][(i * b + o) * d + c];
      }
    }
  }
  return coef;
}

}  // namespace

HaarShift::HaarShift(const HaarSystem& haar, int s, int t, std::vector<ShiftCoeff> coeffs)
    : haar_(&haar), s_(s), t_(t), coeffs_(std::move(coeffs)) {
  if (s < 0 || t < 0) throw std::invalid_argument("complexity must be nonnegative");
  const MeasuredTree& tree = haar.tree();
  for (const auto& e : coeffs_) {
    tree.check_cube(e.q);
    if (e.j.level != e.q.level + s_ || e.k.level != e.q.level + t_ ||
        !tree.contains(e.q, e.j) || !tree.contains(e.q, e.k)) {
      throw std::invalid_argument("shift coefficient key violates the (s,t) structure at " + to_string(e.q));
    }
    if (e.j.level >= tree.depth() || e.k.level >= tree.depth()) {
      throw std::invalid_argument("shift coefficient references a leaf-level Haar function");
    }
    if (std::abs(e.c) > 1.0 + 1e-12) {
      throw std::invalid_argument("shift coefficients must satisfy |c| <= 1");
    }
  }
  std::sort(coeffs_.begin(), coeffs_.end(), [](const ShiftCoeff& a, const ShiftCoeff& b) {
    if (a.q != b.q) return a.q < b.q;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  });
}

LeafFunction HaarShift::apply(const LeafFunction& f) const {
  const MeasuredTree& tree = haar_->tree();
  f.check_same_tree(tree);
  const int d = f.dim();
  const auto coef = haar_coefficients(*haar_, f);

  // Direct per-range accumulation. A telescoping prefix-sum scheme would be
  // faster but lets large contributions on one branch wipe out small values
  // elsewhere when leaf masses span many orders of magnitude.
  LeafFunction out(tree, d);
  const int b = tree.branching();
  for (const auto& e : coeffs_) {
    const HaarFunction& hk = haar_->function(e.k);
    if (hk.degenerate) continue;
    const double* cj = coef[e.j.level].data() + e.j.index * d;
    for (int o = 0; o < b; ++o) {
      const double a = hk.alpha(o);
      if (a == 0.0) continue;
      const CubeId child = tree.child(e.k, o);
      const std::uint64_t lo = tree.first_leaf(child), hi = lo + tree.leaves_under(child);
      for (std::uint64_t x = lo; x < hi; ++x) {
        for (int c = 0; c < d; ++c) out(x, c) += e.c * cj[c] * a;
      }
    }
  }
  return out;
}

HaarShift HaarShift::adjoint() const {
  std::vector<ShiftCoeff> sw;
  sw.reserve(coeffs_.size());
  for (const auto& e : coeffs_) sw.push_back({e.q, e.k, e.j, e.c});
  return HaarShift(*haar_, t_, s_, std::move(sw));
}

std::vector<HaarShift> HaarShift::t_separated_split() const {
  std::vector<std::vector<ShiftCoeff>> parts(t_ + 1);
  for (const auto& e : coeffs_) parts[e.q.level % (t_ + 1)].push_back(e);
  std::vector<HaarShift> out;
  for (auto& p : parts) {
    if (!p.empty()) out.emplace_back(HaarShift(*haar_, s_, t_, std::move(p)));
  }
  if (out.empty()) out.emplace_back(HaarShift(*haar_, s_, t_, {}));
  return out;
}

double HaarShift::kernel_sup(const CubeId& q) const {
  // K_Q(x, y) = c_{J(y),K(x)} h_{J(y)}(y) h_{K(x)}(x): the sup over leaf pairs is
  // the max over entries of |c| ||h_J||_inf ||h_K||_inf
  double sup = 0.0;
  for (const auto& e : coeffs_) {
    if (e.q != q) continue;
    sup = std::max(sup, std::abs(e.c) * haar_->norm_linf(e.j) * haar_->norm_linf(e.k));
  }
  return sup;
}

HaarShift::L1Report HaarShift::is_l1_normalized(double c) const {
  const MeasuredTree& tree = haar_->tree();
  L1Report rep;
  rep.worst_cube = tree.root();
  // group entries by cube
  std::size_t i = 0;
  while (i < coeffs_.size()) {
    const CubeId q = coeffs_[i].q;
    double sup = 0.0;
    while (i < coeffs_.size() && coeffs_[i].q == q) {
      const auto& e = coeffs_[i];
      sup = std::max(sup, std::abs(e.c) * haar_->norm_linf(e.j) * haar_->norm_linf(e.k));
      ++i;
    }
    const double scaled = sup * tree.mu(q);
    if (scaled > rep.achieved) {
      rep.achieved = scaled;
      rep.worst_cube = q;
      rep.worst_kernel_sup = sup;
    }
  }
  rep.verdict = rep.achieved <= c * (1.0 + 1e-12);
  return rep;
}

HaarShift HaarShift::random(const HaarSystem& hs, int s, int t, Rng& rng, double density,
                            double nondegenerate_floor) {
  const MeasuredTree& tree = hs.tree();
  std::vector<ShiftCoeff> coeffs;
  const int top = tree.depth() - 1 - std::max(s, t);
  for (int lev = 0; lev <= top; ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      for (const CubeId& j : tree.descendants_at(q, s)) {
        for (const CubeId& k : tree.descendants_at(q, t)) {
          if (density < 1.0 && rng.uniform() > density) continue;
          double c;
          if (nondegenerate_floor > 0.0) {
            c = rng.sign() * rng.uniform(nondegenerate_floor, 1.0);
          } else {
            c = rng.uniform(-1.0, 1.0);
          }
          coeffs.push_back({q, j, k, c});
        }
      }
    }
  }
  return HaarShift(hs, s, t, std::move(coeffs));
}

HaarShift HaarShift::random_l1_normalized(const HaarSystem& hs, int s, int t, Rng& rng,
                                          double c_target, double density) {
  HaarShift raw = random(hs, s, t, rng, density, 0.5);
  const MeasuredTree& tree = hs.tree();
  auto coeffs = raw.coeffs();
  // per-cube rescale so mu(Q) ||K_Q||_inf <= c_target while keeping |c| <= 1
  std::size_t i = 0;
  while (i < coeffs.size()) {
    const CubeId q = coeffs[i].q;
    std::size_t begin = i;
    double sup = 0.0;
    while (i < coeffs.size() && coeffs[i].q == q) {
      const auto& e = coeffs[i];
      sup = std::max(sup, std::abs(e.c) * hs.norm_linf(e.j) * hs.norm_linf(e.k));
      ++i;
    }
    const double cap = c_target / tree.mu(q);
    if (sup > cap) {
      const double scale = cap / sup;
      for (std::size_t k = begin; k < i; ++k) coeffs[k].c *= scale;
    }
  }
  return HaarShift(hs, s, t, std::move(coeffs));
}

MartingaleMultiplier::MartingaleMultiplier(const MeasuredTree& tree, std::vector<int> sigma)
    : tree_(&tree), sigma_(std::move(sigma)) {
  level_offset_.assign(tree.depth() + 1, 0);
  std::size_t off = 0;
  for (int lev = 0; lev < tree.depth(); ++lev) {
    level_offset_[lev] = off;
    off += tree.cubes_at(lev);
  }
  level_offset_[tree.depth()] = off;
  if (sigma_.size() != off) throw std::invalid_argument("sigma count mismatch");
  for (int s : sigma_) {
    if (s != 1 && s != -1) throw std::invalid_argument("sigma values must be +-1");
  }
}

MartingaleMultiplier MartingaleMultiplier::constant(const MeasuredTree& tree, int sign) {
  std::size_t count = 0;
  for (int lev = 0; lev < tree.depth(); ++lev) count += tree.cubes_at(lev);
  return MartingaleMultiplier(tree, std::vector<int>(count, sign));
}

MartingaleMultiplier MartingaleMultiplier::random(const MeasuredTree& tree, Rng& rng) {
  std::size_t count = 0;
  for (int lev = 0; lev < tree.depth(); ++lev) count += tree.cubes_at(lev);
  std::vector<int> s(count);
  for (auto& v : s) v = rng.sign();
  return MartingaleMultiplier(tree, std::move(s));
}

int MartingaleMultiplier::sigma(const CubeId& q) const {
  if (q.level >= tree_->depth()) throw std::out_of_range("sigma lives on non-leaf cubes");
  return sigma_[level_offset_[q.level] + q.index];
}

LeafFunction MartingaleMultiplier::apply(const LeafFunction& f) const {
  const MeasuredTree& tree = *tree_;
  f.check_same_tree(tree);
  const int d = f.dim();
  // averages per cube, then walk each root-to-leaf chain
  std::vector<std::vector<double>> avg(tree.depth() + 1);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    avg[lev].assign(tree.cubes_at(lev) * d, 0.0);
  }
  for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
    const double mu = tree.leaf_mass(x);
    for (int c = 0; c < d; ++c) avg[tree.depth()][x * d + c] = f(x, c) * mu;
  }
  const int b = tree.branching();
  for (int lev = tree.depth() - 1; lev >= 0; --lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      for (int o = 0; o < b; ++o) {
        for (int c = 0; c < d; ++c) avg[lev][i * d + c] += avg[lev + 1][(i * b + o) * d + c];
      }
    }
  }
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const double mu = tree.mu(lev, i);
      for (int c = 0; c < d; ++c) avg[lev][i * d + c] /= mu;
    }
  }
  LeafFunction out(tree, d);
  for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
    for (int lev = 0; lev < tree.depth(); ++lev) {
      const CubeId q = tree.ancestor_of_leaf(x, lev);
      const int sg = sigma_[level_offset_[lev] + q.index];
      const CubeId next = tree.ancestor_of_leaf(x, lev + 1);
      for (int c = 0; c < d; ++c) {
        out(x, c) += sg * (avg[lev + 1][next.index * d + c] - avg[lev][q.index * d + c]);
      }
    }
  }
  return out;
}

double bmo_norm(const LeafFunction& f) {
  if (f.dim() != 1) throw std::invalid_argument("bmo_norm expects scalar functions");
  const MeasuredTree& tree = f.tree();
  double best = 0.0;
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const CubeId up = lev == 0 ? q : tree.parent(q);
      const double mean_up = f.average(up)[0];
      double dev = 0.0;
      const std::uint64_t a = tree.first_leaf(q), b2 = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b2; ++x) dev += std::abs(f(x, 0) - mean_up) * tree.leaf_mass(x);
      best = std::max(best, dev / tree.mu(q));
    }
  }
  return best;
}

CZDecomposition cz_decompose(const LeafFunction& f, double lambda) {
  if (f.dim() != 1) throw std::invalid_argument("cz_decompose expects scalar functions");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const MeasuredTree& tree = f.tree();

  CZDecomposition out{lambda, {}, LeafFunction(tree, 1), LeafFunction(tree, 1), {}, 0, 0, 0, 0};

  // maximal cubes with <|f|>_Q > lambda, scanned top-down
  std::vector<CubeId> frontier = {tree.root()};
  std::vector<CubeId> stops;
  while (!frontier.empty()) {
    std::vector<CubeId> next;
    for (const CubeId& q : frontier) {
      double absavg = 0.0;
      const std::uint64_t a = tree.first_leaf(q), b2 = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b2; ++x) absavg += std::abs(f(x, 0)) * tree.leaf_mass(x);
      absavg /= tree.mu(q);
      if (absavg > lambda) {
        stops.push_back(q);
      } else if (!tree.is_leaf(q)) {
        for (const auto& c : tree.children(q)) next.push_back(c);
      }
    }
    frontier = std::move(next);
  }
  out.stopping_cubes = stops;

  LeafFunction b(tree, 1);
  for (const CubeId& qk : stops) {
    const CubeId up = qk.level == 0 ? qk : tree.parent(qk);
    LeafFunction bk(tree, 1);
    double integral = 0.0;
    const std::uint64_t a = tree.first_leaf(qk), b2 = a + tree.leaves_under(qk);
    for (std::uint64_t x = a; x < b2; ++x) {
      bk(x, 0) = f(x, 0);
      integral += f(x, 0) * tree.leaf_mass(x);
    }
    const double avg_up = integral / tree.mu(up);
    const std::uint64_t ua = tree.first_leaf(up), ub = ua + tree.leaves_under(up);
    for (std::uint64_t x = ua; x < ub; ++x) bk(x, 0) -= avg_up;
    b.axpy(1.0, bk);
    out.b_l1_over_f_l1 += bk.norm_l1();
    out.b_parts.push_back(std::move(bk));
  }
  out.b = std::move(b);
  out.g = f;
  out.g.axpy(-1.0, out.b);

  const double f1 = f.norm_l1();
  if (f1 > 0) {
    out.b_l1_over_f_l1 /= f1;
    out.g_lp_ratio_p2 = std::pow(out.g.norm_lp(2.0), 2.0) / (lambda * f1);
    out.g_lp_ratio_p4 = std::pow(out.g.norm_lp(4.0), 4.0) / (std::pow(lambda, 3.0) * f1);
  }
  out.g_bmo_over_lambda = bmo_norm(out.g) / lambda;
  return out;
}

LeafFunction random_test_function(const MeasuredTree& tree, int dim, Rng& rng, int spikes) {
  LeafFunction f(tree, dim);
  // smooth part: random values at a coarse level, constant on its cubes
  const int coarse = std::max(1, tree.depth() / 2);
  for (std::uint64_t i = 0; i < tree.cubes_at(coarse); ++i) {
    std::vector<double> v(dim);
    for (auto& c : v) c = rng.normal();
    const CubeId q{coarse, i};
    const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
    for (std::uint64_t x = a; x < b; ++x) {
      for (int c = 0; c < dim; ++c) f(x, c) = v[c];
    }
  }
  // spikes: mass-normalized bumps on random leaves
  for (int sp = 0; sp < spikes; ++sp) {
    const std::uint64_t x = rng.below(tree.leaf_count());
    for (int c = 0; c < dim; ++c) {
      f(x, c) += rng.sign() * rng.log_uniform(0.5, 4.0) * tree.total_mass() /
                 (tree.leaf_count() * tree.leaf_mass(x));
    }
  }
  return f;
}

}  // namespace dyadlab
