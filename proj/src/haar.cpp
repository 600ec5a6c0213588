#include "dyadlab/haar.hpp"

#include <cmath>
#include <stdexcept>

namespace dyadlab {

HaarSystem::HaarSystem(const MeasuredTree& tree, std::vector<HaarFunction> funcs)
    : tree_(&tree), funcs_(std::move(funcs)) {
  level_offset_.assign(tree.depth() + 1, 0);
  std::size_t off = 0;
  for (int lev = 0; lev < tree.depth(); ++lev) {
    level_offset_[lev] = off;
    off += tree.cubes_at(lev);
  }
  level_offset_[tree.depth()] = off;
  if (funcs_.size() != off) throw std::invalid_argument("haar function count mismatch");

  m_.resize(off);
  l1_.resize(off);
  linf_.resize(off);
  const int b = tree.branching();
  for (std::size_t i = 0; i < funcs_.size(); ++i) {
    const HaarFunction& h = funcs_[i];
    double l1 = 0.0, linf = 0.0;
    for (int o = 0; o < b; ++o) {
      const double a = h.alpha(o);
      const double mu_child = tree.mu(tree.child(h.cube, o));
      l1 += std::abs(a) * mu_child;
      linf = std::max(linf, std::abs(a));
    }
    l1_[i] = l1;
    linf_[i] = linf;
    m_[i] = l1 * l1;
  }
}

std::size_t HaarSystem::flat(const CubeId& q) const {
  if (q.level >= tree_->depth()) throw std::out_of_range("haar functions live on non-leaf cubes");
  return level_offset_[q.level] + q.index;
}

CubeId HaarSystem::cube_of_flat(std::size_t i) const {
  int lev = 0;
  while (lev + 1 < tree_->depth() && level_offset_[lev + 1] <= i) ++lev;
  return {lev, i - level_offset_[lev]};
}

double HaarSystem::value_at_leaf(const CubeId& q, std::uint64_t leaf) const {
  const HaarFunction& h = funcs_[flat(q)];
  if (h.degenerate) return 0.0;
  if (!tree_->contains(q, tree_->leaf_cube(leaf))) return 0.0;
  const CubeId at_child = tree_->ancestor_of_leaf(leaf, q.level + 1);
  return h.alpha(static_cast<int>(at_child.index & (tree_->branching() - 1)));
}

double HaarSystem::m_ext(const CubeId& q) const {
  if (q.level < tree_->depth()) return m(q);
  if (q.level != tree_->depth()) throw std::out_of_range("bad cube level");
  return m(tree_->parent(q)) / tree_->branching();
}

namespace {

HaarFunction two_valued(const MeasuredTree& tree, const CubeId& q, std::uint32_t plus_mask) {
  const int b = tree.branching();
  const std::uint32_t full = (b >= 32) ? 0xFFFFFFFFu : ((1u << b) - 1u);
  if (plus_mask == 0 || (plus_mask & full) == full) {
    throw std::invalid_argument("bipartition must have both groups nonempty at " + to_string(q));
  }
  double mu_plus = 0.0, mu_minus = 0.0;
  for (int o = 0; o < b; ++o) {
    const double mc = tree.mu(tree.child(q, o));
    if ((plus_mask >> o) & 1u) {
      mu_plus += mc;
    } else {
      mu_minus += mc;
    }
  }
  const double mu = tree.mu(q);
  HaarFunction h;
  h.cube = q;
  h.plus_mask = plus_mask;
  // numerical analogue of the mu(R) = mu(Q) degeneracy: a group carrying a
  // 1e-14 fraction of the cube would force coefficients ~1e7/sqrt(mu); set h = 0
  if (std::min(mu_plus, mu_minus) <= 1e-14 * mu) {
    h.coeff_plus = h.coeff_minus = 0.0;
    h.degenerate = true;
    return h;
  }
  h.coeff_plus = std::sqrt(mu_minus / (mu_plus * mu));
  h.coeff_minus = std::sqrt(mu_plus / (mu_minus * mu));
  return h;
}

}  // namespace

HaarSystem build_haar_1d(const MeasuredTree& tree) {
  if (tree.dimension() != 1) throw std::invalid_argument("build_haar_1d requires n=1");
  std::vector<HaarFunction> funcs;
  funcs.reserve(tree.cube_count() - tree.leaf_count());
  for (int lev = 0; lev < tree.depth(); ++lev) {
    const std::uint64_t count = tree.cubes_at(lev);
    for (std::uint64_t i = 0; i < count; ++i) {
      // positive coefficient on the right child (offset 1)
      funcs.push_back(two_valued(tree, CubeId{lev, i}, 0x2u));
    }
  }
  return HaarSystem(tree, std::move(funcs));
}

HaarSystem build_haar_nd(const MeasuredTree& tree, const SplitSpec& split) {
  const int b = tree.branching();
  std::uint32_t axis_mask = 0;
  for (int o = 0; o < b; ++o) {
    if ((o >> split.axis) & 1) axis_mask |= (1u << o);
  }
  std::vector<HaarFunction> funcs;
  funcs.reserve(tree.cube_count() - tree.leaf_count());
  std::size_t flat = 0;
  for (int lev = 0; lev < tree.depth(); ++lev) {
    const std::uint64_t count = tree.cubes_at(lev);
    for (std::uint64_t i = 0; i < count; ++i, ++flat) {
      std::uint32_t mask = axis_mask;
      if (!split.per_cube.empty()) {
        if (flat >= split.per_cube.size()) throw std::invalid_argument("split spec too short");
        mask = split.per_cube[flat];
      }
      funcs.push_back(two_valued(tree, CubeId{lev, i}, mask));
    }
  }
  return HaarSystem(tree, std::move(funcs));
}

double xi(const HaarSystem& hs, int s, int t) {
  const MeasuredTree& tree = hs.tree();
  if (s < 0 || t < 0) throw std::out_of_range("xi needs s, t >= 0");
  const int top = tree.depth() - 1 - std::max(s, t);
  if (top < 0) throw std::out_of_range("xi range is empty at this depth");

  // The ranges J in D_s(Q) and K in D_t(Q) are independent, so the supremum
  // factors per anchor cube. Desk-scale trees keep the direct walk cheap.
  double best = 0.0;
  for (int lev = 0; lev <= top; ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      double mi = 0.0, ml = 0.0;
      for (const CubeId& j : tree.descendants_at(q, s)) {
        if (!hs.degenerate(j)) mi = std::max(mi, hs.norm_linf(j));
      }
      for (const CubeId& k : tree.descendants_at(q, t)) {
        if (!hs.degenerate(k)) ml = std::max(ml, hs.norm_l1(k));
      }
      best = std::max(best, mi * ml);
    }
  }
  return best;
}

BalancedReport check_balanced(const HaarSystem& hs, double B, double xi00_bound) {
  const MeasuredTree& tree = hs.tree();
  BalancedReport rep;
  rep.xi00 = xi(hs, 0, 0);
  if (tree.depth() >= 2) {
    rep.xi10 = xi(hs, 1, 0);
    rep.xi01 = xi(hs, 0, 1);
  }
  const double bn = tree.branching();
  bool any = false;
  for (int lev = 1; lev < tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      if (hs.degenerate(q) || hs.degenerate(tree.parent(q))) continue;
      const double ratio = hs.m(q) / hs.m(tree.parent(q));
      rep.ratio_max = std::max(rep.ratio_max, ratio);
      rep.ratio_min = std::min(rep.ratio_min, ratio);
      any = true;
    }
  }
  for (int lev = 0; lev < tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      if (hs.degenerate(q)) continue;
      double min_child = std::numeric_limits<double>::infinity();
      for (int o = 0; o < tree.branching(); ++o) min_child = std::min(min_child, tree.mu(tree.child(q, o)));
      const double c = hs.m(q) / min_child;
      rep.min_child_c1 = std::min(rep.min_child_c1, c);
      rep.min_child_c2 = std::max(rep.min_child_c2, c);
    }
  }
  if (any) {
    rep.norm_ratio_max = bn * rep.ratio_max;
    rep.norm_ratio_min = bn * rep.ratio_min;
    rep.is_balanced = rep.norm_ratio_min >= 1.0 / B * (1.0 - 1e-12) &&
                      rep.norm_ratio_max <= B * (1.0 + 1e-12);
  } else {
    rep.norm_ratio_min = rep.norm_ratio_max = 1.0;
    rep.is_balanced = true;  // depth 1: no parent/child pairs to compare
  }
  rep.is_standard = rep.xi00 <= xi00_bound;
  return rep;
}

}  // namespace dyadlab
