#include "dyadlab/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dyadlab {

YoungFunction YoungFunction::power(double r) {
  if (!(r > 1.0)) throw std::invalid_argument("power Young function needs exponent > 1");
  YoungFunction y;
  y.kind_ = Kind::power;
  y.r_ = r;
  return y;
}

YoungFunction YoungFunction::power_log(double r, double s) {
  YoungFunction y;
  y.kind_ = Kind::power_log;
  y.r_ = r;
  y.s_ = s;
  y.validate();
  return y;
}

YoungFunction YoungFunction::from_table(std::vector<double> ts, std::vector<double> vals) {
  if (ts.size() != vals.size() || ts.size() < 4) throw std::invalid_argument("bad Young table");
  YoungFunction y;
  y.kind_ = Kind::table;
  y.ts_ = std::move(ts);
  y.vals_ = std::move(vals);
  y.validate();
  return y;
}

double YoungFunction::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  switch (kind_) {
    case Kind::power:
      return std::pow(t, r_);
    case Kind::power_log:
      return std::pow(t, r_) * std::pow(std::log(std::exp(1.0) + t), s_);
    case Kind::table: {
      if (t <= ts_.front()) return vals_.front() * (t / ts_.front());
      if (t >= ts_.back()) {
        // power extrapolation from the last two knots
        const std::size_t n = ts_.size();
        const double slope = std::log(vals_[n - 1] / vals_[n - 2]) / std::log(ts_[n - 1] / ts_[n - 2]);
        return vals_.back() * std::pow(t / ts_.back(), std::max(slope, 1.0));
      }
      auto it = std::lower_bound(ts_.begin(), ts_.end(), t);
      const std::size_t i = static_cast<std::size_t>(it - ts_.begin());
      const double t0 = ts_[i - 1], t1 = ts_[i];
      const double w = (t - t0) / (t1 - t0);
      return vals_[i - 1] * (1.0 - w) + vals_[i] * w;
    }
  }
  return 0.0;
}

double YoungFunction::inverse(double y) const {
  if (y <= 0.0) return 0.0;
  double lo = 1.0, hi = 1.0;
  while ((*this)(lo) > y && lo > 1e-280) lo *= 0.5;
  while ((*this)(hi) < y && hi < 1e280) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if ((*this)(mid) < y) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo < 1.0 + 1e-13) break;
  }
  return std::sqrt(lo * hi);
}

void YoungFunction::validate() const {
  // sampled second differences on a log grid plus tail superlinearity
  std::vector<double> grid;
  for (int k = -40; k <= 60; ++k) grid.push_back(std::pow(10.0, k / 5.0));
  double prev = 0.0;
  for (double t : grid) {
    const double v = (*this)(t);
    if (!(v >= prev - 1e-12 * (1.0 + v))) throw std::invalid_argument("Young function not increasing");
    prev = v;
  }
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double a = grid[i - 1], b = grid[i], c = grid[i + 1];
    // convexity of the graph through three points: slope comparison
    const double s1 = ((*this)(b) - (*this)(a)) / (b - a);
    const double s2 = ((*this)(c) - (*this)(b)) / (c - b);
    if (s2 < s1 * (1.0 - 1e-9) - 1e-10) throw std::invalid_argument("Young function not convex");
  }
  const double t1 = 1e6, t2 = 1e8;
  if ((*this)(t2) / t2 <= (*this)(t1) / t1 * 1.0001) {
    throw std::invalid_argument("Young function not superlinear at infinity");
  }
  if ((*this)(0.0) != 0.0) throw std::invalid_argument("Young function must vanish at zero");
}

double local_orlicz_norm(const LeafFunction& f, const CubeId& q, const YoungFunction& phi) {
  if (f.dim() != 1) throw std::invalid_argument("local_orlicz_norm expects scalar functions");
  const MeasuredTree& tree = f.tree();
  tree.check_cube(q);
  const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
  double maxabs = 0.0;
  for (std::uint64_t x = a; x < b; ++x) maxabs = std::max(maxabs, std::abs(f(x, 0)));
  if (maxabs == 0.0) return 0.0;

  auto mean = [&](double lambda) {
    double s = 0.0;
    for (std::uint64_t x = a; x < b; ++x) s += phi(std::abs(f(x, 0)) / lambda) * tree.leaf_mass(x);
    return s / tree.mu(q);
  };
  double lo = maxabs, hi = maxabs;
  while (mean(lo) < 1.0 && lo > maxabs * 1e-280) lo *= 0.5;
  while (mean(hi) > 1.0 && hi < maxabs * 1e280) hi *= 2.0;
  for (int it = 0; it < 120; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (mean(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo < 1.0 + 1e-12) break;
  }
  return std::sqrt(lo * hi);
}

YoungFunction dual_young(const YoungFunction& phi) {
  // Legendre transform Phi*(t) = sup_s (s t - Phi(s)) on a log grid; the sup in
  // s is unimodal, so golden-section refinement around the best grid point
  const int n = 400;
  std::vector<double> ts(n), vals(n);
  std::vector<double> sgrid;
  for (int k = 0; k < 2000; ++k) sgrid.push_back(std::pow(10.0, -8.0 + 16.0 * k / 1999.0));

  for (int i = 0; i < n; ++i) {
    const double t = std::pow(10.0, -8.0 + 16.0 * i / (n - 1.0));
    ts[i] = t;
    double best = 0.0;
    double best_s = sgrid.front();
    for (double s : sgrid) {
      const double v = s * t - phi(s);
      if (v > best) {
        best = v;
        best_s = s;
      }
    }
    // golden refinement around best_s
    double lo = best_s / 1.02, hi = best_s * 1.02;
    for (int it = 0; it < 60; ++it) {
      const double m1 = lo + (hi - lo) * 0.381966;
      const double m2 = hi - (hi - lo) * 0.381966;
      if (m1 * t - phi(m1) < m2 * t - phi(m2)) {
        lo = m1;
      } else {
        hi = m2;
      }
    }
    const double sref = 0.5 * (lo + hi);
    best = std::max(best, sref * t - phi(sref));
    vals[i] = std::max(best, 0.0);
  }
  // monotone envelope cleanup and a strictly increasing floor
  for (int i = 1; i < n; ++i) vals[i] = std::max(vals[i], vals[i - 1]);
  for (int i = 0; i < n; ++i) vals[i] = std::max(vals[i], ts[i] * 1e-12);
  return YoungFunction::from_table(std::move(ts), std::move(vals));
}

BpResult bp_check(const YoungFunction& phi, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("bp_check needs p > 1");
  BpResult out;
  // log-Simpson quadrature of Phi(t)/t^{p+1} dt on [1, 1e8]
  const int n = 4000;
  const double la = 0.0, lb = std::log(1e8);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double l0 = la + (lb - la) * i / n, l1 = la + (lb - la) * (i + 1) / n;
    const double t0 = std::exp(l0), tm = std::exp(0.5 * (l0 + l1)), t1 = std::exp(l1);
    auto g = [&](double t) { return phi(t) / std::pow(t, p); };  // integrand in d(log t)
    acc += (l1 - l0) / 6.0 * (g(t0) + 4.0 * g(tm) + g(t1));
  }
  out.integral_to_cutoff = acc;
  // tail exponent of Phi(t)/t^p by least squares on the last decade
  std::vector<double> xs, ys;
  for (int k = 0; k <= 20; ++k) {
    const double t = std::pow(10.0, 7.0 + k * 0.05);
    xs.push_back(std::log(t));
    ys.push_back(std::log(std::max(phi(t) / std::pow(t, p), 1e-300)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  out.tail_exponent = num / den;
  out.finite = out.tail_exponent < -0.01;
  return out;
}

LeafFunction orlicz_maximal(const LeafFunction& f, const YoungFunction& phi) {
  const MeasuredTree& tree = f.tree();
  LeafFunction out(tree, 1);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const double nrm = local_orlicz_norm(f, q, phi);
      const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b; ++x) out(x, 0) = std::max(out(x, 0), nrm);
    }
  }
  return out;
}

double bump_constant(const MatrixWeight& w, const MatrixWeight& v, const YoungFunction& phi,
                     const YoungFunction& psi, double p, int N, const HaarSystem& hs) {
  const MeasuredTree& tree = w.tree();
  const auto& vp = v.powers(1.0 / p);
  const auto& wm = w.powers(-1.0 / p);

  // pairs within dyadic distance N+2
  double best = 0.0;
  for (int il = 0; il <= tree.depth(); ++il) {
    for (std::uint64_t ii = 0; ii < tree.cubes_at(il); ++ii) {
      const CubeId I{il, ii};
      for (int up = 0; up <= std::min(N + 2, il); ++up) {
        const CubeId anc = tree.ancestor(I, up);
        for (int down = 0; down + up <= N + 2 && anc.level + down <= tree.depth(); ++down) {
          for (const CubeId& J : tree.descendants_at(anc, down)) {
            if (tree.dyadic_distance(I, J) != up + down) continue;
            // inner norm in x over I for each leaf y of J, then the outer norm in y
            LeafFunction inner_vals(tree, 1);
            const std::uint64_t ja = tree.first_leaf(J), jb = ja + tree.leaves_under(J);
            LeafFunction slice(tree, 1);
            for (std::uint64_t y = ja; y < jb; ++y) {
              for (std::uint64_t x = tree.first_leaf(I); x < tree.first_leaf(I) + tree.leaves_under(I); ++x) {
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(vp[x] * wm[y]);
                slice(x, 0) = svd.singularValues()[0];
              }
              inner_vals(y, 0) = local_orlicz_norm(slice, I, phi);
            }
            const double outer = local_orlicz_norm(inner_vals, J, psi);
            const double val = cpb_weight(hs, p, I, J) * std::pow(outer, p);
            best = std::max(best, val);
          }
        }
      }
    }
  }
  return best;
}

}  // namespace dyadlab
