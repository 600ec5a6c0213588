#include "dyadlab/matrix_weight.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dyadlab {

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& spd, double alpha) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spd);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("matrix_power requires a positive-definite input");
  }
  return es.eigenvectors() * es.eigenvalues().array().pow(alpha).matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

MatrixWeight::MatrixWeight(const MeasuredTree& tree, int d)
    : tree_(&tree), d_(d), vals_(tree.leaf_count() * d * d, 0.0) {
  for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
    Eigen::Map<Eigen::MatrixXd>(vals_.data() + x * d_ * d_, d_, d_).setIdentity();
  }
}

void MatrixWeight::set(std::uint64_t leaf, const Eigen::MatrixXd& m) {
  Eigen::Map<Eigen::MatrixXd>(vals_.data() + leaf * d_ * d_, d_, d_) = 0.5 * (m + m.transpose());
  power_cache_.clear();
}

void MatrixWeight::validate(double eig_floor_rel) const {
  for (std::uint64_t x = 0; x < tree_->leaf_count(); ++x) {
    auto m = at(x);
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("matrix weight not symmetric at leaf " + std::to_string(x));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.eigenvalues().minCoeff() <= eig_floor_rel * m.trace()) {
      throw std::invalid_argument("matrix weight not positive definite at leaf " + std::to_string(x));
    }
  }
}

const std::vector<Eigen::MatrixXd>& MatrixWeight::powers(double alpha) const {
  auto it = power_cache_.find(alpha);
  if (it != power_cache_.end()) return it->second;
  std::vector<Eigen::MatrixXd> pw;
  pw.reserve(tree_->leaf_count());
  for (std::uint64_t x = 0; x < tree_->leaf_count(); ++x) pw.push_back(matrix_power(at(x), alpha));
  return power_cache_.emplace(alpha, std::move(pw)).first->second;
}

MatrixWeight MatrixWeight::inverse_power(double alpha) const {
  MatrixWeight out(*tree_, d_);
  for (std::uint64_t x = 0; x < tree_->leaf_count(); ++x) out.set(x, matrix_power(at(x), alpha));
  return out;
}

MatrixWeight MatrixWeight::identity(const MeasuredTree& tree, int d) { return MatrixWeight(tree, d); }

MatrixWeight MatrixWeight::from_scalar(const MeasuredTree& tree, const std::vector<double>& w) {
  MatrixWeight out(tree, 1);
  if (w.size() != tree.leaf_count()) throw std::invalid_argument("scalar weight length mismatch");
  for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
    if (!(w[x] > 0.0)) throw std::invalid_argument("scalar weight must be positive");
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = w[x];
    out.set(x, m);
  }
  return out;
}

namespace {

Eigen::MatrixXd random_orthogonal(int d, Rng& rng) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

}  // namespace

MatrixWeight MatrixWeight::random_iid(const MeasuredTree& tree, int d, double kappa_max, Rng& rng) {
  MatrixWeight out(tree, d);
  const double lk = std::log(kappa_max) / 2.0;
  for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
    Eigen::MatrixXd q = random_orthogonal(d, rng);
    Eigen::VectorXd lam(d);
    for (int i = 0; i < d; ++i) lam[i] = std::exp(rng.uniform(-lk, lk));
    out.set(x, q * lam.asDiagonal() * q.transpose());
  }
  return out;
}

MatrixWeight MatrixWeight::random_smooth(const MeasuredTree& tree, int d, double kappa_max, Rng& rng) {
  MatrixWeight out(tree, d);
  const double lk = std::log(kappa_max) / 2.0;
  Eigen::MatrixXd q = random_orthogonal(d, rng);
  Eigen::VectorXd loglam(d);
  for (int i = 0; i < d; ++i) loglam[i] = rng.uniform(-lk / 2, lk / 2);
  const double step = lk / std::sqrt(double(tree.leaf_count()) + 1.0);
  for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
    for (int i = 0; i < d; ++i) {
      loglam[i] = std::clamp(loglam[i] + step * rng.normal(), -lk, lk);
    }
    out.set(x, q * loglam.array().exp().matrix().asDiagonal() * q.transpose());
  }
  return out;
}

namespace {

double op_norm(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()[0];
}

// (avg_Q |W^{1/p} e|^p over mu)^{1/p}
double lp_average_norm(const MatrixWeight& w, double p, const CubeId& q, const Eigen::VectorXd& e) {
  const MeasuredTree& tree = w.tree();
  const auto& pw = w.powers(1.0 / p);
  double s = 0.0;
  const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
  for (std::uint64_t x = a; x < b; ++x) {
    s += std::pow((pw[x] * e).norm(), p) * tree.leaf_mass(x);
  }
  return std::pow(s / tree.mu(q), 1.0 / p);
}

std::vector<Eigen::VectorXd> sphere_samples(int d, int count, Rng& rng) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(count + 2 * d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = 1.0;
    out.push_back(e);
    out.push_back(-e);
  }
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd u(d);
    for (int i = 0; i < d; ++i) u[i] = rng.normal();
    const double n = u.norm();
    if (n > 0) out.push_back(u / n);
  }
  return out;
}

}  // namespace

ReducingOperator reducing_operator(const MatrixWeight& w, double p, const CubeId& q,
                                   int sphere_samples_count) {
  const MeasuredTree& tree = w.tree();
  tree.check_cube(q);
  const int d = w.dim();
  ReducingOperator out;
  out.cube = q;
  out.p = p;

  if (p == 2.0) {
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(d, d);
    const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
    for (std::uint64_t x = a; x < b; ++x) avg += w.at(x) * tree.leaf_mass(x);
    avg /= tree.mu(q);
    out.mat = matrix_power(avg, 0.5);
    out.comparability = 1.0;
    return out;
  }
  if (d == 1) {
    Eigen::VectorXd e(1);
    e[0] = 1.0;
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = lp_average_norm(w, p, q, e);
    out.mat = m;
    out.comparability = 1.0;
    return out;
  }

  // Ellipsoidal model of the norm ball B = {e : rho(e) <= 1}: compute the
  // minimum enclosing ellipsoid of sampled boundary points e/rho(e), polish by
  // ascent on the violation, then balance the John sandwich by d^{1/4}.
  Rng rng(derive_seed(0x5EDC0DE, (q.level * 1315423911ull) ^ q.index));
  auto dirs = sphere_samples(d, sphere_samples_count, rng);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(dirs.size());
  for (const auto& u : dirs) {
    const double r = lp_average_norm(w, p, q, u);
    if (r > 0) pts.push_back(u / r);
  }
  // Khachiyan ascent for the MVEE of the symmetric point cloud
  const int m = static_cast<int>(pts.size());
  std::vector<double> lam(m, 1.0 / m);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < m; ++i) L += lam[i] * pts[i] * pts[i].transpose();
  for (int it = 0; it < 2000; ++it) {
    Eigen::MatrixXd Linv = L.inverse();
    double kmax = -1.0;
    int arg = 0;
    for (int i = 0; i < m; ++i) {
      const double kap = pts[i].dot(Linv * pts[i]);
      if (kap > kmax) {
        kmax = kap;
        arg = i;
      }
    }
    if (kmax <= d * (1.0 + 1e-8)) break;
    const double beta = (kmax / d - 1.0) / (kmax - 1.0);
    for (auto& l : lam) l *= (1.0 - beta);
    lam[arg] += beta;
    L = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < m; ++i) {
      if (lam[i] > 0) L += lam[i] * pts[i] * pts[i].transpose();
    }
  }
  // enclosing shape P = L^{-1}/d: boundary points satisfy e^T P e <= 1 + tol,
  // so |P^{1/2} e| <= rho(e) <= sqrt(d) |P^{1/2} e| by the John property of the
  // minimum enclosing ellipsoid
  Eigen::MatrixXd P = L.inverse() / d;
  Eigen::MatrixXd G = matrix_power(P, 0.5);
  out.mat = 0.5 * (G + G.transpose());

  // sampled comparability certificate
  double comp = 1.0;
  for (const auto& u : dirs) {
    const double r = lp_average_norm(w, p, q, u);
    const double g = (out.mat * u).norm();
    if (r > 0 && g > 0) comp = std::max(comp, std::max(r / g, g / r));
  }
  out.comparability = comp;
  return out;
}

namespace {

// exact double-average expression avg_Q ( avg_R |A(x) B(y)|^{p'} )^{p/p'} with
// A = W^{1/p}, B = V^{1/p'} evaluated on leaf pairs
double pair_expression(const MatrixWeight& w, const MatrixWeight& v, double p, const CubeId& q,
                       const CubeId& r) {
  const MeasuredTree& tree = w.tree();
  const double pp = p / (p - 1.0);
  const auto& wp = w.powers(1.0 / p);
  const auto& vp = v.powers(1.0 / pp);
  const std::uint64_t qa = tree.first_leaf(q), qb = qa + tree.leaves_under(q);
  const std::uint64_t ra = tree.first_leaf(r), rb = ra + tree.leaves_under(r);
  double outer = 0.0;
  for (std::uint64_t x = qa; x < qb; ++x) {
    double inner = 0.0;
    for (std::uint64_t y = ra; y < rb; ++y) {
      inner += std::pow(op_norm(wp[x] * vp[y]), pp) * tree.leaf_mass(y);
    }
    inner /= tree.mu(r);
    outer += std::pow(inner, p / pp) * tree.leaf_mass(x);
  }
  return outer / tree.mu(q);
}

}  // namespace

ApReport two_weight_ap(const MatrixWeight& w, const MatrixWeight& v, double p) {
  const MeasuredTree& tree = w.tree();
  ApReport rep;
  rep.p = p;
  rep.variant = ApVariant::two_weight;
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const double val = pair_expression(w, v, p, q, q);
      if (val > rep.value) {
        rep.value = val;
        rep.argmax_q = rep.argmax_r = q;
      }
    }
  }
  return rep;
}

ApReport ap_constant(const MatrixWeight& w, double p) {
  MatrixWeight v = w.inverse_power(-(p / (p - 1.0)) / p);  // V = W^{-p'/p}
  ApReport rep = two_weight_ap(w, v, p);
  rep.variant = ApVariant::ap;
  return rep;
}

double cpb_weight(const HaarSystem& hs, double p, const CubeId& q, const CubeId& r) {
  if (q == r) return 1.0;
  const MeasuredTree& tree = hs.tree();
  const double mq = hs.m_ext(q), mr = hs.m_ext(r);
  return std::pow(mq, p / 2.0) * std::pow(mr, p / 2.0) /
         (tree.mu(r) * std::pow(tree.mu(q), p - 1.0));
}

namespace {

// all ordered pairs (Q, R) with dyadic distance <= N + 2
std::vector<std::pair<CubeId, CubeId>> distance_pairs(const MeasuredTree& tree, int N) {
  std::vector<std::pair<CubeId, CubeId>> pairs;
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      for (int up = 0; up <= std::min(N + 2, lev); ++up) {
        const CubeId anc = tree.ancestor(q, up);
        for (int down = 0; down + up <= N + 2 && anc.level + down <= tree.depth(); ++down) {
          for (const CubeId& r : tree.descendants_at(anc, down)) {
            if (tree.dyadic_distance(q, r) == up + down) pairs.emplace_back(q, r);
          }
        }
      }
    }
  }
  // deduplicate: a pair is generated once per common ancestor; keep unique
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end(),
                          [](const auto& a, const auto& b) {
                            return a.first == b.first && a.second == b.second;
                          }),
              pairs.end());
  return pairs;
}

}  // namespace

ApReport apN_constant(const MatrixWeight& w, double p, int N, const HaarSystem& hs) {
  const MeasuredTree& tree = w.tree();
  if (tree.depth() < 1) throw std::out_of_range("apN needs depth >= 1");
  MatrixWeight v = w.inverse_power(-(p / (p - 1.0)) / p);
  ApReport rep;
  rep.p = p;
  rep.variant = ApVariant::apN;
  for (const auto& [q, r] : distance_pairs(tree, N)) {
    const double val = cpb_weight(hs, p, q, r) * pair_expression(w, v, p, q, r);
    if (val > rep.value) {
      rep.value = val;
      rep.argmax_q = q;
      rep.argmax_r = r;
    }
  }
  return rep;
}

double apN_reducing(const MatrixWeight& w, double p, int N, const HaarSystem& hs) {
  const MeasuredTree& tree = w.tree();
  const double pp = p / (p - 1.0);
  MatrixWeight v = w.inverse_power(-pp / p);
  double best = 0.0;
  for (const auto& [q, r] : distance_pairs(tree, N)) {
    const auto wi = reducing_operator(w, p, q);
    const auto vj = reducing_operator(v, pp, r);
    best = std::max(best, cpb_weight(hs, p, q, r) * std::pow(op_norm(wi.mat * vj.mat), p));
  }
  return best;
}

ApReport apb_constant(const MatrixWeight& w, double p, const HaarSystem& hs) {
  const MeasuredTree& tree = w.tree();
  MatrixWeight v = w.inverse_power(-(p / (p - 1.0)) / p);
  ApReport rep;
  rep.p = p;
  rep.variant = ApVariant::apb;

  auto consider = [&](const CubeId& q, const CubeId& r) {
    const double val = cpb_weight(hs, p, q, r) * pair_expression(w, v, p, q, r);
    if (val > rep.value) {
      rep.value = val;
      rep.argmax_q = q;
      rep.argmax_r = r;
    }
  };

  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      // R in ch(parent(Q)) (siblings and Q itself)
      if (lev >= 1) {
        for (const auto& r : tree.children(tree.parent(q))) consider(q, r);
      } else {
        consider(q, q);
      }
      // R in ch(Q^{(2)}) and the symmetric configuration Q in ch(R^{(2)})
      if (lev >= 2) {
        for (const auto& r : tree.children(tree.ancestor(q, 2))) {
          consider(q, r);
          consider(r, q);
        }
      }
    }
  }
  return rep;
}

double fujii_wilson_ainfty(const MeasuredTree& tree, const std::vector<double>& w_leaf) {
  // sup_Q (1/w(Q)) int_Q M^D_Q(w 1_Q) dmu, exact by per-leaf chain maxima of
  // the precomputed subcube averages
  std::vector<std::vector<double>> avg(tree.depth() + 1);
  avg[tree.depth()] = w_leaf;
  const int b = tree.branching();
  for (int lev = tree.depth() - 1; lev >= 0; --lev) {
    avg[lev].assign(tree.cubes_at(lev), 0.0);
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      double s = 0.0;
      for (int o = 0; o < b; ++o) {
        const CubeId child{lev + 1, i * b + o};
        s += avg[lev + 1][child.index] * tree.mu(child);
      }
      avg[lev][i] = s / tree.mu(lev, i);
    }
  }
  double best = 0.0;
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const std::uint64_t qa = tree.first_leaf(q), qb = qa + tree.leaves_under(q);
      double integral = 0.0;
      for (std::uint64_t x = qa; x < qb; ++x) {
        double chain_max = 0.0;
        for (int lv = lev; lv <= tree.depth(); ++lv) {
          chain_max = std::max(chain_max, avg[lv][tree.ancestor_of_leaf(x, lv).index]);
        }
        integral += chain_max * tree.leaf_mass(x);
      }
      const double wq = avg[lev][i] * tree.mu(q);
      if (wq > 0) best = std::max(best, integral / wq);
    }
  }
  return best;
}

ApReport ap_infty_sc(const MatrixWeight& w, double p, int directions, Rng& rng) {
  const MeasuredTree& tree = w.tree();
  const int d = w.dim();
  ApReport rep;
  rep.p = p;
  rep.variant = ApVariant::ap_infty_sc;
  rep.sampled = d > 1;
  const auto& pw = w.powers(1.0 / p);

  auto eval = [&](const Eigen::VectorXd& e) {
    std::vector<double> wl(tree.leaf_count());
    for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) wl[x] = std::pow((pw[x] * e).norm(), p);
    return fujii_wilson_ainfty(tree, wl);
  };

  auto dirs = sphere_samples(d, d == 1 ? 0 : directions, rng);
  Eigen::VectorXd best_dir = dirs.front();
  for (const auto& e : dirs) {
    const double val = eval(e);
    if (val > rep.value) {
      rep.value = val;
      best_dir = e;
    }
  }
  // local ascent polish from the best sample
  if (d > 1) {
    double step = 0.3;
    for (int it = 0; it < 20; ++it) {
      bool improved = false;
      for (int i = 0; i < d; ++i) {
        for (double sgn : {1.0, -1.0}) {
          Eigen::VectorXd cand = best_dir;
          cand[i] += sgn * step;
          cand.normalize();
          const double val = eval(cand);
          if (val > rep.value) {
            rep.value = val;
            best_dir = cand;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
  }
  return rep;
}

double opnorm_l2w(const MeasuredTree& tree, const MatrixWeight& w,
                  const std::function<LeafFunction(const LeafFunction&)>& op, int dim) {
  const std::uint64_t nl = tree.leaf_count();
  const std::size_t n = nl * dim;
  if (n > 4096) throw std::invalid_argument("opnorm_l2w: problem too large");
  // columns of the operator in leaf coordinates
  Eigen::MatrixXd T(n, n);
  LeafFunction basis(tree, dim);
  for (std::size_t col = 0; col < n; ++col) {
    std::fill(basis.raw().begin(), basis.raw().end(), 0.0);
    basis.raw()[col] = 1.0;
    const LeafFunction img = op(basis);
    for (std::size_t row = 0; row < n; ++row) T(row, col) = img.raw()[row];
  }
  // G = diag_x(mu_x W(x)); norm = sigma_max(G^{1/2} T G^{-1/2})
  Eigen::MatrixXd gh = Eigen::MatrixXd::Zero(n, n), ghi = Eigen::MatrixXd::Zero(n, n);
  const auto& wh = w.powers(0.5);
  const auto& whi = w.powers(-0.5);
  for (std::uint64_t x = 0; x < nl; ++x) {
    const double s = std::sqrt(tree.leaf_mass(x));
    gh.block(x * dim, x * dim, dim, dim) = s * wh[x];
    ghi.block(x * dim, x * dim, dim, dim) = whi[x] / s;
  }
  Eigen::MatrixXd M = gh * T * ghi;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()[0];
}

double opnorm_l2w(const MeasuredTree& tree, const MatrixWeight& w, const HaarShift& shift) {
  return opnorm_l2w(tree, w, [&](const LeafFunction& f) { return shift.apply(f); }, w.dim());
}

double opnorm_l2w(const MeasuredTree& tree, const MatrixWeight& w, const MartingaleMultiplier& m) {
  return opnorm_l2w(tree, w, [&](const LeafFunction& f) { return m.apply(f); }, w.dim());
}

double opnorm_l2w_expectation(const MeasuredTree& tree, const MatrixWeight& w, const CubeId& q) {
  return opnorm_l2w(
      tree, w,
      [&](const LeafFunction& f) {
        LeafFunction out(tree, f.dim());
        const auto avg = f.average(q);
        const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
        for (std::uint64_t x = a; x < b; ++x) {
          for (int c = 0; c < f.dim(); ++c) out(x, c) = avg[c];
        }
        return out;
      },
      w.dim());
}

double expectation_norm_closed_form(const MeasuredTree& tree, const MatrixWeight& w,
                                    const CubeId& q) {
  const int d = w.dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d), b = Eigen::MatrixXd::Zero(d, d);
  const std::uint64_t qa = tree.first_leaf(q), qb = qa + tree.leaves_under(q);
  for (std::uint64_t x = qa; x < qb; ++x) {
    a += w.at(x) * tree.leaf_mass(x);
    b += matrix_power(w.at(x), -1.0) * tree.leaf_mass(x);
  }
  a /= tree.mu(q);
  b /= tree.mu(q);
  return op_norm(matrix_power(a, 0.5) * matrix_power(b, 0.5));
}

double opnorm_lpw_lower_bound(const MeasuredTree& tree, const MatrixWeight& w,
                              const std::function<LeafFunction(const LeafFunction&)>& op,
                              const std::function<LeafFunction(const LeafFunction&)>& op_adj,
                              int dim, double p, int starts, std::uint64_t seed) {
  const auto& wp = w.powers(1.0 / p);
  auto lpw_norm = [&](const LeafFunction& f) {
    double s = 0.0;
    for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
      Eigen::VectorXd v(dim);
      for (int c = 0; c < dim; ++c) v[c] = f(x, c);
      s += std::pow((wp[x] * v).norm(), p) * tree.leaf_mass(x);
    }
    return std::pow(s, 1.0 / p);
  };

  const auto& wpm = w.powers(-2.0 / p);
  double best = 0.0;
  for (int start = 0; start < starts; ++start) {
    Rng rng(derive_seed(seed, start));
    LeafFunction f = random_test_function(tree, dim, rng, 1 + start % 3);
    double fn = lpw_norm(f);
    if (fn <= 0) continue;
    f.scale(1.0 / fn);
    double cur = lpw_norm(op(f));
    for (int it = 0; it < 120; ++it) {
      // ascent direction W^{-2/p} T* [ W^{1/p,T} (phi_p(W^{1/p} T f)) ]: the
      // L^p(W)-geometry gradient; at p = 2 the pure step is power iteration
      const LeafFunction tf = op(f);
      LeafFunction weighted(tree, dim);
      for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
        Eigen::VectorXd v(dim);
        for (int c = 0; c < dim; ++c) v[c] = tf(x, c);
        Eigen::VectorXd wv = wp[x] * v;
        const double nv = wv.norm();
        if (nv <= 0) continue;
        Eigen::VectorXd g = wp[x].transpose() * (wv * std::pow(nv, p - 2.0));
        for (int c = 0; c < dim; ++c) weighted(x, c) = g(c);
      }
      LeafFunction dir = op_adj(weighted);
      for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
        Eigen::VectorXd v(dim);
        for (int c = 0; c < dim; ++c) v[c] = dir(x, c);
        Eigen::VectorXd pv = wpm[x] * v;
        for (int c = 0; c < dim; ++c) dir(x, c) = pv[c];
      }
      const double dn = lpw_norm(dir);
      if (dn <= 0) break;
      dir.scale(1.0 / dn);

      bool improved = false;
      // candidate mixes, including the pure iteration step
      for (double s : {-1.0, 4.0, 1.0, 0.25, 0.0625}) {
        LeafFunction cand(tree, dim);
        if (s < 0) {
          cand = dir;
        } else {
          cand = f;
          cand.axpy(s, dir);
        }
        const double cn = lpw_norm(cand);
        if (cn <= 0) continue;
        cand.scale(1.0 / cn);
        const double val = lpw_norm(op(cand));
        if (val > cur * (1.0 + 1e-13)) {
          f = cand;
          cur = val;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    best = std::max(best, cur);
  }
  return best;
}

LeafFunction sparse_square_function(const MeasuredTree& tree, const std::vector<CubeId>& family,
                                    const MatrixWeight& w, double p,
                                    const std::vector<ReducingOperator>& reducers,
                                    const LeafFunction& g_scalar) {
  if (g_scalar.dim() != 1) throw std::invalid_argument("square function expects scalar g");
  if (family.size() != reducers.size()) throw std::invalid_argument("family/reducer mismatch");
  const double pp = p / (p - 1.0);
  const auto& wp = w.powers(1.0 / p);
  LeafFunction out(tree, 1);
  for (std::size_t i = 0; i < family.size(); ++i) {
    const CubeId& q = family[i];
    const Eigen::MatrixXd winv = reducers[i].mat.inverse();
    double avg = 0.0;
    const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
    for (std::uint64_t x = a; x < b; ++x) {
      avg += op_norm(winv * wp[x]) * std::abs(g_scalar(x, 0)) * tree.leaf_mass(x);
    }
    avg /= tree.mu(q);
    const double term = std::pow(avg, pp);
    for (std::uint64_t x = a; x < b; ++x) out(x, 0) += term;
  }
  for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) out(x, 0) = std::pow(out(x, 0), 1.0 / pp);
  return out;
}

NecessityResult necessity_experiment(const MatrixWeight& w, double p, const HaarSystem& hs,
                                     const CubeId& j, const CubeId& k) {
  const MeasuredTree& tree = w.tree();
  if (j.level < 1 || k.level < 1) throw std::invalid_argument("necessity pair needs non-root cubes");
  const double pp = p / (p - 1.0);
  MatrixWeight v = w.inverse_power(-pp / p);

  NecessityResult res;
  const auto wj = reducing_operator(w, p, j);
  const auto vk = reducing_operator(v, pp, k);
  res.lhs = cpb_weight(hs, p, j, k) * std::pow(op_norm(wj.mat * vk.mat), p);

  // rank-one shift T f = <f, h_{parent(K)}> h_{parent(J)}, anchored at the
  // minimal common ancestor of the two parents
  const CubeId kp = tree.parent(k), jp = tree.parent(j);
  CubeId a = kp, b = jp;
  while (a.level > b.level) a = tree.parent(a);
  while (b.level > a.level) b = tree.parent(b);
  while (a.index != b.index) {
    a = tree.parent(a);
    b = tree.parent(b);
  }
  const CubeId q = a;
  const int s = kp.level - q.level, t = jp.level - q.level;
  std::vector<ShiftCoeff> cs = {{q, kp, jp, 1.0}};
  HaarShift rank_one(hs, s, t, std::move(cs));

  if (p == 2.0) {
    res.shift_norm = opnorm_l2w(tree, w, rank_one);
  } else {
    res.shift_norm = opnorm_lpw_lower_bound(
        tree, w, [&](const LeafFunction& f) { return rank_one.apply(f); },
        [&](const LeafFunction& f) { return rank_one.adjoint().apply(f); }, w.dim(), p, 8, 1234);
  }

  // closed form for p = 2: ||T|| = | (int hJp^2 W)^{1/2} (int hKp^2 W^{-1})^{1/2} |
  if (p == 2.0) {
    const int d = w.dim();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d), B = Eigen::MatrixXd::Zero(d, d);
    for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
      const double hj = hs.value_at_leaf(jp, x);
      const double hk = hs.value_at_leaf(kp, x);
      if (hj != 0.0) A += hj * hj * tree.leaf_mass(x) * w.at(x);
      if (hk != 0.0) B += hk * hk * tree.leaf_mass(x) * matrix_power(w.at(x), -1.0);
    }
    res.closed_form_norm = op_norm(matrix_power(A, 0.5) * matrix_power(B, 0.5));
  }

  res.ratio = res.lhs / std::pow(std::max(res.shift_norm, 1e-300), 3.0 * p);
  return res;
}

}  // namespace dyadlab
