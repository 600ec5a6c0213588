#include "dyadlab/zonotope.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dyadlab {

void Zonotope::add_generator(const double* g, double scale) {
  for (int c = 0; c < d_; ++c) gens_.push_back(g[c] * scale);
}

Zonotope Zonotope::merged(double rel_tol) const {
  // Direction-bucket the generators: parallel (or anti-parallel) segments merge
  // exactly into one segment with summed length.
  const std::size_t m = generator_count();
  std::vector<double> norms(m);
  std::vector<std::size_t> order;
  order.reserve(m);
  double scale = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (int c = 0; c < d_; ++c) s += generator(j)[c] * generator(j)[c];
    norms[j] = std::sqrt(s);
    scale = std::max(scale, norms[j]);
    if (norms[j] > 0.0) order.push_back(j);
  }
  const double drop = rel_tol * scale;
  Zonotope out(d_);
  out.has_provenance = has_provenance;
  out.provenance = provenance;
  std::vector<std::vector<double>> dirs;  // canonical unit directions kept
  std::vector<double> lens;
  for (std::size_t j : order) {
    if (norms[j] <= drop) continue;
    std::vector<double> u(d_);
    for (int c = 0; c < d_; ++c) u[c] = generator(j)[c] / norms[j];
    // canonical sign: first nonzero component positive
    for (int c = 0; c < d_; ++c) {
      if (std::abs(u[c]) > 1e-14) {
        if (u[c] < 0) {
          for (int k = 0; k < d_; ++k) u[k] = -u[k];
        }
        break;
      }
    }
    bool found = false;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      double dot = 0.0;
      for (int c = 0; c < d_; ++c) dot += dirs[k][c] * u[c];
      if (dot > 1.0 - 1e-13) {
        lens[k] += norms[j];
        found = true;
        break;
      }
    }
    if (!found) {
      dirs.push_back(u);
      lens.push_back(norms[j]);
    }
  }
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    std::vector<double> g(d_);
    for (int c = 0; c < d_; ++c) g[c] = dirs[k][c] * lens[k];
    out.add_generator(g.data());
  }
  return out;
}

double Zonotope::support(const double* u) const {
  double h = 0.0;
  const std::size_t m = generator_count();
  for (std::size_t j = 0; j < m; ++j) {
    double dot = 0.0;
    for (int c = 0; c < d_; ++c) dot += generator(j)[c] * u[c];
    h += std::abs(dot);
  }
  return h;
}

Zonotope Zonotope::scaled(double c) const {
  Zonotope out(d_);
  out.has_provenance = has_provenance;
  out.provenance = provenance;
  out.gens_ = gens_;
  for (double& v : out.gens_) v *= c;
  return out;
}

Zonotope convex_body_avg(const LeafFunction& f, const CubeId& q) {
  const MeasuredTree& tree = f.tree();
  tree.check_cube(q);
  const double muq = tree.mu(q);
  Zonotope z(f.dim());
  z.has_provenance = true;
  z.provenance = q;
  const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
  std::vector<double> g(f.dim());
  for (std::uint64_t x = a; x < b; ++x) {
    const double w = tree.leaf_mass(x) / muq;
    double nrm = 0.0;
    for (int c = 0; c < f.dim(); ++c) {
      g[c] = f(x, c) * w;
      nrm += g[c] * g[c];
    }
    if (nrm > 0.0) z.add_generator(g.data());
  }
  return z;
}

MemberResult member(const std::vector<double>& v,
                    const std::vector<std::pair<double, const Zonotope*>>& combo,
                    double tol_scale) {
  const int d = static_cast<int>(v.size());
  std::vector<double> gens;
  for (const auto& [c, z] : combo) {
    if (c < 0.0) throw std::invalid_argument("member: scales must be nonnegative");
    if (z->dim() != d) throw std::invalid_argument("member: dimension mismatch");
    const std::size_t m = z->generator_count();
    for (std::size_t j = 0; j < m; ++j) {
      const double* g = z->generator(j);
      for (int k = 0; k < d; ++k) gens.push_back(g[k] * c);
    }
  }
  Zonotope stacked(d, std::move(gens));
  Zonotope z = stacked.merged();

  double vnorm = 0.0;
  for (double c : v) vnorm += c * c;
  vnorm = std::sqrt(vnorm);
  const double tol = tol_scale * (1.0 + vnorm);

  // 1D: the body is the exact segment [-h, h]
  if (d == 1) {
    const double h = z.support(std::vector<double>{1.0}.data());
    MemberResult r;
    r.residual = std::abs(v[0]) - h;
    r.inside = r.residual <= tol;
    if (!r.inside) r.separator = {v[0] >= 0 ? 1.0 : -1.0};
    r.residual = std::max(0.0, r.residual);
    return r;
  }

  // scale for conditioning
  double scale = vnorm;
  const std::size_t m = z.generator_count();
  for (std::size_t j = 0; j < m; ++j) {
    for (int c = 0; c < d; ++c) scale = std::max(scale, std::abs(z.generator(j)[c]));
  }
  if (scale <= 0.0) scale = 1.0;
  std::vector<double> gs(z.raw());
  for (double& x : gs) x /= scale;
  std::vector<double> vs(v);
  for (double& x : vs) x /= scale;

  const auto lp = zonotope_membership_lp(gs, m, d, vs.data(), tol / scale);
  MemberResult r;
  r.inside = lp.feasible;
  r.residual = lp.residual * scale;
  r.separator = lp.separator;
  return r;
}

MemberResult member(const std::vector<double>& v, const Zonotope& z, double tol_scale) {
  return member(v, {{1.0, &z}}, tol_scale);
}

double Ellipsoid::support(const double* u) const {
  double s = 0.0;
  for (int j = 0; j < rank; ++j) {
    double dot = 0.0;
    for (int c = 0; c < d; ++c) dot += basis(c, j) * u[c];
    s += (semi_axes[j] * dot) * (semi_axes[j] * dot);
  }
  return std::sqrt(s);
}

std::vector<double> Ellipsoid::boundary_point(const std::vector<double>& sphere_coords) const {
  std::vector<double> p(d, 0.0);
  for (int j = 0; j < rank; ++j) {
    for (int c = 0; c < d; ++c) p[c] += basis(c, j) * semi_axes[j] * sphere_coords[j];
  }
  return p;
}

namespace {

// Facet normals of a full-rank zonotope in R^r: directions orthogonal to r-1
// generators, with the exact support value attached.
struct FacetSet {
  std::vector<double> normals;  // k x r
  std::vector<double> support;
  std::size_t count = 0;
  int r = 1;
};

void push_normal(FacetSet& fs, const Eigen::VectorXd& u, const Eigen::MatrixXd& gens) {
  const double nrm = u.norm();
  if (nrm <= 1e-13) return;
  Eigen::VectorXd un = u / nrm;
  // canonical sign
  for (int c = 0; c < un.size(); ++c) {
    if (std::abs(un[c]) > 1e-12) {
      if (un[c] < 0) un = -un;
      break;
    }
  }
  double h = 0.0;
  for (int j = 0; j < gens.rows(); ++j) h += std::abs(gens.row(j).dot(un));
  if (h <= 0.0) return;
  fs.normals.insert(fs.normals.end(), un.data(), un.data() + un.size());
  fs.support.push_back(h);
  ++fs.count;
}

FacetSet facet_normals(const Eigen::MatrixXd& gens /* m x r */) {
  const int r = static_cast<int>(gens.cols());
  const int m = static_cast<int>(gens.rows());
  FacetSet fs;
  fs.r = r;
  if (r == 1) {
    Eigen::VectorXd u(1);
    u[0] = 1.0;
    push_normal(fs, u, gens);
    return fs;
  }
  if (r == 2) {
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd u(2);
      u[0] = -gens(j, 1);
      u[1] = gens(j, 0);
      push_normal(fs, u, gens);
    }
    return fs;
  }
  if (r == 3) {
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        Eigen::Vector3d a = gens.row(i).head<3>(), b = gens.row(j).head<3>();
        Eigen::VectorXd u = a.cross(b);
        push_normal(fs, u, gens);
      }
    }
    return fs;
  }
  if (r == 4) {
    const std::size_t triples = static_cast<std::size_t>(m) * (m - 1) * (m - 2) / 6;
    if (triples > 2'000'000) throw std::runtime_error("too many generators for exact facet enumeration in R^4");
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        for (int k = j + 1; k < m; ++k) {
          // generalized cross product via 3x3 cofactors
          Eigen::Matrix<double, 3, 4> A;
          A.row(0) = gens.row(i);
          A.row(1) = gens.row(j);
          A.row(2) = gens.row(k);
          Eigen::VectorXd u(4);
          for (int c = 0; c < 4; ++c) {
            Eigen::Matrix3d M;
            int cc = 0;
            for (int col = 0; col < 4; ++col) {
              if (col == c) continue;
              M.col(cc++) = A.col(col);
            }
            u[c] = ((c % 2) == 0 ? 1.0 : -1.0) * M.determinant();
          }
          push_normal(fs, u, gens);
        }
      }
    }
    return fs;
  }
  throw std::runtime_error("john_ellipsoid supports carrier dimension <= 4");
}

}  // namespace

Ellipsoid john_ellipsoid(const Zonotope& z, double tol) {
  const int d = z.dim();
  Ellipsoid e;
  e.d = d;
  e.basis = Eigen::MatrixXd::Identity(d, d);
  e.semi_axes = Eigen::VectorXd::Zero(d);

  Zonotope zm = z.merged();
  const std::size_t m = zm.generator_count();
  if (m == 0) {
    e.rank = 0;
    return e;
  }

  Eigen::MatrixXd G(m, d);
  for (std::size_t j = 0; j < m; ++j) {
    for (int c = 0; c < d; ++c) G(j, c) = zm.generator(j)[c];
  }

  // carrier subspace via SVD
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double thresh = 1e-10 * sv[0];
  int r = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > thresh) ++r;
  }
  Eigen::MatrixXd V = svd.matrixV();  // d x d, first r columns span the carrier
  e.rank = r;
  e.basis = V;
  if (r == 0) return e;

  Eigen::MatrixXd P = G * V.leftCols(r);  // m x r projected generators

  if (r == 1) {
    double len = 0.0;
    for (std::size_t j = 0; j < m; ++j) len += std::abs(P(j, 0));
    e.semi_axes[0] = len;
    return e;
  }

  FacetSet fs = facet_normals(P);
  const std::size_t k = fs.count;
  if (k == 0) throw std::runtime_error("zonotope facet enumeration produced no normals");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> N(
      fs.normals.data(), k, r);

  // scaled contact points c_i = u_i / h_i
  Eigen::MatrixXd C(k, r);
  for (std::size_t i = 0; i < k; ++i) C.row(i) = N.row(i) / fs.support[i];

  // Khachiyan / Wolfe-Atwood ascent on the active set, with lazy activation of
  // the most violated facet until every constraint is within (1 + tol).
  std::vector<std::size_t> active;
  {
    // seed with a well-spread spanning subset: greedy max-norm residual
    Eigen::MatrixXd basis_acc(r, 0);
    std::vector<char> used(k, 0);
    for (int pick = 0; pick < r; ++pick) {
      double best = -1.0;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (used[i]) continue;
        Eigen::VectorXd v = C.row(i).transpose();
        if (basis_acc.cols() > 0) {
          v -= basis_acc * (basis_acc.transpose() * v);
        }
        const double nb = v.norm();
        if (nb > best) {
          best = nb;
          arg = i;
        }
      }
      used[arg] = 1;
      active.push_back(arg);
      Eigen::VectorXd v = C.row(arg).transpose();
      if (basis_acc.cols() > 0) v -= basis_acc * (basis_acc.transpose() * v);
      if (v.norm() > 1e-14) {
        basis_acc.conservativeResize(r, basis_acc.cols() + 1);
        basis_acc.col(basis_acc.cols() - 1) = v / v.norm();
      }
    }
  }

  std::vector<double> lam(k, 0.0);
  for (std::size_t i : active) lam[i] = 1.0 / active.size();

  auto lambda_matrix = [&]() {
    Eigen::MatrixXd Lm = Eigen::MatrixXd::Zero(r, r);
    for (std::size_t i : active) {
      if (lam[i] > 0.0) Lm += lam[i] * (C.row(i).transpose() * C.row(i));
    }
    return Lm;
  };

  Eigen::MatrixXd Lm = lambda_matrix();
  const double inner_tol = tol * 0.25;
  const int max_outer = 4000;
  for (int outer = 0; outer < max_outer; ++outer) {
    // inner ascent over the active set
    Eigen::MatrixXd Linv = Lm.inverse();
    const int max_inner = 20000;
    for (int it = 0; it < max_inner; ++it) {
      double kap_max = -1.0, kap_min = std::numeric_limits<double>::infinity();
      std::size_t arg_max = active[0], arg_min = active[0];
      for (std::size_t i : active) {
        const double kap = C.row(i) * Linv * C.row(i).transpose();
        if (kap > kap_max) {
          kap_max = kap;
          arg_max = i;
        }
        if (lam[i] > 0.0 && kap < kap_min) {
          kap_min = kap;
          arg_min = i;
        }
      }
      if (kap_max <= r * (1.0 + inner_tol)) break;
      std::size_t pivot;
      double beta;
      if (kap_max - r >= r - kap_min) {
        pivot = arg_max;
        beta = (kap_max / r - 1.0) / (kap_max - 1.0);
      } else {
        pivot = arg_min;
        beta = (kap_min / r - 1.0) / (kap_min - 1.0);  // negative: away step
        const double cap = -lam[pivot] / (1.0 - lam[pivot]);
        beta = std::max(beta, cap);
      }
      // lam <- (1 - beta) lam + beta e_pivot
      for (std::size_t i : active) lam[i] *= (1.0 - beta);
      lam[pivot] += beta;
      if (lam[pivot] < 0.0) lam[pivot] = 0.0;
      Lm = lambda_matrix();
      Linv = Lm.inverse();
    }

    // global violation scan
    Linv = Lm.inverse();
    double worst = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double kap = C.row(i) * Linv * C.row(i).transpose();
      if (kap > worst) {
        worst = kap;
        arg = i;
      }
    }
    if (worst <= r * (1.0 + tol)) break;
    bool already = false;
    for (std::size_t i : active) {
      if (i == arg) already = true;
    }
    if (!already) active.push_back(arg);
    if (lam[arg] == 0.0) {
      for (std::size_t i : active) lam[i] *= (1.0 - 1.0 / (8.0 * r));
      lam[arg] += 1.0 / (8.0 * r);
      Lm = lambda_matrix();
    }
    if (outer == max_outer - 1) throw std::runtime_error("john ellipsoid ascent did not converge");
  }

  // exact global certificate level K = max_i c_i^T Lm^{-1} c_i
  Eigen::MatrixXd Linv = Lm.inverse();
  double K = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    K = std::max(K, double(C.row(i) * Linv * C.row(i).transpose()));
  }

  // Inscribed ellipsoid shape M = Lm^{-1} / K (in carrier coordinates):
  // h_E(u_i) = sqrt(u_i^T M u_i) <= h_i holds for every facet by construction,
  // and Z subset sqrt(K) E from the support-function bound of the ascent.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Linv / K);
  Eigen::VectorXd axes = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd U = es.eigenvectors();

  // order axes descending and embed into ambient coordinates
  std::vector<int> order(r);
  for (int i = 0; i < r; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return axes[a] > axes[b]; });
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd alphas = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < r; ++i) {
    full.col(i) = V.leftCols(r) * U.col(order[i]);
    alphas[i] = axes[order[i]];
  }
  // complete the basis orthonormally beyond the carrier
  for (int i = r; i < d; ++i) full.col(i) = V.col(i);
  e.basis = full;
  e.semi_axes = alphas;
  return e;
}

}  // namespace dyadlab
