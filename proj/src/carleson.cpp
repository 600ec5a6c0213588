#include "dyadlab/carleson.hpp"

#include <cmath>
#include <stdexcept>

namespace dyadlab {

WeightFamily::WeightFamily(const MeasuredTree& tree) : tree_(&tree) {
  std::size_t flat = 0, total = 0;
  level_start_.resize(tree.depth() + 2);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    level_start_[lev] = flat;
    flat += tree.cubes_at(lev);
  }
  level_start_[tree.depth() + 1] = flat;
  offset_.resize(flat);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      offset_[level_start_[lev] + i] = total;
      total += tree.leaves_under(CubeId{lev, i});
    }
  }
  values_.assign(total, 1.0);
}

std::size_t WeightFamily::flat(const CubeId& q) const {
  return level_start_[q.level] + q.index;
}

double WeightFamily::at(const CubeId& q, std::uint64_t leaf) const {
  return values_[offset_[flat(q)] + (leaf - tree_->first_leaf(q))];
}

void WeightFamily::set(const CubeId& q, std::uint64_t leaf, double value) {
  if (!(value > 0.0)) throw std::invalid_argument("weight family values must be positive");
  values_[offset_[flat(q)] + (leaf - tree_->first_leaf(q))] = value;
}

void WeightFamily::rescale(const CubeId& q, double factor) {
  const std::size_t o = offset_[flat(q)];
  for (std::uint64_t k = 0; k < tree_->leaves_under(q); ++k) values_[o + k] *= factor;
}

double WeightFamily::average(const CubeId& q) const { return average_of(q, q); }

double WeightFamily::average_of(const CubeId& p, const CubeId& q) const {
  const MeasuredTree& tree = *tree_;
  double s = 0.0;
  const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
  for (std::uint64_t x = a; x < b; ++x) s += at(p, x) * tree.leaf_mass(x);
  return s / tree.mu(q);
}

WeightFamily WeightFamily::constant(const MeasuredTree& tree, const std::vector<double>& w_leaf) {
  WeightFamily out(tree);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b; ++x) out.set(q, x, w_leaf[x]);
    }
  }
  return out;
}

WeightFamily WeightFamily::from_matrix_weight(const MatrixWeight& w, double p) {
  const MeasuredTree& tree = w.tree();
  WeightFamily out(tree);
  const auto& wp = w.powers(1.0 / p);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const auto red = reducing_operator(w, p, q);
      const Eigen::MatrixXd inv = red.mat.inverse();
      const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b; ++x) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(inv * wp[x]);
        out.set(q, x, std::pow(svd.singularValues()[0], p));
      }
    }
  }
  return out;
}

WeightFamily WeightFamily::random_smooth(const MeasuredTree& tree, Rng& rng, double spread) {
  WeightFamily out(tree);
  // one global smooth weight modulated per cube by a mild random factor
  std::vector<double> base(tree.leaf_count());
  double cur = 0.0;
  for (auto& v : base) {
    cur += rng.normal() * 0.4;
    cur = std::clamp(cur, -std::log(spread), std::log(spread));
    v = std::exp(cur);
  }
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const double mod = rng.log_uniform(1.0 / 2.0, 2.0);
      const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b; ++x) out.set(q, x, base[x] * mod);
    }
  }
  return out;
}

WeightFamily WeightFamily::random_adversarial(const MeasuredTree& tree, Rng& rng, double spike) {
  WeightFamily out(tree);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b; ++x) out.set(q, x, rng.log_uniform(1.0 / spike, spike));
    }
  }
  return out;
}

CarlesonData CarlesonData::zeros(const MeasuredTree& tree) {
  CarlesonData out;
  std::size_t flat = 0;
  for (int lev = 0; lev <= tree.depth(); ++lev) flat += tree.cubes_at(lev);
  out.alpha.assign(flat, 0.0);
  return out;
}

double compatibility_constant(const WeightFamily& family) {
  const MeasuredTree& tree = family.tree();
  double best = 1.0;  // Hoelder floor
  for (int pl = 0; pl <= tree.depth(); ++pl) {
    for (std::uint64_t pi = 0; pi < tree.cubes_at(pl); ++pi) {
      const CubeId p{pl, pi};
      for (int ql = pl; ql <= tree.depth(); ++ql) {
        for (const CubeId& q : tree.descendants_at(p, ql - pl)) {
          double sup = 0.0;
          const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
          for (std::uint64_t x = a; x < b; ++x) sup = std::max(sup, family.at(p, x) / family.at(q, x));
          const double val = sup * family.average(q) / family.average_of(p, q);
          best = std::max(best, val);
        }
      }
    }
  }
  return best;
}

double testing_constant_c2(const WeightFamily& family, const CarlesonData& alpha, double p) {
  const MeasuredTree& tree = family.tree();
  double best = 0.0;
  for (int pl = 0; pl <= tree.depth(); ++pl) {
    for (std::uint64_t pi = 0; pi < tree.cubes_at(pl); ++pi) {
      const CubeId pc{pl, pi};
      double sum = 0.0;
      for (int ql = pl; ql <= tree.depth(); ++ql) {
        for (const CubeId& q : tree.descendants_at(pc, ql - pl)) {
          const double aq = alpha.alpha[family.flat(q)];
          if (aq < 0.0) throw std::invalid_argument("alpha must be nonnegative");
          if (aq == 0.0) continue;
          sum += family.average_of(pc, q) * std::pow(family.average(q), p - 1.0) * aq;
        }
      }
      best = std::max(best, sum / (tree.mu(pc) * family.average(pc)));
    }
  }
  return best;
}

namespace {

double c1_exact_p2(const WeightFamily& family, const CarlesonData& alpha) {
  const MeasuredTree& tree = family.tree();
  const std::uint64_t n = tree.leaf_count();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd row(n);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const double aq = alpha.alpha[family.flat(q)];
      if (aq < 0.0) throw std::invalid_argument("alpha must be nonnegative");
      if (aq == 0.0) continue;
      row.setZero();
      const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b; ++x) {
        row[x] = std::sqrt(family.at(q, x)) * tree.leaf_mass(x) / tree.mu(q);
      }
      s.noalias() += aq * row * row.transpose();
    }
  }
  // C1 = lambda_max(D^{-1/2} S D^{-1/2}), D = diag(mu_leaf)
  Eigen::VectorXd dinv(n);
  for (std::uint64_t x = 0; x < n; ++x) dinv[x] = 1.0 / std::sqrt(tree.leaf_mass(x));
  Eigen::MatrixXd m = dinv.asDiagonal() * s * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

double c1_functional(const WeightFamily& family, const CarlesonData& alpha, double p,
                     const LeafFunction& f) {
  const MeasuredTree& tree = family.tree();
  const double pp = p / (p - 1.0);
  double total = 0.0;
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const double aq = alpha.alpha[family.flat(q)];
      if (aq == 0.0) continue;
      double avg = 0.0;
      const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
      for (std::uint64_t x = a; x < b; ++x) {
        avg += std::pow(family.at(q, x), 1.0 / pp) * f(x, 0) * tree.leaf_mass(x);
      }
      avg /= tree.mu(q);
      total += std::pow(std::max(avg, 0.0), p) * aq;
    }
  }
  return total;
}

double c1_ascent(const WeightFamily& family, const CarlesonData& alpha, double p,
                 std::uint64_t seed, int starts) {
  const MeasuredTree& tree = family.tree();
  const double pp = p / (p - 1.0);
  auto pnorm = [&](const LeafFunction& f) {
    double s = 0.0;
    for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
      s += std::pow(std::abs(f(x, 0)), p) * tree.leaf_mass(x);
    }
    return std::pow(s, 1.0 / p);
  };

  double best = 0.0;
  for (int start = 0; start < starts; ++start) {
    Rng rng(derive_seed(seed, start));
    LeafFunction f(tree, 1);
    // nonnegative start: mixture of flat and spiky
    for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
      f(x, 0) = rng.uniform(0.0, 1.0) + (rng.uniform() < 0.2 ? rng.log_uniform(1.0, 50.0) : 0.0);
    }
    double fn = pnorm(f);
    if (fn <= 0) continue;
    f.scale(1.0 / fn);
    double cur = c1_functional(family, alpha, p, f);
    for (int it = 0; it < 200; ++it) {
      // gradient of the functional at f (f >= 0)
      LeafFunction grad(tree, 1);
      for (int lev = 0; lev <= tree.depth(); ++lev) {
        for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
          const CubeId q{lev, i};
          const double aq = alpha.alpha[family.flat(q)];
          if (aq == 0.0) continue;
          double avg = 0.0;
          const std::uint64_t a = tree.first_leaf(q), b = a + tree.leaves_under(q);
          for (std::uint64_t x = a; x < b; ++x) {
            avg += std::pow(family.at(q, x), 1.0 / pp) * f(x, 0) * tree.leaf_mass(x);
          }
          avg /= tree.mu(q);
          if (avg <= 0) continue;
          const double c = p * std::pow(avg, p - 1.0) * aq / tree.mu(q);
          for (std::uint64_t x = a; x < b; ++x) {
            grad(x, 0) += c * std::pow(family.at(q, x), 1.0 / pp);
          }
        }
      }
      const double gn = pnorm(grad);
      if (gn <= 0) break;
      grad.scale(1.0 / gn);
      bool improved = false;
      for (double s : {-1.0, 2.0, 0.5, 0.125, 0.03125}) {
        LeafFunction cand(tree, 1);
        if (s < 0) {
          cand = grad;
        } else {
          cand = f;
          cand.axpy(s, grad);
        }
        for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) cand(x, 0) = std::max(cand(x, 0), 0.0);
        const double cn = pnorm(cand);
        if (cn <= 0) continue;
        cand.scale(1.0 / cn);
        const double val = c1_functional(family, alpha, p, cand);
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

}  // namespace

C1Result embedding_constant_c1(const WeightFamily& family, const CarlesonData& alpha, double p,
                               C1Method method, std::uint64_t seed, int starts) {
  C1Result out;
  out.method = method;
  if (method == C1Method::exact) {
    if (p != 2.0) throw std::invalid_argument("exact C1 oracle requires p = 2");
    out.value = c1_exact_p2(family, alpha);
  } else {
    out.value = c1_ascent(family, alpha, p, seed, starts);
  }
  return out;
}

EmbeddingReport verify_embedding_bounds(const WeightFamily& family, const CarlesonData& alpha,
                                        double p, std::uint64_t seed) {
  EmbeddingReport rep;
  rep.p = p;
  rep.A = compatibility_constant(family);
  rep.C2 = testing_constant_c2(family, alpha, p);
  const C1Method method = p == 2.0 ? C1Method::exact : C1Method::ascent;
  rep.method = method;
  rep.C1 = embedding_constant_c1(family, alpha, p, method, seed).value;
  const double pp = p / (p - 1.0);
  // for the ascent method a failed lower bound only measures ascent slack
  rep.lower_ok = std::pow(rep.A, -(p - 1.0)) * rep.C2 <= rep.C1 * (1.0 + 1e-9);
  const double denom = std::pow(rep.A, 1.0 + 1.0 / pp) * rep.C2;
  rep.upper_ratio = denom > 0 ? rep.C1 / denom : 0.0;
  return rep;
}

ExpandCheck expanding_sum_check(std::span<const double> a, double p) {
  if (a.size() > 12) throw std::invalid_argument("expanding_sum_check: sequence too long");
  if (!(p > 1.0)) throw std::invalid_argument("expanding_sum_check: p must exceed 1");
  for (double v : a) {
    if (v < 0.0) throw std::invalid_argument("expanding_sum_check: entries must be nonnegative");
  }
  const int m = static_cast<int>(std::floor(p));
  const double gamma = p - m;
  const int n = static_cast<int>(a.size());

  ExpandCheck out;
  double total = 0.0;
  for (double v : a) total += v;
  out.lhs = std::pow(total, p);

  // prefix sums for (sum_{j <= min} a_j)^gamma
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + a[i];

  double rhs = 0.0;
  std::vector<int> idx(m, 0);
  for (;;) {
    double prod = 1.0;
    int mn = n - 1;
    for (int k = 0; k < m; ++k) {
      prod *= a[idx[k]];
      mn = std::min(mn, idx[k]);
    }
    if (prod > 0.0) {
      const double tail = prefix[mn + 1];
      rhs += prod * (gamma > 0.0 ? std::pow(tail, gamma) : 1.0);
    }
    int k = m - 1;
    while (k >= 0 && ++idx[k] == n) {
      idx[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
  out.rhs = (m + 1) * rhs;
  out.ok = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

double classical_c2(const MeasuredTree& tree, const std::vector<double>& w_leaf,
                    const CarlesonData& alpha, double p) {
  // independent route: <w>_Q^p alpha_Q sums against mu(P) <w>_P
  std::size_t flat = 0;
  double best = 0.0;
  std::vector<std::size_t> level_start(tree.depth() + 1);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    level_start[lev] = flat;
    flat += tree.cubes_at(lev);
  }
  auto avg_w = [&](const CubeId& q) {
    double s = 0.0;
    for (std::uint64_t x = tree.first_leaf(q); x < tree.first_leaf(q) + tree.leaves_under(q); ++x) {
      s += w_leaf[x] * tree.leaf_mass(x);
    }
    return s / tree.mu(q);
  };
  for (int pl = 0; pl <= tree.depth(); ++pl) {
    for (std::uint64_t pi = 0; pi < tree.cubes_at(pl); ++pi) {
      const CubeId pc{pl, pi};
      double sum = 0.0;
      for (int ql = pl; ql <= tree.depth(); ++ql) {
        for (const CubeId& q : tree.descendants_at(pc, ql - pl)) {
          const double aq = alpha.alpha[level_start[ql] + q.index];
          if (aq == 0.0) continue;
          sum += std::pow(avg_w(q), p) * aq;
        }
      }
      best = std::max(best, sum / (tree.mu(pc) * avg_w(pc)));
    }
  }
  return best;
}

double classical_c1_exact_p2(const MeasuredTree& tree, const std::vector<double>& w_leaf,
                             const CarlesonData& alpha) {
  // substitution route: sup over g of sum_Q alpha_Q <g>_{Q,mu}^2 / ||g||^2_{L^2(w^{-1} dmu)}
  const std::uint64_t n = tree.leaf_count();
  std::size_t flat = 0;
  std::vector<std::size_t> level_start(tree.depth() + 1);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    level_start[lev] = flat;
    flat += tree.cubes_at(lev);
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd row(n);
  for (int lev = 0; lev <= tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const double aq = alpha.alpha[level_start[lev] + i];
      if (aq == 0.0) continue;
      row.setZero();
      for (std::uint64_t x = tree.first_leaf(q); x < tree.first_leaf(q) + tree.leaves_under(q); ++x) {
        row[x] = tree.leaf_mass(x) / tree.mu(q);
      }
      s.noalias() += aq * row * row.transpose();
    }
  }
  Eigen::VectorXd dinv(n);
  for (std::uint64_t x = 0; x < n; ++x) dinv[x] = std::sqrt(w_leaf[x] / tree.leaf_mass(x));
  Eigen::MatrixXd mres = dinv.asDiagonal() * s * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (mres + mres.transpose()));
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

}  // namespace dyadlab
