#pragma once

#include <cstdint>
#include <vector>

#include "dyadlab/haar.hpp"
#include "dyadlab/leaf_function.hpp"
#include "dyadlab/rng.hpp"
#include "dyadlab/tree.hpp"

namespace dyadlab {

struct ShiftCoeff {
  CubeId q, j, k;
  double c;
};

// Haar shift of complexity (s, t): sum over coefficient entries of
// c^Q_{J,K} <f, h_J> h_K with J in D_s(Q), K in D_t(Q). Coefficients are stored
// sparsely; vector-valued inputs act componentwise.
class HaarShift {
 public:
  HaarShift(const HaarSystem& haar, int s, int t, std::vector<ShiftCoeff> coeffs);

  const HaarSystem& haar() const { return *haar_; }
  const MeasuredTree& tree() const { return haar_->tree(); }
  int s() const { return s_; }
  int t() const { return t_; }
  const std::vector<ShiftCoeff>& coeffs() const { return coeffs_; }

  LeafFunction apply(const LeafFunction& f) const;

  // T* swaps the roles of J and K (and of s and t)
  HaarShift adjoint() const;

  std::vector<HaarShift> t_separated_split() const;

  struct L1Report {
    bool verdict = true;
    CubeId worst_cube;
    double achieved = 0.0;  // max over Q of mu(Q) * ||K_Q||_inf
    double worst_kernel_sup = 0.0;
  };
  L1Report is_l1_normalized(double c) const;

  // ||K_Q||_inf for one cube, exact: the kernel collapses to a single (J, K)
  // term per leaf pair
  double kernel_sup(const CubeId& q) const;

  // uniform in [-1,1]; with floor delta > 0, |c| in [delta, 1] (non-degenerate)
  static HaarShift random(const HaarSystem& hs, int s, int t, Rng& rng, double density = 1.0,
                          double nondegenerate_floor = 0.0);
  // random shift rescaled per cube so that ||K_Q||_inf <= c_target / mu(Q)
  static HaarShift random_l1_normalized(const HaarSystem& hs, int s, int t, Rng& rng,
                                        double c_target = 1.0, double density = 1.0);

 private:
  const HaarSystem* haar_;
  int s_, t_;
  std::vector<ShiftCoeff> coeffs_;
};

// T_sigma f = sum_Q sigma_Q Delta_Q f with sigma_Q in {-1, +1}
class MartingaleMultiplier {
 public:
  MartingaleMultiplier(const MeasuredTree& tree, std::vector<int> sigma);
  static MartingaleMultiplier constant(const MeasuredTree& tree, int sign);
  static MartingaleMultiplier random(const MeasuredTree& tree, Rng& rng);

  const MeasuredTree& tree() const { return *tree_; }
  int sigma_flat(std::size_t flat) const { return sigma_[flat]; }
  int sigma(const CubeId& q) const;

  LeafFunction apply(const LeafFunction& f) const;

 private:
  const MeasuredTree* tree_;
  std::vector<int> sigma_;  // flat over non-leaf cubes, level-major
  std::vector<std::size_t> level_offset_;
};

struct CZDecomposition {
  double lambda = 0.0;
  std::vector<CubeId> stopping_cubes;
  LeafFunction g, b;
  std::vector<LeafFunction> b_parts;
  double b_l1_over_f_l1 = 0.0;           // recorded kappa
  double g_bmo_over_lambda = 0.0;
  double g_lp_ratio_p2 = 0.0;            // ||g||_p^p / (lambda^{p-1} ||f||_1)
  double g_lp_ratio_p4 = 0.0;
};

CZDecomposition cz_decompose(const LeafFunction& f_scalar, double lambda);

double bmo_norm(const LeafFunction& f_scalar);

struct WeakTypeResult {
  double constant = 0.0;      // sup over trials and lambda of lambda mu{|Tf|>lambda}/||f||_1
  double worst_lambda = 0.0;
  int worst_trial = -1;
};

// random f = leaf spikes + smooth part, fixed seed; observational only
LeafFunction random_test_function(const MeasuredTree& tree, int dim, Rng& rng, int spikes = 2);

template <typename Op>
WeakTypeResult weak_type_experiment(const MeasuredTree& tree, const Op& op, int trials,
                                    std::uint64_t seed, int lambda_grid = 40) {
  WeakTypeResult out;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, trial));
    LeafFunction f = random_test_function(tree, 1, rng);
    const LeafFunction tf = op.apply(f);
    const double f1 = f.norm_l1();
    if (f1 <= 0) continue;
    const double lo = 1e-3 * f1 / tree.total_mass();
    const double hi = 1e3 * std::max(tf.max_abs(), f.max_abs()) + lo;
    for (int k = 0; k < lambda_grid; ++k) {
      const double lam = lo * std::pow(hi / lo, double(k) / (lambda_grid - 1));
      double mass = 0.0;
      for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
        if (std::abs(tf(x, 0)) > lam) mass += tree.leaf_mass(x);
      }
      const double c = lam * mass / f1;
      if (c > out.constant) {
        out.constant = c;
        out.worst_lambda = lam;
        out.worst_trial = trial;
      }
    }
  }
  return out;
}

}  // namespace dyadlab
