#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <vector>

#include "dyadlab/haar.hpp"
#include "dyadlab/leaf_function.hpp"
#include "dyadlab/rng.hpp"
#include "dyadlab/shift.hpp"
#include "dyadlab/tree.hpp"

namespace dyadlab {

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& spd, double alpha);

// Symmetric positive-definite d x d matrix per leaf.
class MatrixWeight {
 public:
  MatrixWeight(const MeasuredTree& tree, int d);

  const MeasuredTree& tree() const { return *tree_; }
  int dim() const { return d_; }

  Eigen::Map<const Eigen::MatrixXd> at(std::uint64_t leaf) const {
    return {vals_.data() + leaf * d_ * d_, d_, d_};
  }
  void set(std::uint64_t leaf, const Eigen::MatrixXd& m);

  void validate(double eig_floor_rel = 1e-10) const;

  // per-leaf spectral powers, cached by exponent
  const std::vector<Eigen::MatrixXd>& powers(double alpha) const;

  MatrixWeight inverse_power(double alpha) const;  // weight with values W^alpha

  static MatrixWeight identity(const MeasuredTree& tree, int d);
  static MatrixWeight from_scalar(const MeasuredTree& tree, const std::vector<double>& w);
  // random SPD via Q diag(exp(u)) Q^T, u uniform in [-log k, log k], iid per leaf
  static MatrixWeight random_iid(const MeasuredTree& tree, int d, double kappa_max, Rng& rng);
  // spectrally smooth random walk along the leaf order
  static MatrixWeight random_smooth(const MeasuredTree& tree, int d, double kappa_max, Rng& rng);

 private:
  const MeasuredTree* tree_;
  int d_;
  std::vector<double> vals_;
  mutable std::map<double, std::vector<Eigen::MatrixXd>> power_cache_;
};

struct ReducingOperator {
  CubeId cube;
  double p = 2.0;
  Eigen::MatrixXd mat;          // SPD, |mat e| ~ (avg_Q |W^{1/p} e|^p)^{1/p}
  double comparability = 1.0;   // sampled sup of max(ratio, 1/ratio)
};

// p = 2: exactly (avg_Q W)^{1/2}. Otherwise an ellipsoidal model of the norm
// ball of e -> (avg |W^{1/p} e|^p)^{1/p}, comparable within d^{1/4} <= sqrt(d).
ReducingOperator reducing_operator(const MatrixWeight& w, double p, const CubeId& q,
                                   int sphere_samples = 256);

enum class ApVariant { ap, two_weight, apN, apb, ap_infty_sc };

struct ApReport {
  double p = 2.0;
  double value = 0.0;
  ApVariant variant = ApVariant::ap;
  CubeId argmax_q, argmax_r;
  bool sampled = false;  // ap_infty_sc: sphere-sampled lower bound
};

ApReport ap_constant(const MatrixWeight& w, double p);
ApReport two_weight_ap(const MatrixWeight& w, const MatrixWeight& v, double p);

// c_p^b(Q, R) = m(Q)^{p/2} m(R)^{p/2} / (mu(R) mu(Q)^{p-1}), 1 when Q = R
double cpb_weight(const HaarSystem& hs, double p, const CubeId& q, const CubeId& r);

ApReport apN_constant(const MatrixWeight& w, double p, int N, const HaarSystem& hs);
// reducing-operator route: sup c_p^b(I, J) |W_I V_J|^p over the same pair range
double apN_reducing(const MatrixWeight& w, double p, int N, const HaarSystem& hs);
ApReport apb_constant(const MatrixWeight& w, double p, const HaarSystem& hs);

double fujii_wilson_ainfty(const MeasuredTree& tree, const std::vector<double>& w_leaf);
ApReport ap_infty_sc(const MatrixWeight& w, double p, int directions, Rng& rng);

// Exact L^2(W) operator norm of a linear map on leaf functions, via the
// generalized symmetric eigenproblem on the weighted coordinates.
double opnorm_l2w(const MeasuredTree& tree, const MatrixWeight& w,
                  const std::function<LeafFunction(const LeafFunction&)>& op, int dim);

double opnorm_l2w(const MeasuredTree& tree, const MatrixWeight& w, const HaarShift& shift);
double opnorm_l2w(const MeasuredTree& tree, const MatrixWeight& w, const MartingaleMultiplier& m);
// expectation operator E_Q f = <f>_Q 1_Q
double opnorm_l2w_expectation(const MeasuredTree& tree, const MatrixWeight& w, const CubeId& q);
// closed form |<W>_Q^{1/2} <W^{-1}>_Q^{1/2}| for the expectation operator
double expectation_norm_closed_form(const MeasuredTree& tree, const MatrixWeight& w, const CubeId& q);

// Certified lower bound on the L^p(W) operator norm by projected gradient
// ascent with multistart (p != 2); reports the best found value.
double opnorm_lpw_lower_bound(const MeasuredTree& tree, const MatrixWeight& w,
                              const std::function<LeafFunction(const LeafFunction&)>& op,
                              const std::function<LeafFunction(const LeafFunction&)>& op_adj,
                              int dim, double p, int starts, std::uint64_t seed);

// S^W_{p'} g(x) = (sum_{Q in S} <|W_Q^{-1} W^{1/p}| |g|>_Q^{p'} 1_Q(x))^{1/p'}
LeafFunction sparse_square_function(const MeasuredTree& tree, const std::vector<CubeId>& family,
                                    const MatrixWeight& w, double p,
                                    const std::vector<ReducingOperator>& reducers,
                                    const LeafFunction& g_scalar);

struct NecessityResult {
  double lhs = 0.0;         // c_p^b(J, K) |W_J V_K|^p
  double shift_norm = 0.0;  // exact L^2(W) norm of the rank-one shift (p = 2)
  double ratio = 0.0;       // lhs / shift_norm^{3p}
  double closed_form_norm = 0.0;
};

// Rank-one shift Tf = <f, h_{parent(K)}> h_{parent(J)} built from the pair, with
// both the closed-form and the generic-eigenproblem norm evaluated (p = 2).
NecessityResult necessity_experiment(const MatrixWeight& w, double p, const HaarSystem& hs,
                                     const CubeId& j, const CubeId& k);

}  // namespace dyadlab
