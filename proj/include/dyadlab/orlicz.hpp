#pragma once

#include <vector>

#include "dyadlab/haar.hpp"
#include "dyadlab/leaf_function.hpp"
#include "dyadlab/matrix_weight.hpp"
#include "dyadlab/tree.hpp"

namespace dyadlab {

// Young function: convex increasing gauge with Phi(0) = 0 and Phi(t)/t -> inf.
// Built-in kinds cover powers and log-bumps; tabulated functions interpolate
// linearly between knots (preserving convexity of the data).
class YoungFunction {
 public:
  static YoungFunction power(double r);                  // t^r
  static YoungFunction power_log(double r, double s);    // t^r log(e + t)^s
  static YoungFunction from_table(std::vector<double> ts, std::vector<double> vals);

  double operator()(double t) const;
  double inverse(double y) const;  // monotone inverse by bisection

  // sampled structural checks: convexity, monotonicity, superlinearity
  void validate() const;

  bool is_power() const { return kind_ == Kind::power; }
  double power_exponent() const { return r_; }

 private:
  enum class Kind { power, power_log, table };
  Kind kind_ = Kind::power;
  double r_ = 2.0, s_ = 0.0;
  std::vector<double> ts_, vals_;
};

// Luxemburg norm ||f||_{Phi,Q} = inf { l > 0 : <Phi(|f|/l)>_Q <= 1 }, bisection
// to 1e-10 relative; 0 for f == 0 on Q
double local_orlicz_norm(const LeafFunction& f_scalar, const CubeId& q, const YoungFunction& phi);

// Legendre transform on a log grid with a monotone-envelope cleanup
YoungFunction dual_young(const YoungFunction& phi);

struct BpResult {
  bool finite = false;
  double tail_exponent = 0.0;  // fitted d log(Phi/t^p) / d log t at the tail
  double integral_to_cutoff = 0.0;
};

// integral_1^inf Phi(t)/t^p dt/t: quadrature to 1e8 plus power-fit tail; the
// verdict is a heuristic and labeled as such in reports
BpResult bp_check(const YoungFunction& phi, double p);

// M_Phi f(x) = sup over cubes containing x of ||f||_{Phi,Q}
LeafFunction orlicz_maximal(const LeafFunction& f_scalar, const YoungFunction& phi);

// [W,V]^b_{Phi,Psi}: sup over pairs within distance N+2 of
// c_p^b(I,J) || ||V^{1/p}(x) W^{-1/p}(y)||_{Phi_x, I} ||_{Psi_y, J}^p
double bump_constant(const MatrixWeight& w, const MatrixWeight& v, const YoungFunction& phi,
                     const YoungFunction& psi, double p, int N, const HaarSystem& hs);

}  // namespace dyadlab
