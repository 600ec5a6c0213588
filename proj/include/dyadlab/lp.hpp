#pragma once

#include <cstddef>
#include <vector>

namespace dyadlab {

// Result of the zonotope membership LP: feasibility of  G t = v, |t_j| <= 1.
// `residual` is the l1 mass of the artificial variables at optimum (zero iff
// feasible); on infeasibility `separator` carries the dual direction y, which
// satisfies y.v > sum_j |y.g_j| up to roundoff.
struct LpFeasibility {
  bool feasible = false;
  double residual = 0.0;
  std::vector<double> coeffs;
  std::vector<double> separator;
};

// gens: m generators, row-major (m x d). Phase-1 bounded-variable simplex with
// Bland fallback; d is tiny (<= 8) so the basis is refactorized every step.
LpFeasibility zonotope_membership_lp(const std::vector<double>& gens, std::size_t m, int d,
                                     const double* v, double tol);

}  // namespace dyadlab
