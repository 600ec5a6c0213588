#include "dyadlab/lp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dyadlab {

namespace {

enum class VarState : unsigned char { at_lower, at_upper, basic };

}  // namespace

LpFeasibility zonotope_membership_lp(const std::vector<double>& gens, std::size_t m, int d,
                                     const double* v, double tol) {
  // Feasibility of G t = v, |t_j| <= ||g_j||-scaled box. Columns are equilibrated
  // to unit norm (the magnitude moves into the variable bound), which keeps the
  // basis well conditioned when generator sizes span many orders of magnitude.
  // Variables: s_j = t_j + u_j in [0, 2 u_j] for j < m with unit column g_j/u_j,
  // artificials a_i in [0, inf). Phase-1: minimize the artificial mass.
  using Mat = Eigen::MatrixXd;
  using Vec = Eigen::VectorXd;

  std::vector<double> unit(m * d);
  std::vector<double> ubound(m);
  double body_scale = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double nrm = 0.0;
    for (int i = 0; i < d; ++i) nrm += gens[j * d + i] * gens[j * d + i];
    nrm = std::sqrt(nrm);
    ubound[j] = nrm;
    body_scale += nrm;
    for (int i = 0; i < d; ++i) unit[j * d + i] = nrm > 0 ? gens[j * d + i] / nrm : 0.0;
  }
  double vnorm = 0.0;
  for (int i = 0; i < d; ++i) vnorm += v[i] * v[i];
  vnorm = std::sqrt(vnorm);
  // roundoff floor: residuals below this cannot be certified in double precision
  const double feas_tol = std::max(tol, 4e-12 * (body_scale + vnorm));

  const std::size_t nvar = m + static_cast<std::size_t>(d);
  Vec b(d);
  for (int i = 0; i < d; ++i) {
    double s = v[i];
    for (std::size_t j = 0; j < m; ++j) s += gens[j * d + i];
    b[i] = s;
  }

  std::vector<double> lower(nvar, 0.0), upper(nvar);
  std::vector<double> sign(d, 1.0);
  for (std::size_t j = 0; j < m; ++j) upper[j] = 2.0 * ubound[j];
  for (int i = 0; i < d; ++i) {
    upper[m + i] = std::numeric_limits<double>::infinity();
    if (b[i] < 0.0) sign[i] = -1.0;
  }

  auto column = [&](std::size_t j, Vec& out) {
    if (j < m) {
      for (int i = 0; i < d; ++i) out[i] = unit[j * d + i];
    } else {
      out.setZero();
      out[j - m] = sign[j - m];
    }
  };

  std::vector<VarState> state(nvar, VarState::at_lower);
  std::vector<double> value(nvar, 0.0);
  std::vector<std::size_t> basis(d);
  for (int i = 0; i < d; ++i) {
    basis[i] = m + i;
    state[m + i] = VarState::basic;
    value[m + i] = std::abs(b[i]);
  }

  const double piv_tol = 1e-11;
  const std::size_t max_iters = 200 * (nvar + 16);
  std::size_t degenerate_streak = 0;

  Mat B(d, d);
  Vec col(d), dir(d), y(d), aj(d);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (int i = 0; i < d; ++i) {
      column(basis[i], col);
      B.col(i) = col;
    }
    Eigen::PartialPivLU<Mat> lu(B);

    // refresh basic values from the factorization to stop numerical drift
    {
      Vec rhs = b;
      for (std::size_t j = 0; j < nvar; ++j) {
        if (state[j] == VarState::basic || value[j] == 0.0) continue;
        column(j, aj);
        rhs -= aj * value[j];
      }
      Vec xb = lu.solve(rhs);
      for (int i = 0; i < d; ++i) value[basis[i]] = xb[i];
    }

    double obj = 0.0;
    for (int i = 0; i < d; ++i) {
      if (basis[i] >= m) obj += std::abs(value[basis[i]]);
    }
    if (obj <= feas_tol) {
      LpFeasibility res;
      res.feasible = true;
      res.residual = obj;
      res.coeffs.assign(m, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        res.coeffs[j] = ubound[j] > 0 ? (value[j] - ubound[j]) / ubound[j] : 0.0;
      }
      return res;
    }

    // y = B^{-T} c_B; cost is 1 on artificials, 0 otherwise
    Vec cB(d);
    for (int i = 0; i < d; ++i) cB[i] = basis[i] >= m ? 1.0 : 0.0;
    y = lu.transpose().solve(cB);

    const bool bland = degenerate_streak > 64;
    std::size_t enter = nvar;
    double best_score = 1e-10;
    int enter_dir = 0;
    for (std::size_t j = 0; j < nvar; ++j) {
      if (state[j] == VarState::basic) continue;
      column(j, col);
      const double cj = (j >= m) ? 1.0 : 0.0;
      const double red = cj - y.dot(col);
      if (state[j] == VarState::at_lower && red < -best_score) {
        if (!bland || enter == nvar) {
          best_score = bland ? best_score : -red;
          enter = j;
          enter_dir = +1;
        }
      } else if (state[j] == VarState::at_upper && red > best_score) {
        if (!bland || enter == nvar) {
          best_score = bland ? best_score : red;
          enter = j;
          enter_dir = -1;
        }
      }
      if (bland && enter != nvar) break;
    }

    if (enter == nvar) {
      LpFeasibility res;
      res.feasible = false;
      res.residual = obj;
      res.separator.assign(y.data(), y.data() + d);
      return res;
    }

    column(enter, col);
    dir = lu.solve(col);

    double theta = upper[enter] - lower[enter];
    int leave_pos = -1;
    bool leave_to_upper = false;
    for (int i = 0; i < d; ++i) {
      const double delta = -dir[i] * enter_dir;
      const std::size_t bj = basis[i];
      if (delta < -piv_tol) {
        const double room = (value[bj] - lower[bj]) / (-delta);
        if (room < theta) {
          theta = room;
          leave_pos = i;
          leave_to_upper = false;
        }
      } else if (delta > piv_tol && upper[bj] < std::numeric_limits<double>::infinity()) {
        const double room = (upper[bj] - value[bj]) / delta;
        if (room < theta) {
          theta = room;
          leave_pos = i;
          leave_to_upper = true;
        }
      }
    }

    if (!std::isfinite(theta)) {
      LpFeasibility res;
      res.feasible = false;
      res.residual = obj;
      res.separator.assign(y.data(), y.data() + d);
      return res;
    }
    theta = std::max(theta, 0.0);

    degenerate_streak = theta <= 1e-13 ? degenerate_streak + 1 : 0;

    for (int i = 0; i < d; ++i) {
      const double delta = -dir[i] * enter_dir;
      value[basis[i]] += delta * theta;
    }
    value[enter] += enter_dir * theta;

    if (leave_pos < 0) {
      state[enter] = enter_dir > 0 ? VarState::at_upper : VarState::at_lower;
      value[enter] = enter_dir > 0 ? upper[enter] : lower[enter];
    } else {
      const std::size_t old = basis[leave_pos];
      state[old] = leave_to_upper ? VarState::at_upper : VarState::at_lower;
      value[old] = leave_to_upper ? upper[old] : lower[old];
      basis[leave_pos] = enter;
      state[enter] = VarState::basic;
    }
  }

  throw std::runtime_error("zonotope membership LP failed to converge");
}

}  // namespace dyadlab
