#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dyadlab/leaf_function.hpp"
#include "dyadlab/lp.hpp"
#include "dyadlab/tree.hpp"

namespace dyadlab {

// Symmetric zonotope { sum_j t_j g_j : |t_j| <= 1 } in R^d. Bodies built from a
// convex body average carry the source cube as provenance.
class Zonotope {
 public:
  explicit Zonotope(int d) : d_(d) {}
  Zonotope(int d, std::vector<double> gens) : d_(d), gens_(std::move(gens)) {}

  bool has_provenance = false;
  CubeId provenance;

  int dim() const { return d_; }
  std::size_t generator_count() const { return gens_.size() / d_; }
  const double* generator(std::size_t j) const { return gens_.data() + j * d_; }
  const std::vector<double>& raw() const { return gens_; }

  void add_generator(const double* g, double scale = 1.0);

  // exact: parallel symmetric segments add, zero generators vanish
  Zonotope merged(double rel_tol = 1e-12) const;

  double support(const double* u) const;  // h(u) = sum_j |g_j . u|
  double support(const std::vector<double>& u) const { return support(u.data()); }

  Zonotope scaled(double c) const;

 private:
  int d_;
  std::vector<double> gens_;  // row-major m x d
};

// exact convex body average <<f>>_Q: one generator f(x) mu(x) / mu(Q) per leaf
Zonotope convex_body_avg(const LeafFunction& f, const CubeId& q);

struct MemberResult {
  bool inside = false;
  double residual = 0.0;
  std::vector<double> separator;  // on failure: direction with v.u > h(u)
};

// membership of v in sum_i c_i Z_i, decided by linear feasibility over the
// stacked generator coefficients
MemberResult member(const std::vector<double>& v,
                    const std::vector<std::pair<double, const Zonotope*>>& combo,
                    double tol_scale = 1e-9);
MemberResult member(const std::vector<double>& v, const Zonotope& z, double tol_scale = 1e-9);

// Ellipsoid { sum_j x_j alpha_j e_j : sum x_j^2 <= 1 } on the carrier subspace
// spanned by the first `rank` basis columns; basis is d x d orthonormal.
struct Ellipsoid {
  int d = 0;
  int rank = 0;
  Eigen::MatrixXd basis;      // columns e_1..e_d, first `rank` span the carrier
  Eigen::VectorXd semi_axes;  // alpha_1..alpha_d, zero beyond rank

  double support(const double* u) const;
  std::vector<double> boundary_point(const std::vector<double>& sphere_coords) const;
};

// Maximum-volume inscribed ellipsoid of Z inside its carrier subspace, computed
// from the exact facet normals of the projected zonotope by a Khachiyan-style
// ascent with lazily activated constraints. Certified: E subset Z exactly and
// Z subset sqrt(r (1 + tol)) E.
Ellipsoid john_ellipsoid(const Zonotope& z, double tol = 1e-6);

}  // namespace dyadlab
