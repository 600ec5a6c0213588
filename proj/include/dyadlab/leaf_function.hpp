#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dyadlab/tree.hpp"

namespace dyadlab {

// R^d-valued function constant on the leaves of a tree, stored leaf-major.
class LeafFunction {
 public:
  LeafFunction(const MeasuredTree& tree, int dim)
      : tree_(&tree), dim_(dim), vals_(tree.leaf_count() * dim, 0.0) {}

  const MeasuredTree& tree() const { return *tree_; }
  int dim() const { return dim_; }
  std::uint64_t leaves() const { return tree_->leaf_count(); }

  double* at(std::uint64_t leaf) { return vals_.data() + leaf * dim_; }
  const double* at(std::uint64_t leaf) const { return vals_.data() + leaf * dim_; }
  double& operator()(std::uint64_t leaf, int comp) { return vals_[leaf * dim_ + comp]; }
  double operator()(std::uint64_t leaf, int comp) const { return vals_[leaf * dim_ + comp]; }

  void check_same_tree(const MeasuredTree& other) const {
    if (tree_->id() != other.id()) throw TreeMismatch("leaf function bound to a different tree");
  }

  LeafFunction component(int comp) const {
    LeafFunction out(*tree_, 1);
    for (std::uint64_t x = 0; x < leaves(); ++x) out(x, 0) = (*this)(x, comp);
    return out;
  }

  // restriction f * 1_Q
  LeafFunction restricted(const CubeId& q) const {
    LeafFunction out(*tree_, dim_);
    const std::uint64_t a = tree_->first_leaf(q), b = a + tree_->leaves_under(q);
    for (std::uint64_t x = a; x < b; ++x) {
      for (int c = 0; c < dim_; ++c) out(x, c) = (*this)(x, c);
    }
    return out;
  }

  // componentwise integral of f over Q
  std::vector<double> integral(const CubeId& q) const {
    std::vector<double> s(dim_, 0.0);
    const std::uint64_t a = tree_->first_leaf(q), b = a + tree_->leaves_under(q);
    for (std::uint64_t x = a; x < b; ++x) {
      const double mu = tree_->leaf_mass(x);
      for (int c = 0; c < dim_; ++c) s[c] += (*this)(x, c) * mu;
    }
    return s;
  }

  std::vector<double> average(const CubeId& q) const {
    auto s = integral(q);
    const double mu = tree_->mu(q);
    for (double& v : s) v /= mu;
    return s;
  }

  double integral_abs(const CubeId& q) const {  // int_Q |f| dmu (euclidean norm of values)
    double s = 0.0;
    const std::uint64_t a = tree_->first_leaf(q), b = a + tree_->leaves_under(q);
    for (std::uint64_t x = a; x < b; ++x) {
      double nrm2 = 0.0;
      for (int c = 0; c < dim_; ++c) nrm2 += (*this)(x, c) * (*this)(x, c);
      s += std::sqrt(nrm2) * tree_->leaf_mass(x);
    }
    return s;
  }

  double norm_l1() const { return integral_abs(tree_->root()); }

  double norm_lp(double p) const {
    double s = 0.0;
    for (std::uint64_t x = 0; x < leaves(); ++x) {
      double nrm2 = 0.0;
      for (int c = 0; c < dim_; ++c) nrm2 += (*this)(x, c) * (*this)(x, c);
      s += std::pow(std::sqrt(nrm2), p) * tree_->leaf_mass(x);
    }
    return std::pow(s, 1.0 / p);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : vals_) m = std::max(m, std::abs(v));
    return m;
  }

  LeafFunction& axpy(double a, const LeafFunction& g) {
    for (std::size_t i = 0; i < vals_.size(); ++i) vals_[i] += a * g.vals_[i];
    return *this;
  }

  LeafFunction& scale(double a) {
    for (double& v : vals_) v *= a;
    return *this;
  }

  const std::vector<double>& raw() const { return vals_; }
  std::vector<double>& raw() { return vals_; }

 private:
  const MeasuredTree* tree_;
  int dim_;
  std::vector<double> vals_;
};

}  // namespace dyadlab
