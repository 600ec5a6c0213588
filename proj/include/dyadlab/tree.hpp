#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyadlab {

// A dyadic cube inside a fixed root cube. `index` is the path index in base 2^n:
// digit k (from the root) is the child offset taken at generation k, where bit j
// of an offset is the half chosen along coordinate j.
struct CubeId {
  int level = 0;
  std::uint64_t index = 0;

  friend bool operator==(const CubeId& a, const CubeId& b) {
    return a.level == b.level && a.index == b.index;
  }
  friend bool operator!=(const CubeId& a, const CubeId& b) { return !(a == b); }
  friend bool operator<(const CubeId& a, const CubeId& b) {
    return a.level != b.level ? a.level < b.level : a.index < b.index;
  }
};

std::string to_string(const CubeId& q);

enum class PresetKind {
  lebesgue,
  random_balanced,
  cantor_like,
  exponential_imbalanced,
  explicit_masses,
};

struct MeasurePreset {
  PresetKind kind = PresetKind::lebesgue;
  double ratio = 4.0;          // exponential_imbalanced
  double balance_bound = 2.0;  // random_balanced
  double cantor_fraction = 1.0 / 3.0;
  std::uint64_t seed = 0;
  std::vector<double> masses;  // explicit, lexicographic leaf order

  // "lebesgue", "random-balanced:B=2,seed=7", "exponential-imbalanced:ratio=4", ...
  static MeasurePreset parse(const std::string& spec);
};

// Finite dyadic lattice of depth L over a root cube in R^n with strictly positive
// leaf masses. Cube measures are aggregated bottom-up once and never change.
class MeasuredTree {
 public:
  // leaf_masses in internal (path-index) order
  MeasuredTree(int n, int L, std::vector<double> leaf_masses);

  static MeasuredTree build(int n, int L, const MeasurePreset& preset);

  int dimension() const { return n_; }
  int depth() const { return L_; }
  int branching() const { return 1 << n_; }
  std::uint64_t cubes_at(int level) const { return std::uint64_t{1} << (static_cast<std::uint64_t>(level) * n_); }
  std::uint64_t leaf_count() const { return cubes_at(L_); }
  std::uint64_t cube_count() const;
  std::uint64_t id() const { return id_; }

  double mu(const CubeId& q) const { return mu_[q.level][q.index]; }
  double mu(int level, std::uint64_t index) const { return mu_[level][index]; }
  double total_mass() const { return mu_[0][0]; }
  double leaf_mass(std::uint64_t leaf) const { return mu_[L_][leaf]; }

  CubeId root() const { return {0, 0}; }
  bool is_leaf(const CubeId& q) const { return q.level == L_; }
  CubeId parent(const CubeId& q) const;
  CubeId ancestor(const CubeId& q, int k) const;
  CubeId child(const CubeId& q, int offset) const;
  std::vector<CubeId> children(const CubeId& q) const;
  std::vector<CubeId> descendants_at(const CubeId& q, int s) const;
  bool contains(const CubeId& outer, const CubeId& inner) const;

  // Leaves below q form the contiguous range [first_leaf, first_leaf + leaves_under).
  std::uint64_t first_leaf(const CubeId& q) const {
    return q.index << (static_cast<std::uint64_t>(L_ - q.level) * n_);
  }
  std::uint64_t leaves_under(const CubeId& q) const {
    return std::uint64_t{1} << (static_cast<std::uint64_t>(L_ - q.level) * n_);
  }
  CubeId leaf_cube(std::uint64_t leaf) const { return {L_, leaf}; }
  CubeId ancestor_of_leaf(std::uint64_t leaf, int level) const {
    return {level, leaf >> (static_cast<std::uint64_t>(L_ - level) * n_)};
  }

  // dist(J, K) = s + t where the minimal common ancestor P has J in D_s(P), K in D_t(P)
  int dyadic_distance(const CubeId& j, const CubeId& k) const;

  void check_cube(const CubeId& q) const;

  // conversions between internal path order and lexicographic coordinate order at depth L
  std::uint64_t leaf_lex_to_path(std::uint64_t lex) const;
  std::uint64_t leaf_path_to_lex(std::uint64_t path) const;
  std::vector<std::uint64_t> index_vector(const CubeId& q) const;

 private:
  int n_;
  int L_;
  std::uint64_t id_;
  std::vector<std::vector<double>> mu_;  // mu_[level][index]
};

MeasuredTree build_tree(int n, int L, const MeasurePreset& preset);

struct TreeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dyadlab
