#pragma once

#include <span>
#include <vector>

#include "dyadlab/matrix_weight.hpp"
#include "dyadlab/rng.hpp"
#include "dyadlab/tree.hpp"

namespace dyadlab {

// One scalar weight per cube, positive on the leaves of its cube (stored only
// there). Cube indexing is level-major like HaarSystem::flat but includes the
// leaf level.
class WeightFamily {
 public:
  explicit WeightFamily(const MeasuredTree& tree);

  const MeasuredTree& tree() const { return *tree_; }

  // weight of cube q at a leaf under q
  double at(const CubeId& q, std::uint64_t leaf) const;
  void set(const CubeId& q, std::uint64_t leaf, double value);

  double average(const CubeId& q) const;                       // <w_Q>_Q
  double average_of(const CubeId& p, const CubeId& q) const;   // <w_P>_Q for Q inside P

  std::size_t flat(const CubeId& q) const;
  void rescale(const CubeId& q, double factor);

  static WeightFamily constant(const MeasuredTree& tree, const std::vector<double>& w_leaf);
  static WeightFamily from_matrix_weight(const MatrixWeight& w, double p);
  static WeightFamily random_smooth(const MeasuredTree& tree, Rng& rng, double spread = 8.0);
  // per-cube independent spiky weights: large compatibility constants
  static WeightFamily random_adversarial(const MeasuredTree& tree, Rng& rng, double spike = 100.0);

 private:
  const MeasuredTree* tree_;
  std::vector<std::size_t> offset_;       // per flat cube: start into values_
  std::vector<std::size_t> level_start_;  // flat index of the first cube per level
  std::vector<double> values_;
};

// nonnegative alpha per cube, level-major flat indexing aligned with WeightFamily
struct CarlesonData {
  std::vector<double> alpha;

  static CarlesonData zeros(const MeasuredTree& tree);
};

// exact A = max over nested pairs Q inside P of ||w_P/w_Q||_inf(Q) <w_Q>_Q / <w_P>_Q
double compatibility_constant(const WeightFamily& family);

double testing_constant_c2(const WeightFamily& family, const CarlesonData& alpha, double p);

enum class C1Method { exact, ascent };

struct C1Result {
  double value = 0.0;
  C1Method method = C1Method::exact;
};

C1Result embedding_constant_c1(const WeightFamily& family, const CarlesonData& alpha, double p,
                               C1Method method, std::uint64_t seed = 7, int starts = 16);

struct EmbeddingReport {
  double p = 2.0;
  double A = 1.0;
  double C1 = 0.0;
  double C2 = 0.0;
  C1Method method = C1Method::exact;
  bool lower_ok = false;   // A^{-(p-1)} C2 <= C1 (1 + tol)
  double upper_ratio = 0.0;  // C1 / (A^{1+1/p'} C2)
};

EmbeddingReport verify_embedding_bounds(const WeightFamily& family, const CarlesonData& alpha,
                                        double p, std::uint64_t seed = 7);

struct ExpandCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

// (sum a_i)^p <= (m+1) sum_{i_1..i_m} a_{i_1}...a_{i_m} (sum_{j <= min} a_j)^gamma
// with p = m + gamma, by brute-force enumeration (length <= 12)
ExpandCheck expanding_sum_check(std::span<const double> a, double p);

// independently coded classical weighted Carleson constants (w_Q == w), used as
// the oracle for the constant-family specialization
double classical_c2(const MeasuredTree& tree, const std::vector<double>& w_leaf,
                    const CarlesonData& alpha, double p);
double classical_c1_exact_p2(const MeasuredTree& tree, const std::vector<double>& w_leaf,
                             const CarlesonData& alpha);

}  // namespace dyadlab
