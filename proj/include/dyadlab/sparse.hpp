#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dyadlab/shift.hpp"
#include "dyadlab/zonotope.hpp"

namespace dyadlab {

struct SparseFamily {
  const MeasuredTree* tree = nullptr;
  std::vector<CubeId> cubes;  // sorted, unique
  double eta_claimed = 0.0;
  // optional disjoint major subsets E_Q, stored as (leaf, mass) pairs: the
  // underlying measure lives on R^n, so a Borel E_Q may take part of a leaf cube
  std::vector<std::vector<std::pair<std::uint64_t, double>>> disjoint_sets;

  bool contains(const CubeId& q) const;
};

struct SparsenessReport {
  double eta_achieved = 0.0;    // certified by an explicit disjoint assignment
  double lambda_carleson = 0.0; // exact packing constant
  double eta_greedy_full = 0.0; // claim-everything greedy (can be 0 for overlapping families)
};

SparsenessReport verify_sparseness(SparseFamily& family);

double sparse_form(const SparseFamily& s, const LeafFunction& f, const LeafFunction& g);
double modified_sparse_form(const SparseFamily& s, int N, const HaarSystem& m_source,
                            const LeafFunction& f, const LeafFunction& g);

struct PointwiseFormCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};
PointwiseFormCheck pointwise_form_check(const SparseFamily& s, const LeafFunction& f,
                                        const LeafFunction& g);

enum class DominationMode { plain, modified };

struct LeafVerdict {
  bool pass = true;
  double residual = 0.0;
};

struct DominationCertificate {
  DominationMode mode = DominationMode::plain;
  double C = 0.0;
  int N = 0;
  bool all_pass = false;
  std::uint64_t failing_leaves = 0;
  std::uint64_t worst_leaf = 0;
  double worst_residual = 0.0;
  std::vector<LeafVerdict> per_leaf;  // over leaves of Q0
  CubeId q0;
};

// Membership recheck of Tf(x) in C * (sum of <<f>>_Q over S-cubes containing x
// [+ modified pairs]) at an arbitrary C, against a fixed family.
DominationCertificate check_certificate(const LeafFunction& tf, const LeafFunction& f,
                                        const SparseFamily& family, const CubeId& q0, double C,
                                        DominationMode mode, int N, const HaarSystem& hs);

struct StoppingStats {
  std::vector<double> fractions;  // per generation cube: mu(B(Q'))/mu(Q')
  double max_fraction = 0.0;
  int generations = 0;
};

struct SparseBuildResult {
  SparseFamily family;
  DominationCertificate cert;
  double stopping_C = 0.0;  // constant used by the stopping conditions
  StoppingStats stats;
  SparsenessReport sparseness;
};

struct SparseBuildOptions {
  double C = 0.0;            // <= 0: auto (doubling search)
  double C_cap = 1e12;
  double lp_tol = 1e-9;
  double john_tol = 1e-5;    // L1-mode stopping basis accuracy
};

// Theorem A, balanced regime: t-separated reduction, two stopping conditions,
// enlargement by descendants of order <= t, modified-mode certificate with
// N = s + t. Requires a balanced pair in spirit; the certificate is checked
// unconditionally.
SparseBuildResult build_sparse_balanced(const HaarShift& shift, const LeafFunction& f,
                                        const CubeId& q0, const SparseBuildOptions& opts = {});

// Theorem A, L1-normalized regime: plain certificate, John-basis component
// stopping; no balancedness needed.
SparseBuildResult build_sparse_l1(const HaarShift& shift, const LeafFunction& f, const CubeId& q0,
                                  const SparseBuildOptions& opts = {});

// Martingale multiplier variant: plain certificate, any measure.
SparseBuildResult build_sparse_multiplier(const MartingaleMultiplier& sigma, const LeafFunction& f,
                                          const CubeId& q0, const HaarSystem& hs,
                                          const SparseBuildOptions& opts = {});

}  // namespace dyadlab
