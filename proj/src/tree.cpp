#include "dyadlab/tree.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "dyadlab/rng.hpp"

namespace dyadlab {

namespace {
std::atomic<std::uint64_t> next_tree_id{1};
}

std::string to_string(const CubeId& q) {
  std::ostringstream os;
  os << "Q(level=" << q.level << ", index=" << q.index << ")";
  return os.str();
}

MeasurePreset MeasurePreset::parse(const std::string& spec) {
  MeasurePreset p;
  std::string kind = spec;
  std::string args;
  if (auto pos = spec.find(':'); pos != std::string::npos) {
    kind = spec.substr(0, pos);
    args = spec.substr(pos + 1);
  }
  if (kind == "lebesgue") {
    p.kind = PresetKind::lebesgue;
  } else if (kind == "random-balanced") {
    p.kind = PresetKind::random_balanced;
  } else if (kind == "cantor-like") {
    p.kind = PresetKind::cantor_like;
  } else if (kind == "exponential-imbalanced") {
    p.kind = PresetKind::exponential_imbalanced;
  } else if (kind == "explicit") {
    p.kind = PresetKind::explicit_masses;
  } else {
    throw std::invalid_argument("unknown measure preset kind: " + kind);
  }
  std::istringstream as(args);
  std::string kv;
  while (std::getline(as, kv, ',')) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad preset argument: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "ratio") {
      p.ratio = std::stod(val);
    } else if (key == "B") {
      p.balance_bound = std::stod(val);
    } else if (key == "a") {
      p.cantor_fraction = std::stod(val);
    } else if (key == "seed") {
      p.seed = std::stoull(val);
    } else {
      throw std::invalid_argument("unknown preset argument: " + key);
    }
  }
  return p;
}

MeasuredTree::MeasuredTree(int n, int L, std::vector<double> leaf_masses)
    : n_(n), L_(L), id_(next_tree_id.fetch_add(1)) {
  if (n < 1) throw std::invalid_argument("dimension must be >= 1");
  if (L < 1) throw std::invalid_argument("depth must be >= 1");
  const std::uint64_t nl = std::uint64_t{1} << (static_cast<std::uint64_t>(L) * n);
  if (leaf_masses.size() != nl) throw std::invalid_argument("leaf mass count mismatch");
  for (std::uint64_t i = 0; i < nl; ++i) {
    if (!(leaf_masses[i] > 0.0) || !std::isfinite(leaf_masses[i])) {
      throw std::invalid_argument("nonpositive leaf mass at " + to_string(CubeId{L, i}));
    }
  }
  mu_.resize(L + 1);
  mu_[L] = std::move(leaf_masses);
  // strict bottom-up aggregation, children in index order, for bit-reproducibility
  const int b = 1 << n_;
  for (int lev = L - 1; lev >= 0; --lev) {
    const std::uint64_t count = cubes_at(lev);
    mu_[lev].resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      double s = 0.0;
      for (int o = 0; o < b; ++o) s += mu_[lev + 1][i * b + o];
      mu_[lev][i] = s;
    }
  }
}

std::uint64_t MeasuredTree::cube_count() const {
  std::uint64_t c = 0;
  for (int lev = 0; lev <= L_; ++lev) c += cubes_at(lev);
  return c;
}

CubeId MeasuredTree::parent(const CubeId& q) const {
  if (q.level == 0) throw std::out_of_range("root has no parent");
  return {q.level - 1, q.index >> n_};
}

CubeId MeasuredTree::ancestor(const CubeId& q, int k) const {
  if (k < 0 || k > q.level) throw std::out_of_range("ancestor level underflow for " + to_string(q));
  return {q.level - k, q.index >> (static_cast<std::uint64_t>(k) * n_)};
}

CubeId MeasuredTree::child(const CubeId& q, int offset) const {
  if (q.level >= L_) throw std::out_of_range("leaf has no children: " + to_string(q));
  return {q.level + 1, (q.index << n_) + static_cast<std::uint64_t>(offset)};
}

std::vector<CubeId> MeasuredTree::children(const CubeId& q) const {
  std::vector<CubeId> out;
  const int b = branching();
  out.reserve(b);
  for (int o = 0; o < b; ++o) out.push_back(child(q, o));
  return out;
}

std::vector<CubeId> MeasuredTree::descendants_at(const CubeId& q, int s) const {
  if (s < 0 || q.level + s > L_) throw std::out_of_range("descendant level overflow for " + to_string(q));
  const std::uint64_t count = std::uint64_t{1} << (static_cast<std::uint64_t>(s) * n_);
  std::vector<CubeId> out;
  out.reserve(count);
  const std::uint64_t base = q.index << (static_cast<std::uint64_t>(s) * n_);
  for (std::uint64_t i = 0; i < count; ++i) out.push_back({q.level + s, base + i});
  return out;
}

bool MeasuredTree::contains(const CubeId& outer, const CubeId& inner) const {
  if (inner.level < outer.level) return false;
  return (inner.index >> (static_cast<std::uint64_t>(inner.level - outer.level) * n_)) == outer.index;
}

int MeasuredTree::dyadic_distance(const CubeId& j, const CubeId& k) const {
  check_cube(j);
  check_cube(k);
  CubeId a = j, b = k;
  int s = 0, t = 0;
  while (a.level > b.level) {
    a = parent(a);
    ++s;
  }
  while (b.level > a.level) {
    b = parent(b);
    ++t;
  }
  while (a.index != b.index) {
    a = parent(a);
    b = parent(b);
    ++s;
    ++t;
  }
  return s + t;
}

void MeasuredTree::check_cube(const CubeId& q) const {
  if (q.level < 0 || q.level > L_ || q.index >= cubes_at(q.level)) {
    throw std::out_of_range("cube out of range: " + to_string(q));
  }
}

std::vector<std::uint64_t> MeasuredTree::index_vector(const CubeId& q) const {
  std::vector<std::uint64_t> coords(n_, 0);
  for (int step = 0; step < q.level; ++step) {
    const std::uint64_t digit = (q.index >> (static_cast<std::uint64_t>(q.level - 1 - step) * n_)) & ((1u << n_) - 1);
    for (int j = 0; j < n_; ++j) coords[j] = (coords[j] << 1) | ((digit >> j) & 1u);
  }
  return coords;
}

std::uint64_t MeasuredTree::leaf_path_to_lex(std::uint64_t path) const {
  // lexicographic order on (i_1, ..., i_n) compares coordinate 0 first
  const auto coords = index_vector(CubeId{L_, path});
  std::uint64_t lex = 0;
  for (int j = 0; j < n_; ++j) lex = (lex << L_) | coords[j];
  return lex;
}

std::uint64_t MeasuredTree::leaf_lex_to_path(std::uint64_t lex) const {
  std::vector<std::uint64_t> coords(n_, 0);
  for (int j = n_ - 1; j >= 0; --j) {
    coords[j] = lex & ((std::uint64_t{1} << L_) - 1);
    lex >>= L_;
  }
  std::uint64_t path = 0;
  for (int step = 0; step < L_; ++step) {
    std::uint64_t digit = 0;
    for (int j = 0; j < n_; ++j) digit |= ((coords[j] >> (L_ - 1 - step)) & 1u) << j;
    path = (path << n_) | digit;
  }
  return path;
}

namespace {

std::vector<double> lebesgue_masses(int n, int L) {
  const std::uint64_t nl = std::uint64_t{1} << (static_cast<std::uint64_t>(L) * n);
  return std::vector<double>(nl, 1.0 / static_cast<double>(nl));
}

std::vector<double> exponential_masses(int n, int L, double ratio) {
  if (!(ratio > 0.0)) throw std::invalid_argument("exponential preset needs ratio > 0");
  const std::uint64_t nl = std::uint64_t{1} << (static_cast<std::uint64_t>(L) * n);
  std::vector<double> m(nl);
  for (std::uint64_t i = 0; i < nl; ++i) m[i] = std::pow(ratio, static_cast<double>(i));
  return m;  // lexicographic order
}

std::vector<double> cantor_masses(int n, int L, double a) {
  if (!(a > 0.0) || !(a < 1.0)) throw std::invalid_argument("cantor fraction must be in (0,1)");
  const std::uint64_t nl = std::uint64_t{1} << (static_cast<std::uint64_t>(L) * n);
  std::vector<double> m(nl, 1.0);
  const int b = 1 << n;
  for (std::uint64_t leaf = 0; leaf < nl; ++leaf) {
    double mass = 1.0;
    for (int step = 0; step < L; ++step) {
      const std::uint64_t digit = (leaf >> (static_cast<std::uint64_t>(L - 1 - step) * n)) & (b - 1);
      int pop = 0;
      for (int j = 0; j < n; ++j) pop += static_cast<int>((digit >> j) & 1u);
      mass *= std::pow(a, pop) * std::pow(1.0 - a, n - pop);
    }
    m[leaf] = mass;  // path order
  }
  return m;
}

// Top-down sampler for n=1. The normalized ratio 2*m(I)/m(parent(I)) is drawn
// log-uniformly in [1/B, B] intersected with the feasible range, so the pair
// (mu, 1D Haar system) is balanced with normalized constant <= B by construction.
std::vector<double> random_balanced_masses(int L, double B, std::uint64_t seed) {
  if (!(B >= 1.0)) throw std::invalid_argument("balance bound must be >= 1");
  Rng rng(derive_seed(seed, 0xBA1A));
  std::vector<std::vector<double>> mass(L + 1);
  std::vector<std::vector<double>> mq(L);  // m(I) = mu+ mu- / mu per non-leaf cube
  mass[0] = {1.0};
  for (int lev = 0; lev < L; ++lev) {
    const std::uint64_t count = std::uint64_t{1} << lev;
    mass[lev + 1].resize(count * 2);
    mq[lev].resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const double mu = mass[lev][i];
      double m_target;
      if (lev == 0) {
        const double odds = rng.log_uniform(1.0 / B, B);
        const double theta = odds / (1.0 + odds);
        m_target = theta * (1.0 - theta) * mu;
      } else {
        const double m_parent = mq[lev - 1][i >> 1];
        // normalized ratio 2 m(I)/m(P) maxes out at mu(I)/(2 m(P)), attained by the
        // even split; that cap is always >= 1/2, so [1/B, cap] is nonempty for B >= 2
        const double feas_hi = mu / (2.0 * m_parent) * (1.0 - 1e-9);
        const double lo = std::min(1.0 / B, feas_hi);
        const double hi = std::min(B, feas_hi);
        const double rho = rng.log_uniform(lo, hi);  // normalized ratio 2 m/m_parent
        m_target = 0.5 * rho * m_parent;
      }
      const double disc = mu * mu / 4.0 - mu * m_target;
      const double delta = std::sqrt(std::max(disc, 0.0));
      double left = mu / 2.0 - delta, right = mu / 2.0 + delta;
      if (rng.coin()) std::swap(left, right);
      mass[lev + 1][2 * i] = left;
      mass[lev + 1][2 * i + 1] = right;
      mq[lev][i] = left * right / mu;
    }
  }
  return mass[L];
}

}  // namespace

MeasuredTree MeasuredTree::build(int n, int L, const MeasurePreset& preset) {
  switch (preset.kind) {
    case PresetKind::lebesgue:
      return MeasuredTree(n, L, lebesgue_masses(n, L));
    case PresetKind::exponential_imbalanced: {
      // masses specified in lexicographic leaf order
      auto lex = exponential_masses(n, L, preset.ratio);
      MeasuredTree probe(n, L, lebesgue_masses(n, L));
      std::vector<double> path(lex.size());
      for (std::uint64_t i = 0; i < lex.size(); ++i) path[probe.leaf_lex_to_path(i)] = lex[i];
      return MeasuredTree(n, L, std::move(path));
    }
    case PresetKind::cantor_like:
      return MeasuredTree(n, L, cantor_masses(n, L, preset.cantor_fraction));
    case PresetKind::random_balanced:
      if (n != 1) throw std::invalid_argument("random-balanced preset is defined for n=1 only");
      return MeasuredTree(n, L, random_balanced_masses(L, preset.balance_bound, preset.seed));
    case PresetKind::explicit_masses: {
      MeasuredTree probe(n, L, lebesgue_masses(n, L));
      const std::uint64_t nl = probe.leaf_count();
      if (preset.masses.size() != nl) throw std::invalid_argument("explicit preset: leaf mass count mismatch");
      for (std::uint64_t i = 0; i < nl; ++i) {
        if (!(preset.masses[i] > 0.0)) {
          throw std::invalid_argument("nonpositive mass at " + to_string(CubeId{L, probe.leaf_lex_to_path(i)}));
        }
      }
      std::vector<double> path(nl);
      for (std::uint64_t i = 0; i < nl; ++i) path[probe.leaf_lex_to_path(i)] = preset.masses[i];
      return MeasuredTree(n, L, std::move(path));
    }
  }
  throw std::logic_error("unreachable preset kind");
}

MeasuredTree build_tree(int n, int L, const MeasurePreset& preset) {
  return MeasuredTree::build(n, L, preset);
}

}  // namespace dyadlab
