// Copyright 2026 The vqu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file qudit.hpp
 * @brief State vectors of n qudits, reduced densities, the rectangular
 * (Clements) parameterization of U(D) and the W / W-tilde gates that
 * build filling-fraction-one Laughlin states.
 *
 * Sites are 0-based. Site 0 is the most significant digit of the
 * amplitude index.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "vqu/errors.hpp"
#include "vqu/linalg.hpp"
#include "vqu/mesh.hpp"

namespace vqu {

inline std::size_t int_pow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i)
    r *= base;
  return r;
}

class QuditState {
public:
  QuditState(int n_sites, int local_dim, ComplexVector amplitudes, double tol = kDefaultTolerance)
      : n_(n_sites), d_(local_dim), amps_(std::move(amplitudes)) {
    if (n_ < 1 || d_ < 1)
      throw InvalidDimensionError("qudit state needs n >= 1 sites of dimension d >= 1");
    if (static_cast<std::size_t>(amps_.size()) != int_pow(static_cast<std::size_t>(d_),
                                                          static_cast<std::size_t>(n_)))
      throw InvalidDimensionError("amplitude vector has length " + std::to_string(amps_.size()) +
                                  ", expected d^n");
    if (std::abs(amps_.norm() - 1.0) > tol)
      throw ValidationError("qudit state is not normalized (norm " +
                            std::to_string(amps_.norm()) + ")");
  }

  /// |levels[0], levels[1], ...>
  static QuditState product(int local_dim, const std::vector<int> &levels) {
    std::size_t idx = 0;
    for (int l : levels) {
      if (l < 0 || l >= local_dim)
        throw InvalidDimensionError("level " + std::to_string(l) + " out of range");
      idx = idx * static_cast<std::size_t>(local_dim) + static_cast<std::size_t>(l);
    }
    const auto n = static_cast<int>(levels.size());
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(
        int_pow(static_cast<std::size_t>(local_dim), levels.size())));
    v(static_cast<Eigen::Index>(idx)) = 1.0;
    return QuditState(n, local_dim, std::move(v));
  }

  [[nodiscard]] int n_sites() const { return n_; }
  [[nodiscard]] int local_dim() const { return d_; }
  [[nodiscard]] const ComplexVector &amplitudes() const { return amps_; }

  /// Stride of `site` in the amplitude index.
  [[nodiscard]] std::size_t stride(int site) const {
    return int_pow(static_cast<std::size_t>(d_), static_cast<std::size_t>(n_ - 1 - site));
  }

private:
  int n_;
  int d_;
  ComplexVector amps_;
};

/// |<a|b>|^2
inline double fidelity(const QuditState &a, const QuditState &b) {
  if (a.amplitudes().size() != b.amplitudes().size())
    throw InvalidDimensionError("fidelity between states of different dimension");
  return std::norm(a.amplitudes().dot(b.amplitudes()));
}

namespace detail {

inline void check_sites(const QuditState &psi, const std::vector<int> &sites) {
  std::vector<int> sorted = sites;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidDimensionError("duplicate site in site list");
  for (int s : sites)
    if (s < 0 || s >= psi.n_sites())
      throw InvalidDimensionError("site " + std::to_string(s) + " out of range");
}

/// Offsets in the full index of each joint configuration of `sites`
/// (first listed site most significant), with all other sites at 0.
inline std::vector<std::size_t> site_offsets(const QuditState &psi, const std::vector<int> &sites) {
  const auto d = static_cast<std::size_t>(psi.local_dim());
  std::vector<std::size_t> out{0};
  for (int s : sites) {
    std::vector<std::size_t> next;
    next.reserve(out.size() * d);
    for (std::size_t base : out)
      for (std::size_t l = 0; l < d; ++l)
        next.push_back(base + l * psi.stride(s));
    out = std::move(next);
  }
  return out;
}

inline std::vector<int> complement(int n, const std::vector<int> &sites) {
  std::vector<int> rest;
  for (int s = 0; s < n; ++s)
    if (std::find(sites.begin(), sites.end(), s) == sites.end())
      rest.push_back(s);
  return rest;
}

/// Amplitudes as a matrix: rows indexed by `rows_sites`, columns by the rest.
inline ComplexMatrix reshape(const QuditState &psi, const std::vector<int> &row_sites) {
  const auto rows = site_offsets(psi, row_sites);
  const auto cols = site_offsets(psi, complement(psi.n_sites(), row_sites));
  ComplexMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < rows.size(); ++r)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          psi.amplitudes()(static_cast<Eigen::Index>(rows[r] + cols[c]));
  return m;
}

} // namespace detail

/// Apply U to `sites` (listed order = significance order inside U).
inline QuditState apply_unitary(const QuditState &psi, const UnitaryMatrix &u,
                                const std::vector<int> &sites) {
  detail::check_sites(psi, sites);
  if (sites.empty())
    throw InvalidDimensionError("apply_unitary needs at least one site");
  const auto local = detail::site_offsets(psi, sites);
  if (u.dim() != local.size())
    throw InvalidDimensionError("unitary of dimension " + std::to_string(u.dim()) + " cannot act on " +
                                std::to_string(sites.size()) + " sites of dimension " +
                                std::to_string(psi.local_dim()));
  const auto rest = detail::site_offsets(psi, detail::complement(psi.n_sites(), sites));
  ComplexVector out(psi.amplitudes().size());
  ComplexVector buf(static_cast<Eigen::Index>(local.size()));
  for (std::size_t base : rest) {
    for (std::size_t l = 0; l < local.size(); ++l)
      buf(static_cast<Eigen::Index>(l)) = psi.amplitudes()(static_cast<Eigen::Index>(base + local[l]));
    const ComplexVector res = u.matrix() * buf;
    for (std::size_t l = 0; l < local.size(); ++l)
      out(static_cast<Eigen::Index>(base + local[l])) = res(static_cast<Eigen::Index>(l));
  }
  return QuditState(psi.n_sites(), psi.local_dim(), std::move(out), 1e-8);
}

struct ReducedDensity {
  std::vector<int> dims;
  ComplexMatrix rho;

  [[nodiscard]] double trace() const { return rho.trace().real(); }
};

inline ReducedDensity partial_trace(const QuditState &psi, const std::vector<int> &keep) {
  if (keep.empty())
    throw InvalidDimensionError("partial_trace needs a nonempty keep set");
  detail::check_sites(psi, keep);
  const ComplexMatrix m = detail::reshape(psi, keep);
  return {std::vector<int>(keep.size(), psi.local_dim()), m * m.adjoint()};
}

/// <target| rho_site |target>
inline double site_fidelity(const QuditState &psi, int site, const ComplexVector &target) {
  if (target.size() != psi.local_dim())
    throw InvalidDimensionError("target state has the wrong local dimension");
  if (std::abs(target.norm() - 1.0) > kDefaultTolerance)
    throw ValidationError("target state is not normalized");
  const ComplexMatrix m = detail::reshape(psi, {site});
  return std::clamp((target.adjoint() * m).squaredNorm(), 0.0, 1.0);
}

/// Probability that `site` is found in computational level `level`.
inline double site_level_probability(const QuditState &psi, int site, int level) {
  if (site < 0 || site >= psi.n_sites())
    throw InvalidDimensionError("site out of range");
  const auto stride = psi.stride(site);
  const auto d = static_cast<std::size_t>(psi.local_dim());
  double p = 0.0;
  for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i)
    if ((static_cast<std::size_t>(i) / stride) % d == static_cast<std::size_t>(level))
      p += std::norm(psi.amplitudes()(i));
  return std::clamp(p, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Rectangular mesh on D modes.

/// Mode pairs (p, p+1), 0-based, of the rectangular mesh in application order.
/// The order is the one produced by clements_decompose.
inline std::vector<int> clements_layout(int dim) {
  if (dim < 1)
    throw InvalidDimensionError("mesh dimension must be >= 1");
  std::vector<int> right;
  std::vector<int> left;
  const int n = dim;
  for (int i = 1; i <= n - 1; ++i) {
    if (i % 2 == 1)
      for (int j = 0; j <= i - 1; ++j)
        right.push_back(i - j - 1);
    else
      for (int j = 1; j <= i; ++j)
        left.push_back(n + j - i - 2);
  }
  std::vector<int> out = right;
  out.insert(out.end(), left.rbegin(), left.rend());
  return out;
}

/// D(D-1)/2 (alpha, phi) pairs followed by D output phases.
inline std::size_t clements_phase_count(int dim) {
  const auto d = static_cast<std::size_t>(dim);
  return d * (d - 1) + d;
}

/// In place: rows of `m` <- ansatz(phases) * rows. `m` has `dim` rows.
template <typename Derived>
void clements_apply(const std::vector<int> &layout, const double *phases,
                    Eigen::MatrixBase<Derived> &m) {
  for (std::size_t g = 0; g < layout.size(); ++g)
    apply_mzi_rows(m, layout[g], phases[2 * g], phases[2 * g + 1]);
  const double *out = phases + 2 * layout.size();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    m.row(r) *= std::polar(1.0, out[r]);
}

inline UnitaryMatrix clements_ansatz(int dim, const std::vector<double> &phases) {
  if (phases.size() != clements_phase_count(dim))
    throw ArityError("rectangular mesh on " + std::to_string(dim) + " modes takes " +
                     std::to_string(clements_phase_count(dim)) + " phases, got " +
                     std::to_string(phases.size()));
  ComplexMatrix u = ComplexMatrix::Identity(dim, dim);
  clements_apply(clements_layout(dim), phases.data(), u);
  return UnitaryMatrix::unchecked(std::move(u));
}

/// Phases for which clements_ansatz is exactly the identity: every MZI in the
/// bar state and output phases cancelling the -1 entries.
inline std::vector<double> clements_identity_phases(int dim) {
  const auto layout = clements_layout(dim);
  std::vector<double> ph(clements_phase_count(dim), 0.0);
  std::vector<int> sign(static_cast<std::size_t>(dim), 1);
  for (std::size_t g = 0; g < layout.size(); ++g) {
    ph[2 * g] = kBarState.alpha;
    sign[static_cast<std::size_t>(layout[g]) + 1] *= -1;
  }
  for (int r = 0; r < dim; ++r)
    ph[2 * layout.size() + static_cast<std::size_t>(r)] = sign[static_cast<std::size_t>(r)] < 0 ? kPi : 0.0;
  return ph;
}

/// Phases reproducing `u` exactly through clements_ansatz.
/// Nulls alternate anti-diagonals with T^dagger from the right (odd steps)
/// and T from the left (even steps), then pulls the left factors through
/// the remaining diagonal with T^dagger(a,p) diag(x,y) = diag(e^{-ip} y, y) T(a, arg(x/y)).
inline std::vector<double> clements_decompose(const UnitaryMatrix &u) {
  const auto n = static_cast<int>(u.dim());
  ComplexMatrix x = u.matrix();
  std::vector<MziPhases> right;
  std::vector<std::pair<int, MziPhases>> left;

  for (int i = 1; i <= n - 1; ++i) {
    if (i % 2 == 1) {
      for (int j = 0; j <= i - 1; ++j) {
        const int row = n - j - 1;
        const int c = i - j - 1;
        const Complex a = x(row, c);
        const Complex b = x(row, c + 1);
        MziPhases ph;
        ph.alpha = 2.0 * std::atan2(std::abs(b), std::abs(a));
        ph.phi = std::arg(a) - std::arg(b) + kPi;
        const ComplexMatrix tdag = mzi_matrix(ph.alpha, ph.phi).matrix().adjoint();
        const ComplexMatrix cols = x.middleCols(c, 2);
        x.middleCols(c, 2) = cols * tdag;
        right.push_back(ph);
      }
    } else {
      for (int j = 1; j <= i; ++j) {
        const int r = n + j - i - 2;
        const int col = j - 1;
        const Complex a = x(r, col);
        const Complex b = x(r + 1, col);
        MziPhases ph;
        ph.alpha = 2.0 * std::atan2(std::abs(a), std::abs(b));
        ph.phi = std::arg(b) - std::arg(a);
        apply_mzi_rows(x, r, ph.alpha, ph.phi);
        left.emplace_back(r, ph);
      }
    }
  }

  std::vector<Complex> diag(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r)
    diag[static_cast<std::size_t>(r)] = x(r, r) / std::abs(x(r, r));

  std::vector<double> out;
  out.reserve(clements_phase_count(n));
  for (const auto &ph : right) {
    out.push_back(ph.alpha);
    out.push_back(ph.phi);
  }
  // u = L_1^dag ... L_k^dag D R_p ... R_1. Pull L_k^dag first.
  std::vector<MziPhases> converted;
  for (auto it = left.rbegin(); it != left.rend(); ++it) {
    const int r = it->first;
    const Complex xr = diag[static_cast<std::size_t>(r)];
    const Complex yr = diag[static_cast<std::size_t>(r) + 1];
    converted.push_back({it->second.alpha, std::arg(xr / yr)});
    diag[static_cast<std::size_t>(r)] = std::polar(1.0, -it->second.phi) * yr;
    diag[static_cast<std::size_t>(r) + 1] = yr;
  }
  // Application order after R_p: T'_k first, T'_1 last.
  for (const auto &ph : converted) {
    out.push_back(ph.alpha);
    out.push_back(ph.phi);
  }
  for (const auto &z : diag)
    out.push_back(std::arg(z));
  return out;
}

// ---------------------------------------------------------------------------
// Laughlin gates and states.

/// Two-qudit W_{i,j}(p): |ij> -> sqrt(p)|ij> - sqrt(1-p)|ji>,
/// |ji> -> sqrt(1-p)|ij> + sqrt(p)|ji>, identity elsewhere.
inline UnitaryMatrix laughlin_w_gate(double p, int i, int j, int d) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ValidationError("W gate probability must lie in [0, 1]");
  if (i == j || i < 0 || j < 0 || i >= d || j >= d)
    throw InvalidDimensionError("W gate needs two distinct levels below d");
  ComplexMatrix m = ComplexMatrix::Identity(d * d, d * d);
  const int ij = i * d + j;
  const int ji = j * d + i;
  const double sp = std::sqrt(p);
  const double sq = std::sqrt(1.0 - p);
  m(ij, ij) = sp;
  m(ji, ij) = -sq;
  m(ij, ji) = sq;
  m(ji, ji) = sp;
  return UnitaryMatrix::unchecked(std::move(m));
}

/// Two-qudit W-tilde_{i,j}(theta): |ij> -> cos|ij> + sin|ji>,
/// |ji> -> -sin|ij> + cos|ji>, identity elsewhere.
inline UnitaryMatrix laughlin_wtilde_gate(double theta, int i, int j, int d) {
  if (i == j || i < 0 || j < 0 || i >= d || j >= d)
    throw InvalidDimensionError("W-tilde gate needs two distinct levels below d");
  ComplexMatrix m = ComplexMatrix::Identity(d * d, d * d);
  const int ij = i * d + j;
  const int ji = j * d + i;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  m(ij, ij) = c;
  m(ji, ij) = s;
  m(ij, ji) = -s;
  m(ji, ji) = c;
  return UnitaryMatrix::unchecked(std::move(m));
}

/// One gate of the generating circuit: level `top` is exchanged with every
/// lower level. The factors act on disjoint two-dimensional blocks.
struct LaughlinGate {
  int site = 0; ///< acts on (site, site + 1)
  int top = 1;
  double p = 1.0;
};

/// Generating circuit on `n` sites in application order. For top = 1..n-1 the
/// level `top`, initially at site n-1-top, walks right through the block of
/// lower levels; the gate at chain position t keeps it with p = 1/(top+1-t),
/// which leaves it at each of the top+1 positions with equal weight.
inline std::vector<LaughlinGate> laughlin_circuit(int n) {
  std::vector<LaughlinGate> gates;
  for (int top = 1; top <= n - 1; ++top)
    for (int t = 0; t < top; ++t)
      gates.push_back({n - 1 - top + t, top, 1.0 / static_cast<double>(top + 1 - t)});
  return gates;
}

inline UnitaryMatrix laughlin_layer_gate(const LaughlinGate &g, int d) {
  ComplexMatrix m = ComplexMatrix::Identity(d * d, d * d);
  for (int i = 0; i < g.top; ++i)
    m = laughlin_w_gate(g.p, g.top, i, d).matrix() * m;
  return UnitaryMatrix::unchecked(std::move(m));
}

/// prod over lower levels of W-tilde_{top, i}(theta); the trial counterpart of laughlin_layer_gate.
inline UnitaryMatrix laughlin_trial_gate(int top, double theta, int d) {
  ComplexMatrix m = ComplexMatrix::Identity(d * d, d * d);
  for (int i = 0; i < top; ++i)
    m = laughlin_wtilde_gate(theta, top, i, d).matrix() * m;
  return UnitaryMatrix::unchecked(std::move(m));
}

/// Antisymmetrized sum over permutations of (n-1, ..., 0), normalized by 1/sqrt(n!).
inline QuditState laughlin_permutation_sum(int n) {
  if (n < 2)
    throw InvalidDimensionError("Laughlin state needs n >= 2");
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(
      int_pow(static_cast<std::size_t>(n), static_cast<std::size_t>(n))));
  double count = 0.0;
  do {
    // Sign relative to the reference ordering (n-1, ..., 0) via inversion count.
    int inversions = 0;
    std::size_t idx = 0;
    for (int a = 0; a < n; ++a) {
      idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(perm[static_cast<std::size_t>(a)]);
      for (int b = a + 1; b < n; ++b)
        if (perm[static_cast<std::size_t>(a)] < perm[static_cast<std::size_t>(b)])
          ++inversions;
    }
    v(static_cast<Eigen::Index>(idx)) = inversions % 2 == 0 ? 1.0 : -1.0;
    count += 1.0;
  } while (std::next_permutation(perm.begin(), perm.end()));
  v /= std::sqrt(count);
  return QuditState(n, n, std::move(v));
}

/// The generating circuit applied to |n-1, n-2, ..., 0>.
inline QuditState laughlin_circuit_state(int n) {
  if (n < 2)
    throw InvalidDimensionError("Laughlin state needs n >= 2");
  std::vector<int> levels(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s)
    levels[static_cast<std::size_t>(s)] = n - 1 - s;
  QuditState psi = QuditState::product(n, levels);
  for (const auto &g : laughlin_circuit(n))
    psi = apply_unitary(psi, laughlin_layer_gate(g, n), {g.site, g.site + 1});
  return psi;
}

/// Builds the state by permutation sum and by circuit, checks that they agree
/// within 1e-10 in fidelity, and returns the permutation-sum state.
inline QuditState laughlin_state(int n) {
  QuditState sum = laughlin_permutation_sum(n);
  const QuditState circ = laughlin_circuit_state(n);
  const double f = fidelity(sum, circ);
  if (!(f >= 1.0 - 1e-10))
    throw ValidationError("Laughlin circuit and permutation sum disagree: fidelity " +
                          std::to_string(f));
  return sum;
}

} // namespace vqu
