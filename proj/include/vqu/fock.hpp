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
 * @file fock.hpp
 * @brief n indistinguishable photons in m modes: occupation bases, Ryser
 * permanents, unitary evolution and mode observables.
 *
 * Column i of a mode unitary U is the image of input mode i, so a single
 * photon in mode i leaves in mode r with amplitude U(r, i).
 *
 * Besides full-state evolution there is a transfer-matrix path for inputs
 * with at most one photon per mode. With A the m x n matrix of the occupied
 * input columns, the joint generating function of the output counts is
 *   E[prod_r z_r^{n_r}] = perm(A^dagger diag(z) A),
 * which gives marginals and confinement probabilities from n x n permanents
 * without touching the C(m+n-1, n) dimensional state.
 */
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vqu/errors.hpp"
#include "vqu/linalg.hpp"

namespace vqu {

using Occupation = std::vector<int>;

inline constexpr std::size_t kDefaultBasisCapacity = 10'000'000;

/// Exact integer factorial up to 20, Gamma-function value above.
inline double factorial(int n) {
  if (n < 0)
    throw InvalidDimensionError("factorial of a negative number");
  if (n <= 20) {
    std::uint64_t f = 1;
    for (int i = 2; i <= n; ++i)
      f *= static_cast<std::uint64_t>(i);
    return static_cast<double>(f);
  }
  return std::tgamma(static_cast<double>(n) + 1.0);
}

/// C(n, k) in floating point. Used for sizing and ranking only.
inline double binomial(int n, int k) {
  if (k < 0 || k > n)
    return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i)
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

/// All n-photon occupation vectors over m modes, lexicographically descending:
/// (n,0,...,0) first, (0,...,0,n) last.
class OccupationBasis {
public:
  OccupationBasis(int n_photons, int n_modes, std::size_t capacity = kDefaultBasisCapacity)
      : n_(n_photons), m_(n_modes) {
    if (n_modes < 1)
      throw InvalidDimensionError("basis needs at least one mode");
    if (n_photons < 0)
      throw InvalidDimensionError("photon number must be non-negative");
    const double size = binomial(m_ + n_ - 1, n_);
    if (size > static_cast<double>(capacity))
      throw CapacityError(std::to_string(n_) + " photons in " + std::to_string(m_) +
                          " modes needs " + std::to_string(size) +
                          " basis states, above the limit of " + std::to_string(capacity));
    size_ = static_cast<std::size_t>(size);
    // Ranking table: ways_[r][q] = number of ways to put r photons in q modes.
    ways_.assign(static_cast<std::size_t>(n_ + 1), std::vector<std::size_t>(m_ + 1, 0));
    for (int r = 0; r <= n_; ++r)
      for (int q = 0; q <= m_; ++q)
        ways_[r][q] = q == 0 ? (r == 0 ? 1 : 0)
                             : static_cast<std::size_t>(binomial(r + q - 1, r));

    flat_.reserve(size_ * static_cast<std::size_t>(m_));
    Occupation cur(static_cast<std::size_t>(m_), 0);
    fill(cur, 0, n_);
  }

  [[nodiscard]] int n_photons() const { return n_; }
  [[nodiscard]] int n_modes() const { return m_; }
  [[nodiscard]] std::size_t size() const { return size_; }

  /// View of the i-th occupation vector.
  [[nodiscard]] std::span<const std::uint8_t> state(std::size_t i) const {
    return {flat_.data() + i * static_cast<std::size_t>(m_), static_cast<std::size_t>(m_)};
  }

  [[nodiscard]] Occupation occupation(std::size_t i) const {
    const auto s = state(i);
    return Occupation(s.begin(), s.end());
  }

  [[nodiscard]] int occupancy(std::size_t i, int mode) const {
    return flat_[i * static_cast<std::size_t>(m_) + static_cast<std::size_t>(mode)];
  }

  /// Position of `occ`, computed combinatorially.
  [[nodiscard]] std::size_t index_of(const Occupation &occ) const {
    if (static_cast<int>(occ.size()) != m_)
      throw InvalidDimensionError("occupation vector has " + std::to_string(occ.size()) +
                                  " modes, basis has " + std::to_string(m_));
    int total = 0;
    for (int v : occ) {
      if (v < 0)
        throw InvalidDimensionError("negative occupation");
      total += v;
    }
    if (total != n_)
      throw ConservationError("occupation vector holds " + std::to_string(total) +
                              " photons, basis has " + std::to_string(n_));
    std::size_t rank = 0;
    int remaining = n_;
    for (int i = 0; i + 1 < m_; ++i) {
      const int v = occ[static_cast<std::size_t>(i)];
      for (int x = remaining; x > v; --x)
        rank += ways_[static_cast<std::size_t>(remaining - x)][static_cast<std::size_t>(m_ - i - 1)];
      remaining -= v;
    }
    return rank;
  }

private:
  void fill(Occupation &cur, int mode, int remaining) {
    if (mode == m_ - 1) {
      cur[static_cast<std::size_t>(mode)] = remaining;
      for (int v : cur)
        flat_.push_back(static_cast<std::uint8_t>(v));
      return;
    }
    for (int x = remaining; x >= 0; --x) {
      cur[static_cast<std::size_t>(mode)] = x;
      fill(cur, mode + 1, remaining - x);
    }
    cur[static_cast<std::size_t>(mode)] = 0;
  }

  int n_;
  int m_;
  std::size_t size_ = 0;
  std::vector<std::uint8_t> flat_;
  std::vector<std::vector<std::size_t>> ways_;
};

inline std::shared_ptr<const OccupationBasis>
enumerate_basis(int n, int m, std::size_t capacity = kDefaultBasisCapacity) {
  return std::make_shared<const OccupationBasis>(n, m, capacity);
}

class FockState {
public:
  FockState(std::shared_ptr<const OccupationBasis> basis, ComplexVector amplitudes,
            double tol = kDefaultTolerance)
      : basis_(std::move(basis)), amps_(std::move(amplitudes)) {
    if (!basis_)
      throw InvalidDimensionError("FockState needs a basis");
    if (static_cast<std::size_t>(amps_.size()) != basis_->size())
      throw InvalidDimensionError("amplitude vector length " + std::to_string(amps_.size()) +
                                  " does not match basis size " + std::to_string(basis_->size()));
    if (std::abs(amps_.norm() - 1.0) > tol)
      throw ValidationError("FockState is not normalized (norm " + std::to_string(amps_.norm()) +
                            ")");
  }

  static FockState basis_state(std::shared_ptr<const OccupationBasis> basis,
                               const Occupation &occ) {
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(basis->size()));
    v(static_cast<Eigen::Index>(basis->index_of(occ))) = 1.0;
    return FockState(std::move(basis), std::move(v));
  }

  /// |1_1 ... 1_n 0 ... 0> over m modes.
  static FockState single_photons(int n, int m) {
    if (n > m)
      throw InvalidDimensionError("cannot place " + std::to_string(n) +
                                  " single photons in " + std::to_string(m) + " modes");
    Occupation occ(static_cast<std::size_t>(m), 0);
    std::fill_n(occ.begin(), n, 1);
    return basis_state(enumerate_basis(n, m), occ);
  }

  [[nodiscard]] const OccupationBasis &basis() const { return *basis_; }
  [[nodiscard]] const std::shared_ptr<const OccupationBasis> &basis_ptr() const { return basis_; }
  [[nodiscard]] const ComplexVector &amplitudes() const { return amps_; }
  [[nodiscard]] Complex amplitude(const Occupation &occ) const {
    return amps_(static_cast<Eigen::Index>(basis_->index_of(occ)));
  }

private:
  std::shared_ptr<const OccupationBasis> basis_;
  ComplexVector amps_;
};

/// Ryser's formula, Gray-code ordered. O(2^k k). Summation order is fixed.
template <typename Derived>
Complex permanent(const Eigen::MatrixBase<Derived> &a) {
  if (a.rows() != a.cols())
    throw ShapeError("permanent of a non-square " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " matrix");
  const auto k = static_cast<int>(a.rows());
  if (k == 0)
    return {1.0, 0.0};
  if (k > 40)
    throw CapacityError("permanent of size " + std::to_string(k) + " is out of reach");
  std::vector<Complex> rowsum(static_cast<std::size_t>(k), Complex(0.0, 0.0));
  Complex total(0.0, 0.0);
  std::uint64_t prev = 0;
  const std::uint64_t count = std::uint64_t{1} << k;
  for (std::uint64_t i = 1; i < count; ++i) {
    const std::uint64_t gray = i ^ (i >> 1);
    const std::uint64_t flip = gray ^ prev;
    const int col = std::countr_zero(flip);
    const double sign = (gray & flip) ? 1.0 : -1.0;
    Complex prod(1.0, 0.0);
    for (int r = 0; r < k; ++r) {
      rowsum[static_cast<std::size_t>(r)] += sign * a(r, col);
      prod *= rowsum[static_cast<std::size_t>(r)];
    }
    total += ((k - std::popcount(gray)) % 2 == 0) ? prod : -prod;
    prev = gray;
  }
  return total;
}

namespace detail {

inline double occupation_factorials(std::span<const std::uint8_t> occ) {
  double f = 1.0;
  for (auto v : occ)
    f *= factorial(v);
  return f;
}

inline double occupation_factorials(const Occupation &occ) {
  double f = 1.0;
  for (int v : occ)
    f *= factorial(v);
  return f;
}

/// Rows of `m` repeated per occupation.
template <typename Occ>
ComplexMatrix repeat_rows(const ComplexMatrix &m, const Occ &occ) {
  int total = 0;
  for (auto v : occ)
    total += v;
  ComplexMatrix out(total, m.cols());
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < occ.size(); ++i)
    for (int rep = 0; rep < static_cast<int>(occ[i]); ++rep)
      out.row(r++) = m.row(static_cast<Eigen::Index>(i));
  return out;
}

template <typename Occ>
ComplexMatrix repeat_cols(const ComplexMatrix &m, const Occ &occ) {
  int total = 0;
  for (auto v : occ)
    total += v;
  ComplexMatrix out(m.rows(), total);
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < occ.size(); ++i)
    for (int rep = 0; rep < static_cast<int>(occ[i]); ++rep)
      out.col(c++) = m.col(static_cast<Eigen::Index>(i));
  return out;
}

inline void check_mode(int mode, int m) {
  if (mode < 0 || mode >= m)
    throw InvalidDimensionError("mode " + std::to_string(mode) + " out of range for " +
                                std::to_string(m) + " modes");
}

} // namespace detail

/// <t| U |s> = perm(U_{t,s}) / sqrt(prod s_i! prod t_j!)
inline Complex transition_amplitude(const UnitaryMatrix &u, const Occupation &s,
                                    const Occupation &t) {
  if (s.size() != u.dim() || t.size() != u.dim())
    throw InvalidDimensionError("occupation vectors must have one entry per mode");
  const int ns = std::accumulate(s.begin(), s.end(), 0);
  const int nt = std::accumulate(t.begin(), t.end(), 0);
  if (ns != nt)
    throw ConservationError("input has " + std::to_string(ns) + " photons, output has " +
                            std::to_string(nt));
  const ComplexMatrix sub = detail::repeat_rows(detail::repeat_cols(u.matrix(), s), t);
  return permanent(sub) /
         std::sqrt(detail::occupation_factorials(s) * detail::occupation_factorials(t));
}

inline FockState evolve(const UnitaryMatrix &u, const FockState &psi) {
  const auto &basis = psi.basis();
  if (static_cast<std::size_t>(basis.n_modes()) != u.dim())
    throw InvalidDimensionError("unitary acts on " + std::to_string(u.dim()) +
                                " modes, state has " + std::to_string(basis.n_modes()));
  const auto size = static_cast<Eigen::Index>(basis.size());
  ComplexVector out = ComplexVector::Zero(size);
  std::vector<double> out_norm(basis.size());
  for (std::size_t t = 0; t < basis.size(); ++t)
    out_norm[t] = std::sqrt(detail::occupation_factorials(basis.state(t)));
  for (Eigen::Index s = 0; s < size; ++s) {
    const Complex c = psi.amplitudes()(s);
    if (c == Complex(0.0, 0.0))
      continue;
    const auto occ_s = basis.state(static_cast<std::size_t>(s));
    const ComplexMatrix cols = detail::repeat_cols(u.matrix(), occ_s);
    const double in_norm = std::sqrt(detail::occupation_factorials(occ_s));
    for (Eigen::Index t = 0; t < size; ++t) {
      const ComplexMatrix sub = detail::repeat_rows(cols, basis.state(static_cast<std::size_t>(t)));
      out(t) += c * permanent(sub) / (in_norm * out_norm[static_cast<std::size_t>(t)]);
    }
  }
  return FockState(psi.basis_ptr(), std::move(out), 1e-8);
}

/// Probability of exactly k photons in `mode` (0-based).
inline double prob_exactly_k(const FockState &psi, int mode, int k) {
  const auto &b = psi.basis();
  detail::check_mode(mode, b.n_modes());
  if (k < 0 || k > b.n_photons())
    throw InvalidDimensionError("photon count " + std::to_string(k) + " out of range");
  double p = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.occupancy(i, mode) == k)
      p += std::norm(psi.amplitudes()(static_cast<Eigen::Index>(i)));
  return p;
}

/// Probability of between 1 and k photons in `mode`. k = n is a bucket-detector click.
inline double prob_up_to_k(const FockState &psi, int mode, int k) {
  const auto &b = psi.basis();
  detail::check_mode(mode, b.n_modes());
  if (k < 1 || k > b.n_photons())
    throw InvalidDimensionError("photon count " + std::to_string(k) + " out of range");
  double p = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const int occ = b.occupancy(i, mode);
    if (occ >= 1 && occ <= k)
      p += std::norm(psi.amplitudes()(static_cast<Eigen::Index>(i)));
  }
  return p;
}

inline double mean_photon_number(const FockState &psi, int mode) {
  const auto &b = psi.basis();
  detail::check_mode(mode, b.n_modes());
  double nbar = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    nbar += b.occupancy(i, mode) * std::norm(psi.amplitudes()(static_cast<Eigen::Index>(i)));
  return nbar;
}

struct ScalingIdentity {
  boost::multiprecision::cpp_rational lhs; ///< 1 - a/b
  boost::multiprecision::cpp_rational rhs; ///< n / (n^2 + n - 1)
  boost::multiprecision::cpp_int a;        ///< configurations with a chosen mode empty
  boost::multiprecision::cpp_int b;        ///< all configurations
};

/// Exact binomial coefficient; zero outside 0 <= k <= top.
inline boost::multiprecision::cpp_int exact_binomial(long top, long k) {
  boost::multiprecision::cpp_int r = 1;
  if (k < 0 || top < 0 || k > top)
    return 0;
  for (long i = 1; i <= k; ++i)
    r = r * (top - k + i) / i;
  return r;
}

/// n photons in m = n^2 modes, counted over occupation vectors. a places all
/// n photons in the other n^2 - 1 modes, b is the full multichoose count, so
/// 1 - a/b is the fraction of configurations occupying the chosen mode.
inline ScalingIdentity scaling_identity(int n) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  if (n < 1)
    throw InvalidDimensionError("scaling identity needs n >= 1");
  const long nn = n;
  const long modes = nn * nn;
  cpp_int a = exact_binomial(nn + (modes - 1) - 1, nn);
  cpp_int b = exact_binomial(nn + modes - 1, nn);
  return {cpp_rational(1) - cpp_rational(a, b), cpp_rational(nn, nn * nn + nn - 1), std::move(a),
          std::move(b)};
}

// ---------------------------------------------------------------------------
// Transfer-matrix observables for inputs with at most one photon per mode.
// `a` is m x n: column i is the output image of the i-th input photon.

/// Columns of `u` for the occupied input modes of a 0/1 occupation vector.
inline ComplexMatrix transfer_matrix(const ComplexMatrix &u, const Occupation &input) {
  for (int v : input)
    if (v > 1)
      throw InvalidDimensionError("transfer-matrix observables need at most one photon per mode");
  return detail::repeat_cols(u, input);
}

/// |perm(A_t)|^2 / prod t!
inline double outcome_probability(const ComplexMatrix &a, const Occupation &t) {
  if (static_cast<Eigen::Index>(t.size()) != a.rows())
    throw InvalidDimensionError("outcome has wrong number of modes");
  if (std::accumulate(t.begin(), t.end(), 0) != a.cols())
    throw ConservationError("outcome photon number differs from input");
  return std::norm(permanent(detail::repeat_rows(a, t))) / detail::occupation_factorials(t);
}

/// Probability that every photon leaves through a mode in `modes`.
inline double prob_all_in(const ComplexMatrix &a, std::span<const int> modes) {
  ComplexMatrix sub(static_cast<Eigen::Index>(modes.size()), a.cols());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    detail::check_mode(modes[i], static_cast<int>(a.rows()));
    sub.row(static_cast<Eigen::Index>(i)) = a.row(modes[i]);
  }
  return std::clamp(permanent(sub.adjoint() * sub).real(), 0.0, 1.0);
}

/// Probability that every photon leaves through the first `count` modes.
inline double prob_confined(const ComplexMatrix &a, int count) {
  return std::clamp(permanent(a.topRows(count).adjoint() * a.topRows(count)).real(), 0.0, 1.0);
}

/// Distribution of the photon count in `mode`: entry k is P(n_mode = k).
/// The generating function perm(A^dagger D(z) A) is a degree-n polynomial in z;
/// sampling it on the n+1 roots of unity and inverting the DFT gives its coefficients.
inline std::vector<double> mode_count_distribution(const ComplexMatrix &a, int mode) {
  detail::check_mode(mode, static_cast<int>(a.rows()));
  const auto n = static_cast<int>(a.cols());
  const ComplexMatrix base = a.adjoint() * a;
  const ComplexMatrix outer = a.row(mode).adjoint() * a.row(mode);
  std::vector<Complex> g(static_cast<std::size_t>(n + 1));
  for (int l = 0; l <= n; ++l) {
    const Complex z = std::polar(1.0, 2.0 * kPi * l / (n + 1));
    g[static_cast<std::size_t>(l)] = permanent(base + (z - 1.0) * outer);
  }
  std::vector<double> p(static_cast<std::size_t>(n + 1));
  for (int k = 0; k <= n; ++k) {
    Complex acc(0.0, 0.0);
    for (int l = 0; l <= n; ++l)
      acc += g[static_cast<std::size_t>(l)] * std::polar(1.0, -2.0 * kPi * l * k / (n + 1));
    p[static_cast<std::size_t>(k)] = std::clamp(acc.real() / (n + 1), 0.0, 1.0);
  }
  return p;
}

/// P(n_mode = 1) from the generating function's first derivative at z = 0.
/// perm(B + (z-1) v^dag v) is affine in each of n rank-one updates, and the
/// z^1 coefficient is sum_i perm of B0 with row i replaced: one n x n permanent each.
inline double prob_single_photon(const ComplexMatrix &a, int mode) {
  detail::check_mode(mode, static_cast<int>(a.rows()));
  const ComplexMatrix outer = a.row(mode).adjoint() * a.row(mode);
  const ComplexMatrix b0 = a.adjoint() * a - outer;
  Complex acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    ComplexMatrix mix = b0;
    mix.row(i) = outer.row(i);
    acc += permanent(mix);
  }
  return std::clamp(acc.real(), 0.0, 1.0);
}

/// sum_k |A(mode, k)|^2
inline double mean_photon_number(const ComplexMatrix &a, int mode) {
  detail::check_mode(mode, static_cast<int>(a.rows()));
  return a.row(mode).squaredNorm();
}

} // namespace vqu
