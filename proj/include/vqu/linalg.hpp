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
 * @file linalg.hpp
 * @brief Dense complex linear algebra shared by every simulator module:
 * the validated UnitaryMatrix type, Haar sampling and least-squares
 * polynomial fits used by the scaling analysis.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vqu/errors.hpp"

namespace vqu {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// The only random source used across the library. Always passed explicitly.
using Rng = std::mt19937_64;

inline constexpr double kDefaultTolerance = 1e-10;
inline constexpr double kPi = 3.14159265358979323846;

/// max_ij |(M^dagger M - I)_ij|
inline double unitarity_defect(const ComplexMatrix &m) {
  if (m.rows() != m.cols())
    throw ShapeError("unitarity check needs a square matrix");
  const auto n = m.rows();
  return (m.adjoint() * m - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

/// Square complex matrix with U^dagger U = I. Immutable once built.
class UnitaryMatrix {
public:
  /// Validates unitarity to `tol` (max-norm of U^dagger U - I).
  static UnitaryMatrix from_matrix(ComplexMatrix m, double tol = kDefaultTolerance) {
    if (m.rows() == 0 || m.rows() != m.cols())
      throw InvalidDimensionError("unitary must be square with dim >= 1, got " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    const double defect = unitarity_defect(m);
    if (!(defect < tol))
      throw ValidationError("matrix is not unitary: max |U^dag U - I| = " + std::to_string(defect));
    return UnitaryMatrix(std::move(m));
  }

  /// Skips validation. For products of already-unitary factors.
  static UnitaryMatrix unchecked(ComplexMatrix m) { return UnitaryMatrix(std::move(m)); }

  static UnitaryMatrix identity(std::size_t dim) {
    if (dim == 0)
      throw InvalidDimensionError("dimension must be >= 1");
    const auto d = static_cast<Eigen::Index>(dim);
    return UnitaryMatrix(ComplexMatrix::Identity(d, d));
  }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  [[nodiscard]] const ComplexMatrix &matrix() const { return m_; }
  [[nodiscard]] Complex operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

  [[nodiscard]] UnitaryMatrix adjoint() const { return UnitaryMatrix(m_.adjoint()); }

  [[nodiscard]] ComplexVector apply(const ComplexVector &v) const {
    if (v.size() != m_.cols())
      throw InvalidDimensionError("vector length does not match unitary dimension");
    return m_ * v;
  }

  friend UnitaryMatrix operator*(const UnitaryMatrix &a, const UnitaryMatrix &b) {
    if (a.dim() != b.dim())
      throw InvalidDimensionError("unitary product dimension mismatch");
    return UnitaryMatrix(a.m_ * b.m_);
  }

private:
  explicit UnitaryMatrix(ComplexMatrix m) : m_(std::move(m)) {}
  ComplexMatrix m_;
};

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of R's diagonal moved into Q (without that correction QR is not Haar).
inline UnitaryMatrix haar_unitary(std::size_t dim, Rng &rng) {
  if (dim == 0)
    throw InvalidDimensionError("haar_unitary needs dim >= 1");
  const auto d = static_cast<Eigen::Index>(dim);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix z(d, d);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      z(r, c) = Complex(re, im);
    }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix &r = qr.matrixQR();
  for (Eigen::Index k = 0; k < d; ++k) {
    const Complex rkk = r(k, k);
    const double mag = std::abs(rkk);
    const Complex phase = mag > 0.0 ? rkk / mag : Complex(1.0, 0.0);
    q.col(k) *= phase;
  }
  return UnitaryMatrix::unchecked(std::move(q));
}

struct PolyFitResult {
  std::vector<double> coefficients; ///< lowest degree first
  double r_squared = 0.0;
  double residual_error = 0.0; ///< 1 - R^2

  [[nodiscard]] std::size_t degree() const {
    return coefficients.empty() ? 0 : coefficients.size() - 1;
  }

  [[nodiscard]] double evaluate(double x) const {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
      acc = acc * x + *it;
    return acc;
  }
};

/// Coefficient of determination against the mean-model baseline, clamped to [0, 1].
inline double r_squared(std::span<const double> y, std::span<const double> fitted) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - fitted[i]) * (y[i] - fitted[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0)
    return ss_res == 0.0 ? 1.0 : 0.0;
  return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
}

inline PolyFitResult polyfit(std::span<const double> x, std::span<const double> y,
                             std::size_t degree) {
  if (x.size() != y.size())
    throw ShapeError("polyfit: x and y lengths differ");
  if (x.size() < degree + 1)
    throw InsufficientDataError("polyfit: degree " + std::to_string(degree) + " needs at least " +
                                std::to_string(degree + 1) + " points, got " +
                                std::to_string(x.size()));
  const auto rows = static_cast<Eigen::Index>(x.size());
  const auto cols = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd vander(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double p = 1.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      vander(i, c) = p;
      p *= x[static_cast<std::size_t>(i)];
    }
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd coef = vander.colPivHouseholderQr().solve(rhs);

  PolyFitResult out;
  out.coefficients.assign(coef.data(), coef.data() + coef.size());
  std::vector<double> fitted(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    fitted[i] = out.evaluate(x[i]);
  out.r_squared = r_squared(y, fitted);
  out.residual_error = 1.0 - out.r_squared;
  return out;
}

} // namespace vqu
