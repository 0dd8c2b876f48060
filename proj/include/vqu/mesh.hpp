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
 * @file mesh.hpp
 * @brief Mach-Zehnder meshes: the MZI block, embedding, mesh products,
 * triangular (Reck) decomposition and single-diagonal sub-circuits.
 *
 * Ordering convention: MeshCircuit::placements are in application order.
 * The first placement acts on the state first, so
 * mesh_to_unitary = M_last * ... * M_2 * M_1.
 *
 * Mode indices inside MziPlacement are 1-based (j acts on modes j and j+1).
 * Everything else in the API is 0-based.
 */
#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "vqu/errors.hpp"
#include "vqu/linalg.hpp"

namespace vqu {

struct MziPhases {
  double alpha = 0.0;
  double phi = 0.0;
};

/// alpha = pi: diag(1, -1), the bar state.
inline constexpr MziPhases kBarState{kPi, 0.0};
/// (0, 0): the cross state, a mode swap. Initial value of compression meshes.
inline constexpr MziPhases kCrossState{0.0, 0.0};

struct MziPlacement {
  int k = 1; ///< diagonal index, 1-based
  int j = 1; ///< acts on modes j, j+1 (1-based)
  double alpha = 0.0;
  double phi = 0.0;

  [[nodiscard]] MziPhases phases() const { return {alpha, phi}; }
};

struct MeshCircuit {
  std::size_t dim = 1;
  std::vector<MziPlacement> placements;

  void validate() const {
    if (dim == 0)
      throw InvalidDimensionError("mesh dimension must be >= 1");
    for (const auto &p : placements)
      if (p.j < 1 || static_cast<std::size_t>(p.j) + 1 > dim)
        throw PlacementError("MZI on modes (" + std::to_string(p.j) + "," +
                             std::to_string(p.j + 1) + ") does not fit in " +
                             std::to_string(dim) + " modes");
  }

  [[nodiscard]] std::size_t size() const { return placements.size(); }
};

/// [[e^{i phi} sin(a/2), cos(a/2)], [e^{i phi} cos(a/2), -sin(a/2)]]
inline UnitaryMatrix mzi_matrix(double alpha, double phi) {
  const double s = std::sin(alpha / 2.0);
  const double c = std::cos(alpha / 2.0);
  const Complex e = std::polar(1.0, phi);
  ComplexMatrix t(2, 2);
  t << e * s, c, e * c, -s;
  return UnitaryMatrix::unchecked(std::move(t));
}

/// In place: rows (mode, mode+1) of `m` <- T(alpha, phi) * rows. `mode` is 0-based.
/// Applying this to a transfer matrix evolves it through one MZI.
template <typename Derived>
inline void apply_mzi_rows(Eigen::MatrixBase<Derived> &m, Eigen::Index mode, double alpha,
                           double phi) {
  const double s = std::sin(alpha / 2.0);
  const double c = std::cos(alpha / 2.0);
  const Complex e = std::polar(1.0, phi);
  const Complex es = e * s;
  const Complex ec = e * c;
  for (Eigen::Index col = 0; col < m.cols(); ++col) {
    const Complex a = m(mode, col);
    const Complex b = m(mode + 1, col);
    m(mode, col) = es * a + c * b;
    m(mode + 1, col) = ec * a - s * b;
  }
}

inline UnitaryMatrix embed(const MziPlacement &p, std::size_t dim) {
  if (p.j < 1 || static_cast<std::size_t>(p.j) + 1 > dim)
    throw PlacementError("MZI on mode " + std::to_string(p.j) + " does not fit in " +
                         std::to_string(dim) + " modes");
  const auto d = static_cast<Eigen::Index>(dim);
  ComplexMatrix m = ComplexMatrix::Identity(d, d);
  m.block(p.j - 1, p.j - 1, 2, 2) = mzi_matrix(p.alpha, p.phi).matrix();
  return UnitaryMatrix::unchecked(std::move(m));
}

inline ComplexMatrix mesh_matrix(const MeshCircuit &circuit) {
  circuit.validate();
  const auto d = static_cast<Eigen::Index>(circuit.dim);
  ComplexMatrix u = ComplexMatrix::Identity(d, d);
  for (const auto &p : circuit.placements)
    apply_mzi_rows(u, p.j - 1, p.alpha, p.phi);
  return u;
}

inline UnitaryMatrix mesh_to_unitary(const MeshCircuit &circuit) {
  return UnitaryMatrix::unchecked(mesh_matrix(circuit));
}

/// diag(e^{i theta}) * mesh_to_unitary(circuit)
inline UnitaryMatrix mesh_to_unitary(const MeshCircuit &circuit,
                                     const std::vector<double> &output_phases) {
  if (output_phases.size() != circuit.dim)
    throw ArityError("expected " + std::to_string(circuit.dim) + " output phases, got " +
                     std::to_string(output_phases.size()));
  ComplexMatrix u = mesh_matrix(circuit);
  for (std::size_t i = 0; i < circuit.dim; ++i)
    u.row(static_cast<Eigen::Index>(i)) *= std::polar(1.0, output_phases[i]);
  return UnitaryMatrix::unchecked(std::move(u));
}

enum class DiagonalOrder {
  Spreading, ///< (k,k+1) first, (dim-1,dim) last. Maps mode k onto modes k..dim.
  Funnel     ///< (dim-1,dim) first, (k,k+1) last. Collects modes k..dim into mode k.
};

/// The k-th diagonal D_k (1-based): dim - k MZIs covering modes k..dim.
/// phases[i] belongs to the i-th MZI in application order.
inline MeshCircuit diagonal_circuit(int k, std::size_t dim, const std::vector<MziPhases> &phases,
                                    DiagonalOrder order = DiagonalOrder::Spreading) {
  if (dim == 0 || k < 1 || static_cast<std::size_t>(k) > dim)
    throw InvalidDimensionError("diagonal " + std::to_string(k) + " does not exist in " +
                                std::to_string(dim) + " modes");
  const std::size_t count = dim - static_cast<std::size_t>(k);
  if (phases.size() != count)
    throw ArityError("diagonal " + std::to_string(k) + " of a " + std::to_string(dim) +
                     "-mode mesh needs " + std::to_string(count) + " phase pairs, got " +
                     std::to_string(phases.size()));
  MeshCircuit out{dim, {}};
  out.placements.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int j = order == DiagonalOrder::Spreading ? k + static_cast<int>(i)
                                                    : static_cast<int>(dim) - 1 - static_cast<int>(i);
    out.placements.push_back({k, j, phases[i].alpha, phases[i].phi});
  }
  return out;
}

/// Full triangular mesh on `dim` modes with every MZI at `init`, built from
/// diagonals D_{dim-1} ... D_1 in application order (the layout of reck_decompose).
inline MeshCircuit reck_layout(std::size_t dim, MziPhases init = kBarState) {
  MeshCircuit out{dim, {}};
  for (int k = static_cast<int>(dim) - 1; k >= 1; --k)
    for (int j = k; j <= static_cast<int>(dim) - 1; ++j)
      out.placements.push_back({k, j, init.alpha, init.phi});
  return out;
}

/// Concatenate b after a (b acts after a). Dimensions must match.
inline MeshCircuit compose(const MeshCircuit &a, const MeshCircuit &b) {
  if (a.dim != b.dim)
    throw InvalidDimensionError("cannot compose meshes of different dimension");
  MeshCircuit out = a;
  out.placements.insert(out.placements.end(), b.placements.begin(), b.placements.end());
  return out;
}

/// Shift every placement down by `offset` modes into a `dim`-mode circuit.
inline MeshCircuit shift_modes(const MeshCircuit &c, int offset, std::size_t dim) {
  MeshCircuit out{dim, c.placements};
  for (auto &p : out.placements)
    p.j += offset;
  out.validate();
  return out;
}

struct ReckDecomposition {
  MeshCircuit circuit;
  std::vector<double> output_phases;
};

/**
 * Factor U = diag(e^{i theta}) * mesh_to_unitary(circuit).
 *
 * Level k peels off column k with a spreading diagonal D_{k+1} so that
 * U = L_0 D_1 L_1 D_2 ... D_{m-1} X with L_k residual one-mode phases and
 * X diagonal. All phases are then pushed to the output with
 * T(a,p) diag(e^{ix}, e^{iy}) = e^{iy} T(a, p + x - y).
 */
inline ReckDecomposition reck_decompose(const UnitaryMatrix &u) {
  const auto m = static_cast<Eigen::Index>(u.dim());
  // Re-validate: UnitaryMatrix::unchecked callers may hand us anything.
  if (!(unitarity_defect(u.matrix()) < kDefaultTolerance))
    throw ValidationError("reck_decompose: input is not unitary");

  struct Level {
    std::vector<MziPhases> mzis;
    double residual = 0.0;
  };
  std::vector<Level> levels;
  ComplexMatrix x = u.matrix();

  for (Eigen::Index k = 0; k + 1 < m; ++k) {
    const Eigen::Index len = m - k;
    ComplexVector col = x.col(k).tail(len);
    std::vector<double> tail(static_cast<std::size_t>(len + 1), 0.0);
    for (Eigen::Index i = len - 1; i >= 0; --i)
      tail[static_cast<std::size_t>(i)] =
          std::hypot(tail[static_cast<std::size_t>(i + 1)], std::abs(col(i)));

    Level lvl;
    double prev_arg = 0.0;
    for (Eigen::Index i = 0; i + 1 < len; ++i) {
      const double here = std::abs(col(i));
      const double rest = tail[static_cast<std::size_t>(i + 1)];
      MziPhases ph;
      if (here + rest < 1e-15) {
        ph = kBarState;
      } else {
        ph.alpha = 2.0 * std::atan2(here, rest);
        const double a = here > 0.0 ? std::arg(col(i)) : prev_arg;
        ph.phi = a - prev_arg;
        prev_arg = a;
      }
      lvl.mzis.push_back(ph);
    }
    const Complex last = col(len - 1);
    lvl.residual = std::abs(last) > 0.0 ? std::arg(last) - prev_arg : 0.0;

    // x <- D^dagger L^dagger x, with D the spreading diagonal on modes k..m-1.
    x.row(m - 1) *= std::polar(1.0, -lvl.residual);
    for (Eigen::Index i = len - 2; i >= 0; --i) {
      const auto &ph = lvl.mzis[static_cast<std::size_t>(i)];
      const ComplexMatrix tdag = mzi_matrix(ph.alpha, ph.phi).matrix().adjoint();
      const Eigen::Index r = k + i;
      const ComplexMatrix rows = x.middleRows(r, 2);
      x.middleRows(r, 2) = tdag * rows;
    }
    levels.push_back(std::move(lvl));
  }

  // Push phases to the output in application order:
  // X first, then D_{m-1}, L_{m-2}, D_{m-2}, ..., D_1, L_0.
  std::vector<double> theta(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i)
    theta[static_cast<std::size_t>(i)] = std::arg(x(i, i));

  ReckDecomposition out;
  out.circuit.dim = u.dim();
  for (Eigen::Index k = m - 2; k >= 0; --k) {
    auto &lvl = levels[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < lvl.mzis.size(); ++i) {
      const auto mode = static_cast<std::size_t>(k) + i;
      const double a = theta[mode];
      const double b = theta[mode + 1];
      out.circuit.placements.push_back({static_cast<int>(k) + 1, static_cast<int>(mode) + 1,
                                        lvl.mzis[i].alpha, lvl.mzis[i].phi + a - b});
      theta[mode] = b;
    }
    theta[static_cast<std::size_t>(m - 1)] += lvl.residual;
  }
  out.output_phases = std::move(theta);
  return out;
}

inline void to_json(nlohmann::json &j, const MziPlacement &p) {
  j = nlohmann::json{{"k", p.k}, {"j", p.j}, {"alpha", p.alpha}, {"phi", p.phi}};
}

inline void from_json(const nlohmann::json &j, MziPlacement &p) {
  j.at("k").get_to(p.k);
  j.at("j").get_to(p.j);
  j.at("alpha").get_to(p.alpha);
  j.at("phi").get_to(p.phi);
}

inline void to_json(nlohmann::json &j, const MeshCircuit &c) {
  j = nlohmann::json{{"dim", c.dim}, {"placements", c.placements}};
}

inline void from_json(const nlohmann::json &j, MeshCircuit &c) {
  j.at("dim").get_to(c.dim);
  j.at("placements").get_to(c.placements);
  c.validate();
}

} // namespace vqu
