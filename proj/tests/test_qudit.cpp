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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "oracles.hpp"
#include "vqu/qudit.hpp"

using namespace vqu;
using Catch::Matchers::WithinAbs;

namespace {

QuditState random_qudits(int n, int d, Rng &rng) {
  return QuditState(n, d, oracle::random_state(static_cast<int>(int_pow(d, n)), rng));
}

QuditState bell() {
  ComplexVector v = ComplexVector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return QuditState(2, 2, v);
}

ComplexVector ket(int d, int level) {
  ComplexVector v = ComplexVector::Zero(d);
  v(level) = 1.0;
  return v;
}

double max_diff(const ComplexMatrix &a, const ComplexMatrix &b) {
  return (a - b).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("QuditState validation", "[qudit]") {
  REQUIRE_THROWS_AS(QuditState(2, 2, ComplexVector::Ones(4)), ValidationError);
  REQUIRE_THROWS_AS(QuditState(2, 2, ComplexVector::Ones(3)), InvalidDimensionError);
  const auto p = QuditState::product(3, {2, 0});
  REQUIRE(std::abs(p.amplitudes()(6) - 1.0) < 1e-15);
}

TEST_CASE("apply_unitary basics", "[qudit]") {
  Rng rng(4);
  const auto psi = random_qudits(3, 2, rng);
  const auto same = apply_unitary(psi, UnitaryMatrix::identity(4), {0, 2});
  REQUIRE(max_diff(same.amplitudes(), psi.amplitudes()) < 1e-15);

  const auto u = haar_unitary(4, rng);
  const auto back = apply_unitary(apply_unitary(psi, u, {2, 0}), u.adjoint(), {2, 0});
  REQUIRE(max_diff(back.amplitudes(), psi.amplitudes()) < 1e-10);

  REQUIRE_THROWS_AS(apply_unitary(psi, u, {1, 1}), InvalidDimensionError);
  REQUIRE_THROWS_AS(apply_unitary(psi, u, {0}), InvalidDimensionError);
}

TEST_CASE("apply_unitary agrees with the dense Kronecker product", "[qudit]") {
  ComplexMatrix cnot = ComplexMatrix::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1.0;
  const auto cx = UnitaryMatrix::from_matrix(cnot);
  const auto in = QuditState::product(2, {1, 0, 1});
  const auto out = apply_unitary(in, cx, {0, 1});
  REQUIRE(std::abs(out.amplitudes()(0b111) - 1.0) < 1e-15);

  Rng rng(6);
  const auto psi = random_qudits(3, 2, rng);
  const ComplexMatrix dense = Eigen::kroneckerProduct(cnot, ComplexMatrix::Identity(2, 2)).eval();
  const ComplexVector expect = dense * psi.amplitudes();
  REQUIRE(max_diff(apply_unitary(psi, cx, {0, 1}).amplitudes(), expect) < 1e-14);
}

TEST_CASE("partial_trace examples", "[qudit]") {
  const auto p = QuditState::product(2, {0, 1});
  const auto r = partial_trace(p, {0});
  REQUIRE(max_diff(r.rho, ket(2, 0) * ket(2, 0).adjoint()) < 1e-15);

  const auto rb = partial_trace(bell(), {0});
  REQUIRE(max_diff(rb.rho, ComplexMatrix::Identity(2, 2) / 2.0) < 1e-15);

  REQUIRE_THROWS_AS(partial_trace(p, {}), InvalidDimensionError);
}

TEST_CASE("partial_trace agrees with the dense oracle", "[qudit]") {
  Rng rng(9);
  for (const auto &keep : std::vector<std::vector<int>>{{1, 2}, {0}, {2, 0}, {1}}) {
    const auto psi = random_qudits(3, 2, rng);
    REQUIRE(max_diff(partial_trace(psi, keep).rho,
                     oracle::dense_reduced_density(psi.amplitudes(), 3, 2, keep)) < 1e-12);
  }
  const auto q = random_qudits(3, 3, rng);
  REQUIRE(max_diff(partial_trace(q, {2, 1}).rho,
                   oracle::dense_reduced_density(q.amplitudes(), 3, 3, {2, 1})) < 1e-12);
}

TEST_CASE("reduced densities are valid", "[qudit][property]") {
  Rng rng(13);
  for (int n = 1; n <= 5; ++n)
    for (int t = 0; t < 5; ++t) {
      const auto psi = random_qudits(n, 2, rng);
      std::vector<int> keep;
      for (int s = 0; s < n; ++s)
        if ((t + s) % 2 == 0)
          keep.push_back(s);
      if (keep.empty())
        keep.push_back(0);
      const auto r = partial_trace(psi, keep);
      REQUIRE_THAT(r.trace(), WithinAbs(1.0, 1e-10));
      REQUIRE(max_diff(r.rho, r.rho.adjoint()) < 1e-12);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(r.rho);
      REQUIRE(es.eigenvalues().minCoeff() > -1e-10);
    }
}

TEST_CASE("site_fidelity", "[qudit]") {
  ComplexVector plus(2);
  plus << 1, 1;
  plus /= std::sqrt(2.0);
  const ComplexVector v = Eigen::kroneckerProduct(ket(2, 0), plus).eval();
  const QuditState psi(2, 2, v);
  REQUIRE_THAT(site_fidelity(psi, 0, ket(2, 0)), WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(site_fidelity(bell(), 0, ket(2, 0)), WithinAbs(0.5, 1e-15));
  REQUIRE_THROWS_AS(site_fidelity(psi, 0, ComplexVector::Ones(2)), ValidationError);

  Rng rng(15);
  for (int t = 0; t < 10; ++t) {
    const auto q = random_qudits(3, 2, rng);
    const ComplexVector target = oracle::random_state(2, rng);
    const auto rho = oracle::dense_reduced_density(q.amplitudes(), 3, 2, {1});
    const double expect = (target.adjoint() * rho * target)(0, 0).real();
    REQUIRE_THAT(site_fidelity(q, 1, target), WithinAbs(expect, 1e-12));
    REQUIRE_THAT(site_level_probability(q, 1, 0),
                 WithinAbs(site_fidelity(q, 1, ket(2, 0)), 1e-12));
  }
}

TEST_CASE("disentangled site leaves a pure remainder", "[qudit][property]") {
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    const ComplexVector rest = oracle::random_state(8, rng);
    const ComplexVector v = Eigen::kroneckerProduct(ket(2, 0), rest).eval();
    const QuditState psi(4, 2, v);
    REQUIRE_THAT(site_fidelity(psi, 0, ket(2, 0)), WithinAbs(1.0, 1e-12));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(partial_trace(psi, {1, 2, 3}).rho);
    REQUIRE_THAT(es.eigenvalues().maxCoeff(), WithinAbs(1.0, 1e-8));
  }
}

TEST_CASE("rectangular mesh layout", "[qudit][clements]") {
  for (int d = 1; d <= 8; ++d) {
    const auto layout = clements_layout(d);
    REQUIRE(layout.size() == static_cast<std::size_t>(d * (d - 1) / 2));
    for (int p : layout)
      REQUIRE((p >= 0 && p + 1 < d));
  }
  // Qubit register: 2^(2n) - 2^n interior phases.
  for (int n = 1; n <= 4; ++n) {
    const int d = 1 << n;
    REQUIRE(clements_phase_count(d) - static_cast<std::size_t>(d) ==
            static_cast<std::size_t>((1 << (2 * n)) - d));
  }
}

TEST_CASE("clements_ansatz identity and arity", "[qudit][clements]") {
  for (int d : {2, 3, 4, 8}) {
    const auto u = clements_ansatz(d, clements_identity_phases(d));
    REQUIRE(max_diff(u.matrix(), ComplexMatrix::Identity(d, d)) < 1e-12);
  }
  REQUIRE_THROWS_AS(clements_ansatz(4, std::vector<double>(5)), ArityError);
}

TEST_CASE("clements_ansatz is unitary for any phases", "[qudit][clements][property]") {
  Rng rng(19);
  std::uniform_real_distribution<double> ph(-2 * kPi, 2 * kPi);
  for (int d : {2, 3, 5, 8}) {
    std::vector<double> phases(clements_phase_count(d));
    for (auto &p : phases)
      p = ph(rng);
    REQUIRE(unitarity_defect(clements_ansatz(d, phases).matrix()) < 1e-10);
  }
}

TEST_CASE("clements_decompose round trip", "[qudit][clements]") {
  Rng rng(23);
  for (int d = 2; d <= 9; ++d)
    for (int t = 0; t < 5; ++t) {
      const auto u = haar_unitary(static_cast<std::size_t>(d), rng);
      const auto phases = clements_decompose(u);
      REQUIRE(phases.size() == clements_phase_count(d));
      REQUIRE(max_diff(clements_ansatz(d, phases).matrix(), u.matrix()) < 1e-8);
    }
}

TEST_CASE("W gate", "[qudit][laughlin]") {
  const int d = 3;
  const auto id = laughlin_w_gate(1.0, 2, 0, d);
  REQUIRE(max_diff(id.matrix(), ComplexMatrix::Identity(9, 9)) < 1e-15);

  const auto w0 = laughlin_w_gate(0.0, 2, 0, d).matrix();
  const int ij = 2 * d + 0;
  const int ji = 0 * d + 2;
  REQUIRE(std::abs(w0(ji, ij) + 1.0) < 1e-15);
  REQUIRE(std::abs(w0(ij, ji) - 1.0) < 1e-15);

  const auto half = laughlin_w_gate(0.5, 0, 1, 2);
  const auto out = apply_unitary(QuditState::product(2, {0, 1}), half, {0, 1});
  ComplexVector expect = ComplexVector::Zero(4);
  expect(1) = 1.0 / std::sqrt(2.0);
  expect(2) = -1.0 / std::sqrt(2.0);
  REQUIRE(max_diff(out.amplitudes(), expect) < 1e-15);

  REQUIRE_THROWS_AS(laughlin_w_gate(1.5, 0, 1, 2), ValidationError);
  REQUIRE_THROWS_AS(laughlin_w_gate(0.5, 1, 1, 2), InvalidDimensionError);
  REQUIRE(unitarity_defect(laughlin_w_gate(0.3, 1, 2, 4).matrix()) < 1e-14);
}

TEST_CASE("W-tilde gate", "[qudit][laughlin]") {
  const int d = 3;
  REQUIRE(max_diff(laughlin_wtilde_gate(0.0, 1, 2, d).matrix(), ComplexMatrix::Identity(9, 9)) <
          1e-15);
  const auto quarter = laughlin_wtilde_gate(kPi / 2, 1, 2, d).matrix();
  REQUIRE(std::abs(quarter(2 * d + 1, 1 * d + 2) - 1.0) < 1e-15);
  for (double th : {0.3, -1.2, 2.5}) {
    const ComplexMatrix prod =
        laughlin_wtilde_gate(th, 0, 2, d).matrix() * laughlin_wtilde_gate(-th, 0, 2, d).matrix();
    REQUIRE(max_diff(prod, ComplexMatrix::Identity(9, 9)) < 1e-14);
  }
  // At cos(theta) = sqrt(p) the tilde gate inverts W.
  const double p = 0.3;
  const ComplexMatrix inv = laughlin_wtilde_gate(std::acos(std::sqrt(p)), 2, 1, d).matrix() *
                            laughlin_w_gate(p, 2, 1, d).matrix();
  REQUIRE(max_diff(inv, ComplexMatrix::Identity(9, 9)) < 1e-14);
}

TEST_CASE("Laughlin permutation sum", "[qudit][laughlin]") {
  const auto l2 = laughlin_permutation_sum(2);
  ComplexVector expect = ComplexVector::Zero(4);
  expect(2) = 1.0 / std::sqrt(2.0);  // |1,0>
  expect(1) = -1.0 / std::sqrt(2.0); // |0,1>
  REQUIRE_THAT(fidelity(l2, QuditState(2, 2, expect)), WithinAbs(1.0, 1e-15));

  const auto l3 = laughlin_permutation_sum(3);
  int nonzero = 0;
  for (Eigen::Index i = 0; i < l3.amplitudes().size(); ++i)
    if (std::abs(l3.amplitudes()(i)) > 1e-12) {
      ++nonzero;
      REQUIRE_THAT(std::abs(l3.amplitudes()(i)), WithinAbs(1.0 / std::sqrt(6.0), 1e-14));
    }
  REQUIRE(nonzero == 6);
}

TEST_CASE("Laughlin states are antisymmetric under site swaps", "[qudit][laughlin]") {
  for (int n = 2; n <= 4; ++n) {
    const auto psi = laughlin_permutation_sum(n);
    const int d = n;
    ComplexMatrix swap = ComplexMatrix::Zero(d * d, d * d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        swap(b * d + a, a * d + b) = 1.0;
    const auto sw = UnitaryMatrix::from_matrix(swap);
    for (int s = 0; s + 1 < n; ++s) {
      const auto swapped = apply_unitary(psi, sw, {s, s + 1});
      REQUIRE(max_diff(swapped.amplitudes(), -psi.amplitudes()) < 1e-14);
    }
    const auto far = apply_unitary(psi, sw, {0, n - 1});
    REQUIRE(max_diff(far.amplitudes(), -psi.amplitudes()) < 1e-14);
  }
}

TEST_CASE("Laughlin circuit matches the permutation sum", "[qudit][laughlin]") {
  for (int n = 2; n <= 4; ++n) {
    REQUIRE(laughlin_circuit(n).size() == static_cast<std::size_t>(n * (n - 1) / 2));
    REQUIRE(fidelity(laughlin_circuit_state(n), laughlin_permutation_sum(n)) >= 1.0 - 1e-10);
    REQUIRE_NOTHROW(laughlin_state(n));
  }
}
