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
#include <set>
#include <vector>

#include "oracles.hpp"
#include "vqu/fock.hpp"

using namespace vqu;
using Catch::Matchers::WithinAbs;
using boost::multiprecision::cpp_rational;

namespace {

ComplexMatrix hom_splitter() {
  ComplexMatrix bs(2, 2);
  bs << 1, 1, 1, -1;
  return bs / std::sqrt(2.0);
}

FockState random_fock_state(int n, int m, Rng &rng) {
  auto basis = enumerate_basis(n, m);
  return FockState(basis, oracle::random_state(static_cast<int>(basis->size()), rng));
}

} // namespace

TEST_CASE("basis enumeration order and size", "[fock][basis]") {
  const auto b22 = enumerate_basis(2, 2);
  REQUIRE(b22->size() == 3);
  REQUIRE(b22->occupation(0) == Occupation{2, 0});
  REQUIRE(b22->occupation(1) == Occupation{1, 1});
  REQUIRE(b22->occupation(2) == Occupation{0, 2});

  REQUIRE(enumerate_basis(2, 4)->size() == static_cast<std::size_t>(oracle::factorial(5) /
                                                                      (oracle::factorial(2) * oracle::factorial(3))));
  REQUIRE(enumerate_basis(3, 9)->size() == 165);
  REQUIRE(enumerate_basis(0, 3)->size() == 1);
}

TEST_CASE("basis is complete, unique and ranked consistently", "[fock][basis]") {
  for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 1}, {3, 4}, {4, 3}, {2, 9}, {3, 9}}) {
    const auto b = enumerate_basis(n, m);
    std::set<Occupation> seen;
    for (std::size_t i = 0; i < b->size(); ++i) {
      const auto occ = b->occupation(i);
      int total = 0;
      for (int v : occ)
        total += v;
      REQUIRE(total == n);
      REQUIRE(seen.insert(occ).second);
      REQUIRE(b->index_of(occ) == i);
      if (i > 0)
        REQUIRE(b->occupation(i - 1) > occ);
    }
  }
}

TEST_CASE("basis capacity and bad occupations", "[fock][basis]") {
  REQUIRE_THROWS_AS(enumerate_basis(6, 36, 1000), CapacityError);
  REQUIRE_THROWS_AS(enumerate_basis(2, 0), InvalidDimensionError);
  const auto b = enumerate_basis(2, 3);
  REQUIRE_THROWS_AS(b->index_of({1, 1, 1}), ConservationError);
  REQUIRE_THROWS_AS(b->index_of({1, 1}), InvalidDimensionError);
}

TEST_CASE("permanent small cases", "[fock][permanent]") {
  REQUIRE(std::abs(permanent(ComplexMatrix(0, 0)) - 1.0) < 1e-15);
  for (int k = 1; k <= 6; ++k)
    REQUIRE(std::abs(permanent(ComplexMatrix::Identity(k, k)) - 1.0) < 1e-12);
  ComplexMatrix m(2, 2);
  const Complex a(1, 2), b(-0.5, 1), c(3, 0), d(0.2, -0.7);
  m << a, b, c, d;
  REQUIRE(std::abs(permanent(m) - (a * d + b * c)) < 1e-14);
  REQUIRE(std::abs(permanent(ComplexMatrix::Ones(3, 3)) - 6.0) < 1e-12);
  REQUIRE_THROWS_AS(permanent(ComplexMatrix::Ones(2, 3)), ShapeError);
}

TEST_CASE("permanent agrees with the permutation sum", "[fock][permanent]") {
  Rng rng(1234);
  for (int k = 1; k <= 7; ++k)
    for (int t = 0; t < 10; ++t) {
      const auto a = oracle::random_complex_matrix(k, k, rng);
      REQUIRE(std::abs(permanent(a) - oracle::naive_permanent(a)) < 1e-10);
    }
}

TEST_CASE("permanent is linear in each row", "[fock][permanent][property]") {
  Rng rng(77);
  std::uniform_int_distribution<int> size(1, 6);
  for (int t = 0; t < 40; ++t) {
    const int k = size(rng);
    ComplexMatrix a = oracle::random_complex_matrix(k, k, rng);
    const Complex c(0.3 * t - 2.0, 1.1);
    const Complex before = permanent(a);
    a.row(t % k) *= c;
    REQUIRE(std::abs(permanent(a) - c * before) < 1e-9 * (1.0 + std::abs(before)));
  }
}

TEST_CASE("transition amplitudes", "[fock][amplitude]") {
  REQUIRE(std::abs(transition_amplitude(UnitaryMatrix::identity(3), {1, 1, 0}, {1, 1, 0}) - 1.0) <
          1e-15);
  const auto bs = UnitaryMatrix::from_matrix(hom_splitter());
  REQUIRE(std::abs(transition_amplitude(bs, {1, 1}, {1, 1})) < 1e-15);
  REQUIRE_THAT(std::norm(transition_amplitude(bs, {1, 1}, {2, 0})), WithinAbs(0.5, 1e-14));
  REQUIRE_THROWS_AS(transition_amplitude(bs, {1, 1}, {1, 0}), ConservationError);

  const auto expansion = oracle::creation_operator_expansion(hom_splitter(), {1, 1});
  REQUIRE(std::abs(expansion.at({1, 1})) < 1e-15);
  REQUIRE_THAT(std::norm(expansion.at({2, 0})), WithinAbs(0.5, 1e-14));
}

TEST_CASE("evolve matches the creation-operator expansion", "[fock][evolve]") {
  Rng rng(5);
  for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 3}, {2, 2}, {2, 4}, {3, 3}, {3, 4}}) {
    const auto u = haar_unitary(static_cast<std::size_t>(m), rng);
    const auto basis = enumerate_basis(n, m);
    for (std::size_t s = 0; s < basis->size(); ++s) {
      const auto occ = basis->occupation(s);
      const auto out = evolve(u, FockState::basis_state(basis, occ));
      const auto ref = oracle::creation_operator_expansion(u.matrix(), occ);
      for (std::size_t t = 0; t < basis->size(); ++t) {
        const auto it = ref.find(basis->occupation(t));
        const Complex expect = it == ref.end() ? Complex(0.0) : it->second;
        REQUIRE(std::abs(out.amplitudes()(static_cast<Eigen::Index>(t)) - expect) < 1e-10);
      }
    }
  }
}

TEST_CASE("evolve basics", "[fock][evolve]") {
  Rng rng(8);
  const auto psi = random_fock_state(2, 4, rng);
  const auto same = evolve(UnitaryMatrix::identity(4), psi);
  REQUIRE((same.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-14);

  const auto u = haar_unitary(4, rng);
  const auto back = evolve(u.adjoint(), evolve(u, psi));
  REQUIRE((back.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-8);

  // One photon: basis state i is the photon in mode i.
  const auto one = random_fock_state(1, 4, rng);
  const auto out = evolve(u, one);
  const ComplexVector direct = u.matrix() * one.amplitudes();
  REQUIRE((out.amplitudes() - direct).cwiseAbs().maxCoeff() < 1e-12);

  REQUIRE_THROWS_AS(evolve(UnitaryMatrix::identity(3), psi), InvalidDimensionError);
}

TEST_CASE("evolve preserves the norm", "[fock][evolve][property]") {
  Rng rng(21);
  for (auto [n, m] : std::vector<std::pair<int, int>>{{2, 6}, {3, 5}, {4, 4}, {2, 9}}) {
    const auto u = haar_unitary(static_cast<std::size_t>(m), rng);
    const auto psi = random_fock_state(n, m, rng);
    REQUIRE_THAT(evolve(u, psi).amplitudes().norm(), WithinAbs(1.0, 1e-8));
  }
}

TEST_CASE("mode probabilities", "[fock][observables]") {
  const auto ones = FockState::single_photons(2, 2);
  REQUIRE_THAT(prob_exactly_k(ones, 0, 1), WithinAbs(1.0, 1e-15));

  const auto hom = evolve(UnitaryMatrix::from_matrix(hom_splitter()), ones);
  REQUIRE(prob_exactly_k(hom, 0, 1) < 1e-15);
  REQUIRE_THAT(prob_exactly_k(hom, 0, 2), WithinAbs(0.5, 1e-14));

  Rng rng(3);
  const auto psi = random_fock_state(3, 4, rng);
  for (int j = 0; j < 4; ++j) {
    double total = 0.0;
    double prev = 0.0;
    for (int k = 0; k <= 3; ++k)
      total += prob_exactly_k(psi, j, k);
    REQUIRE_THAT(total, WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(prob_up_to_k(psi, j, 3), WithinAbs(1.0 - prob_exactly_k(psi, j, 0), 1e-12));
    REQUIRE_THAT(prob_up_to_k(psi, j, 1), WithinAbs(prob_exactly_k(psi, j, 1), 1e-15));
    for (int k = 1; k <= 3; ++k) {
      REQUIRE(prob_up_to_k(psi, j, k) >= prev);
      prev = prob_up_to_k(psi, j, k);
    }
  }
  REQUIRE_THROWS_AS(prob_exactly_k(psi, 4, 1), InvalidDimensionError);
  REQUIRE_THROWS_AS(prob_up_to_k(psi, 0, 0), InvalidDimensionError);
}

TEST_CASE("mean photon number", "[fock][observables]") {
  const auto ones = FockState::single_photons(3, 3);
  for (int i = 0; i < 3; ++i)
    REQUIRE_THAT(mean_photon_number(ones, i), WithinAbs(1.0, 1e-15));

  Rng rng(10);
  const auto psi = random_fock_state(3, 4, rng);
  double total = 0.0;
  for (int i = 0; i < 4; ++i)
    total += mean_photon_number(psi, i);
  REQUIRE_THAT(total, WithinAbs(3.0, 1e-12));
}

TEST_CASE("mean photon number is one per mode for n photons in n modes", "[fock][observables]") {
  Rng rng(12);
  for (int t = 0; t < 10; ++t) {
    const auto u = haar_unitary(3, rng);
    const auto out = evolve(u, FockState::single_photons(3, 3));
    for (int i = 0; i < 3; ++i)
      REQUIRE_THAT(mean_photon_number(out, i), WithinAbs(1.0, 1e-10));
  }
}

TEST_CASE("scaling identity holds exactly", "[fock][scaling]") {
  REQUIRE(scaling_identity(1).lhs == cpp_rational(1));
  REQUIRE(scaling_identity(2).lhs == cpp_rational(2, 5));
  REQUIRE(scaling_identity(3).lhs == cpp_rational(3, 11));
  for (int n = 1; n <= 20; ++n) {
    const auto s = scaling_identity(n);
    REQUIRE(s.lhs == s.rhs);
    REQUIRE(s.b == exact_binomial(n * n + n - 1, n));
  }
}

TEST_CASE("n-1 photons in n^2-1 modes does not give the identity", "[fock][scaling]") {
  const cpp_rational alt = cpp_rational(1) - cpp_rational(exact_binomial(3, 1), exact_binomial(5, 2));
  REQUIRE(alt == cpp_rational(7, 10));
  REQUIRE(alt != scaling_identity(2).rhs);
}

TEST_CASE("transfer-matrix observables agree with full evolution", "[fock][transfer]") {
  Rng rng(31);
  for (auto [n, m] : std::vector<std::pair<int, int>>{{2, 4}, {3, 5}, {3, 9}}) {
    const auto u = haar_unitary(static_cast<std::size_t>(m), rng);
    const auto psi = FockState::single_photons(n, m);
    const auto out = evolve(u, psi);
    Occupation input(static_cast<std::size_t>(m), 0);
    std::fill_n(input.begin(), n, 1);
    const ComplexMatrix a = transfer_matrix(u.matrix(), input);

    for (int j = 0; j < m; ++j) {
      const auto dist = mode_count_distribution(a, j);
      for (int k = 0; k <= n; ++k)
        REQUIRE_THAT(dist[static_cast<std::size_t>(k)], WithinAbs(prob_exactly_k(out, j, k), 1e-12));
      REQUIRE_THAT(prob_single_photon(a, j), WithinAbs(prob_exactly_k(out, j, 1), 1e-12));
      REQUIRE_THAT(mean_photon_number(a, j), WithinAbs(mean_photon_number(out, j), 1e-12));
    }

    double confined = 0.0;
    const auto &b = out.basis();
    for (std::size_t i = 0; i < b.size(); ++i) {
      bool inside = true;
      for (int j = n; j < m; ++j)
        inside = inside && b.occupancy(i, j) == 0;
      if (inside)
        confined += std::norm(out.amplitudes()(static_cast<Eigen::Index>(i)));
      REQUIRE_THAT(outcome_probability(a, b.occupation(i)),
                   WithinAbs(std::norm(out.amplitudes()(static_cast<Eigen::Index>(i))), 1e-12));
    }
    REQUIRE_THAT(prob_confined(a, n), WithinAbs(confined, 1e-12));
    std::vector<int> first(static_cast<std::size_t>(n));
    std::iota(first.begin(), first.end(), 0);
    REQUIRE_THAT(prob_all_in(a, first), WithinAbs(confined, 1e-12));
  }
}
