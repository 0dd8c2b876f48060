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

#include "oracles.hpp"
#include "vqu/mesh.hpp"

using namespace vqu;
using Catch::Matchers::WithinAbs;

namespace {

double max_diff(const ComplexMatrix &a, const ComplexMatrix &b) {
  return (a - b).cwiseAbs().maxCoeff();
}

double reck_error(const UnitaryMatrix &u) {
  const auto dec = reck_decompose(u);
  return max_diff(mesh_to_unitary(dec.circuit, dec.output_phases).matrix(), u.matrix());
}

MeshCircuit random_mesh(std::size_t dim, int count, Rng &rng) {
  std::uniform_real_distribution<double> ph(-2 * kPi, 2 * kPi);
  std::uniform_int_distribution<int> mode(1, static_cast<int>(dim) - 1);
  MeshCircuit c{dim, {}};
  for (int i = 0; i < count; ++i)
    c.placements.push_back({1, mode(rng), ph(rng), ph(rng)});
  return c;
}

} // namespace

TEST_CASE("mzi_matrix named states", "[mesh]") {
  const auto bar = mzi_matrix(kBarState.alpha, kBarState.phi).matrix();
  ComplexMatrix expect_bar(2, 2);
  expect_bar << 1, 0, 0, -1;
  REQUIRE(max_diff(bar, expect_bar) < 1e-15);

  const auto cross = mzi_matrix(kCrossState.alpha, kCrossState.phi).matrix();
  ComplexMatrix expect_cross(2, 2);
  expect_cross << 0, 1, 1, 0;
  REQUIRE(max_diff(cross, expect_cross) < 1e-15);
}

TEST_CASE("mzi_matrix matches closed form", "[mesh]") {
  const double a = kPi / 2;
  const double p = kPi / 3;
  const auto t = mzi_matrix(a, p).matrix();
  const std::complex<double> e(std::cos(p), std::sin(p));
  const double s = std::sqrt(0.5);
  REQUIRE(std::abs(t(0, 0) - e * s) < 1e-14);
  REQUIRE(std::abs(t(0, 1) - s) < 1e-14);
  REQUIRE(std::abs(t(1, 0) - e * s) < 1e-14);
  REQUIRE(std::abs(t(1, 1) + s) < 1e-14);
  REQUIRE(unitarity_defect(t) < 1e-14);
}

TEST_CASE("embed places the block", "[mesh]") {
  const auto swap = embed({1, 1, 0.0, 0.0}, 3).matrix();
  ComplexMatrix expect(3, 3);
  expect << 0, 1, 0, 1, 0, 0, 0, 0, 1;
  REQUIRE(max_diff(swap, expect) < 1e-15);

  const auto e = embed({1, 3, 0.4, 1.3}, 4).matrix();
  REQUIRE(max_diff(e.topLeftCorner(2, 2), ComplexMatrix::Identity(2, 2)) < 1e-15);
  REQUIRE(e.topRightCorner(2, 2).cwiseAbs().maxCoeff() < 1e-15);

  REQUIRE_THROWS_AS(embed({1, 4, 0.0, 0.0}, 4), PlacementError);
  REQUIRE_THROWS_AS(embed({1, 0, 0.0, 0.0}, 4), PlacementError);
}

TEST_CASE("disjoint MZIs commute", "[mesh]") {
  const auto a = embed({1, 1, 0.3, 0.9}, 5);
  const auto b = embed({1, 3, 1.7, -0.2}, 5);
  REQUIRE(max_diff((a * b).matrix(), (b * a).matrix()) < 1e-14);
}

TEST_CASE("mesh_to_unitary ordering", "[mesh]") {
  REQUIRE(max_diff(mesh_to_unitary(MeshCircuit{4, {}}).matrix(), ComplexMatrix::Identity(4, 4)) <
          1e-15);
  const MziPlacement p1{1, 2, 0.7, 0.1};
  const MziPlacement p2{1, 3, 2.1, -1.4};
  REQUIRE(max_diff(mesh_to_unitary(MeshCircuit{4, {p1}}).matrix(), embed(p1, 4).matrix()) < 1e-15);
  // First placement acts first: U = M2 * M1.
  const auto u = mesh_to_unitary(MeshCircuit{4, {p1, p2}}).matrix();
  REQUIRE(max_diff(u, embed(p2, 4).matrix() * embed(p1, 4).matrix()) < 1e-14);
}

TEST_CASE("mesh products are unitary for any phases", "[mesh][property]") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t)
    REQUIRE(unitarity_defect(mesh_to_unitary(random_mesh(7, 30, rng)).matrix()) < 1e-10);
}

TEST_CASE("reck_decompose of the identity is all bar states", "[mesh][reck]") {
  const auto dec = reck_decompose(UnitaryMatrix::identity(4));
  REQUIRE(dec.circuit.size() == 6);
  for (const auto &p : dec.circuit.placements)
    REQUIRE_THAT(p.alpha, WithinAbs(kPi, 1e-12));
  REQUIRE(reck_error(UnitaryMatrix::identity(4)) < 1e-12);
}

TEST_CASE("reck_decompose round trip", "[mesh][reck]") {
  Rng rng(99);
  const auto u2 = haar_unitary(2, rng);
  const auto dec2 = reck_decompose(u2);
  REQUIRE(dec2.circuit.size() == 1);
  REQUIRE(dec2.output_phases.size() == 2);
  REQUIRE(reck_error(u2) < 1e-12);

  const auto u9 = haar_unitary(9, rng);
  REQUIRE(reck_decompose(u9).circuit.size() == 36);
  REQUIRE(reck_error(u9) < 1e-9);

  for (std::size_t d = 2; d <= 12; ++d)
    for (int t = 0; t < 5; ++t) {
      const auto u = haar_unitary(d, rng);
      const auto dec = reck_decompose(u);
      REQUIRE(dec.circuit.size() == d * (d - 1) / 2);
      REQUIRE(reck_error(u) < 1e-9);
    }
}

TEST_CASE("reck_decompose handles permutation matrices", "[mesh][reck]") {
  ComplexMatrix p = ComplexMatrix::Zero(4, 4);
  p(1, 0) = 1;
  p(3, 1) = std::complex<double>(0, 1);
  p(0, 2) = -1;
  p(2, 3) = 1;
  REQUIRE(reck_error(UnitaryMatrix::from_matrix(p)) < 1e-12);
}

TEST_CASE("reck_decompose rejects non-unitary input", "[mesh][reck]") {
  ComplexMatrix m = ComplexMatrix::Identity(3, 3);
  m(0, 1) = 0.5;
  REQUIRE_THROWS_AS(reck_decompose(UnitaryMatrix::unchecked(m)), ValidationError);
}

TEST_CASE("diagonal_circuit sizes and arity", "[mesh]") {
  REQUIRE(diagonal_circuit(1, 4, std::vector<MziPhases>(3)).size() == 3);
  REQUIRE(diagonal_circuit(3, 4, std::vector<MziPhases>(1)).size() == 1);
  REQUIRE_THROWS_AS(diagonal_circuit(1, 4, std::vector<MziPhases>(2)), ArityError);

  const auto spread = diagonal_circuit(2, 5, std::vector<MziPhases>(3));
  REQUIRE(spread.placements.front().j == 2);
  REQUIRE(spread.placements.back().j == 4);
  const auto funnel = diagonal_circuit(2, 5, std::vector<MziPhases>(3), DiagonalOrder::Funnel);
  REQUIRE(funnel.placements.front().j == 4);
  REQUIRE(funnel.placements.back().j == 2);
}

TEST_CASE("undoing the first diagonal frees the first mode", "[mesh][reck]") {
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    const auto dec = reck_decompose(haar_unitary(4, rng));
    const auto u = mesh_to_unitary(dec.circuit).matrix();
    std::vector<MziPhases> first;
    for (const auto &p : dec.circuit.placements)
      if (p.k == 1)
        first.push_back(p.phases());
    const auto d1 = mesh_to_unitary(diagonal_circuit(1, 4, first)).matrix();
    const ComplexMatrix rest = d1.adjoint() * u;
    REQUIRE(std::abs(rest(0, 0) - 1.0) < 1e-9);
    REQUIRE(rest.row(0).tail(3).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(rest.col(0).tail(3).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("reck_layout counts", "[mesh]") {
  for (std::size_t d = 1; d <= 9; ++d)
    REQUIRE(reck_layout(d).size() == d * (d - 1) / 2);
  REQUIRE(max_diff(mesh_to_unitary(reck_layout(5)).matrix().cwiseAbs(),
                   ComplexMatrix::Identity(5, 5).cwiseAbs()) < 1e-15);
}

TEST_CASE("MeshCircuit JSON round trip", "[mesh][json]") {
  Rng rng(8);
  const auto c = random_mesh(6, 12, rng);
  const nlohmann::json j = c;
  REQUIRE(j.at("dim") == 6);
  REQUIRE(j.at("placements").size() == 12);
  const auto back = j.get<MeshCircuit>();
  REQUIRE(back.dim == c.dim);
  for (std::size_t i = 0; i < c.size(); ++i) {
    REQUIRE(back.placements[i].j == c.placements[i].j);
    REQUIRE(back.placements[i].alpha == c.placements[i].alpha);
    REQUIRE(back.placements[i].phi == c.placements[i].phi);
  }
  nlohmann::json bad = j;
  bad["placements"][0]["j"] = 6;
  REQUIRE_THROWS_AS(bad.get<MeshCircuit>(), PlacementError);
}
