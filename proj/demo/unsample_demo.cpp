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


// Unsamples one Haar-random qubit state and one three-photon linear-optical
// sample, then prints what each learned layer did.

#include <cstdio>

#include "vqu/linalg.hpp"
#include "vqu/mesh.hpp"
#include "vqu/protocols.hpp"

namespace {

void print_layers(const vqu::VquResult &r) {
  for (const auto &l : r.layers)
    std::printf("  %-22s %6zu evaluations  final loss %.3e\n", l.label.c_str(), l.trace.size(),
                l.final_loss);
  std::printf("  fidelity %.8f, %zu evaluations, %zu restarts, %s\n", r.final_fidelity,
              r.total_iterations, r.restarts_used, r.converged ? "converged" : "not converged");
}

} // namespace

int main() {
  vqu::Rng rng(7);

  // U|000> on three qubits.
  const auto u_qubit = vqu::haar_unitary(8, rng);
  vqu::VquConfig cfg;
  cfg.seed = 1;
  std::printf("qubit VQU, n = 3\n");
  const auto q = vqu::qubit_vqu(u_qubit, cfg);
  print_layers(q);

  // V should map U|000> back to |000>: check with the assembled circuit.
  const auto v = vqu::assemble_solution(q);
  const vqu::ComplexVector out = v.matrix() * u_qubit.matrix().col(0);
  std::printf("  |<000|V U|000>|^2 = %.8f\n\n", std::norm(out(0)));

  // Three photons through a 9-mode interferometer.
  const auto u_optical = vqu::haar_unitary(9, rng);
  std::printf("optical VQU, n = 3, m = 9, compressed pipeline\n");
  const auto o = vqu::optical_vqu_compressed(u_optical, 3, cfg);
  print_layers(o);
  // Compression sweeps come first, then one bucket check per layer.
  const std::size_t sweeps = o.diagnostics.size() - 2;
  std::printf("  confinement after each sweep:");
  for (std::size_t i = 0; i < sweeps; ++i)
    std::printf(" %.6f", o.diagnostics[i]);
  std::printf("\n  P(one photon in mode j) after bucket layer j:");
  for (std::size_t i = sweeps; i < o.diagnostics.size(); ++i)
    std::printf(" %.6f", o.diagnostics[i]);
  std::printf("\n");
  return o.converged && q.converged ? 0 : 1;
}
