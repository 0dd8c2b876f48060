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
 * @file protocols.hpp
 * @brief Layer-by-layer unsampling: qubit circuits, linear-optical
 * interferometers (direct and compress-then-bucket), and ansatz validation
 * on the Laughlin state.
 *
 * Every protocol learns a sequence of layers. Layer j acts only on the
 * sites or modes that later layers have not frozen, so a converged loss stays
 * converged. With per-layer loss eps the final infidelity is at most
 * (number of layers) * eps, which is how the per-layer targets are chosen.
 */
#pragma once

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vqu/errors.hpp"
#include "vqu/fock.hpp"
#include "vqu/linalg.hpp"
#include "vqu/mesh.hpp"
#include "vqu/optimizer.hpp"
#include "vqu/qudit.hpp"

namespace vqu {

enum class Protocol { QubitVqu, OpticalDirect, OpticalCompressed, AnsatzValidation };

inline std::string to_string(Protocol p) {
  switch (p) {
  case Protocol::QubitVqu:
    return "qubit-vqu";
  case Protocol::OpticalDirect:
    return "optical-direct";
  case Protocol::OpticalCompressed:
    return "optical-compressed";
  case Protocol::AnsatzValidation:
    return "ansatz-validation";
  }
  return "unknown";
}

inline Protocol protocol_from_string(const std::string &s) {
  for (Protocol p : {Protocol::QubitVqu, Protocol::OpticalDirect, Protocol::OpticalCompressed,
                     Protocol::AnsatzValidation})
    if (to_string(p) == s)
      return p;
  throw ValidationError("unknown protocol '" + s + "'");
}

/// Optical layer ansatz: a full triangular mesh on the active modes, or one diagonal.
enum class OpticalAnsatz { ReckFull, Diagonal };

enum class LossKind { GlobalOverlap, QubitSite, OpticalSinglePhoton, OpticalBucket, ModeFlux };

struct LayerLoss {
  LossKind kind = LossKind::GlobalOverlap;
  int target_index = 0;
};

struct VquConfig {
  double threshold = 1e-5;       ///< converged iff final fidelity >= 1 - threshold
  std::size_t max_restarts = 10; ///< per layer
  std::size_t budget = 0;        ///< evaluations per optimizer run; 0 picks 200 * dim + 500
  std::uint64_t seed = 0;
  OpticalAnsatz ansatz = OpticalAnsatz::ReckFull;
  bool random_init = false;            ///< start layers at uniform random phases
  std::optional<double> shots;         ///< optical-direct only: Poisson-sampled loss
  std::size_t min_sweeps = 3;          ///< compression sweeps before checking leakage
  std::size_t max_sweeps = 12;
  bool record_points = true;
  double rho_begin = 0.5; ///< initial trust-region radius of each layer run
  double rho_end = 1e-8;  ///< final radius; raise it for sampled losses
  /// Layer runs end early and restart when the best loss has not fallen 1% in
  /// this many evaluations; 0 picks 10 * dim + 200.
  std::size_t stall_window = 0;
  bool minimal_interpolation = false; ///< dim + 2 interpolation points instead of 2 dim + 1

  [[nodiscard]] std::size_t budget_for(std::size_t dim) const {
    return budget > 0 ? budget : 200 * dim + 500;
  }
};

/// One learned layer, in the coordinates of the whole system.
struct LayerSolution {
  enum class Kind { Mesh, Rectangular, LaughlinTrial };
  Kind kind = Kind::Mesh;
  int offset = 0; ///< first site or mode acted on (0-based)
  int extent = 0; ///< number of sites or modes acted on
  MeshCircuit circuit;         ///< Kind::Mesh, already in system coordinates
  std::vector<double> phases;  ///< Kind::Rectangular and Kind::LaughlinTrial
  bool crippled = false;       ///< LaughlinTrial whose angles are ignored
};

struct LayerReport {
  std::string label;
  OptimizationTrace trace;
  double final_loss = 1.0;
};

struct VquResult {
  Protocol protocol = Protocol::QubitVqu;
  int n = 0;
  int m = 0;            ///< modes (optical), local dimension (qudits), 2 (qubits)
  std::vector<LayerReport> layers; ///< compression sweeps first, then unsampling layers
  std::vector<LayerSolution> solution;
  double final_fidelity = 0.0;
  std::size_t total_iterations = 0;
  std::size_t restarts_used = 0;
  bool converged = false;
  /// Protocol-specific checks: P(n_j = 1) after each bucket layer, confinement
  /// after each compression sweep.
  std::vector<double> diagnostics;

  [[nodiscard]] std::size_t unsampling_layers() const { return solution.size(); }
};

namespace detail {

inline void finish_result(VquResult &r, double threshold) {
  r.total_iterations = 0;
  r.restarts_used = 0;
  for (const auto &l : r.layers) {
    r.total_iterations += l.trace.size();
    r.restarts_used += l.trace.restarts_used();
  }
  r.final_fidelity = std::clamp(r.final_fidelity, 0.0, 1.0);
  r.converged = r.final_fidelity >= 1.0 - threshold;
}

inline std::vector<double> uniform_phases(std::size_t count, Rng &rng) {
  std::uniform_real_distribution<double> u(-2.0 * kPi, 2.0 * kPi);
  std::vector<double> x(count);
  for (auto &v : x)
    v = u(rng);
  return x;
}

/// Apply `layout` to rows of `m` with phases taken from `x` (two per MZI).
template <typename Derived>
void apply_layout_rows(const MeshCircuit &layout, const double *x, Eigen::MatrixBase<Derived> &m) {
  for (std::size_t k = 0; k < layout.placements.size(); ++k)
    apply_mzi_rows(m, layout.placements[k].j - 1, x[2 * k], x[2 * k + 1]);
}

inline MeshCircuit with_phases(MeshCircuit layout, const std::vector<double> &x) {
  for (std::size_t k = 0; k < layout.placements.size(); ++k) {
    layout.placements[k].alpha = x[2 * k];
    layout.placements[k].phi = x[2 * k + 1];
  }
  return layout;
}

inline std::vector<double> layout_phases(const MeshCircuit &layout) {
  std::vector<double> x;
  x.reserve(2 * layout.size());
  for (const auto &p : layout.placements) {
    x.push_back(p.alpha);
    x.push_back(p.phi);
  }
  return x;
}

/// Layer mesh on modes [first, first + extent) of an m-mode system.
inline MeshCircuit optical_layer_layout(OpticalAnsatz ansatz, int first, int extent, int m,
                                        MziPhases init) {
  MeshCircuit local;
  if (ansatz == OpticalAnsatz::ReckFull) {
    local = reck_layout(static_cast<std::size_t>(extent), init);
  } else {
    std::vector<MziPhases> ph(static_cast<std::size_t>(extent - 1), init);
    local = diagonal_circuit(1, static_cast<std::size_t>(extent), ph, DiagonalOrder::Funnel);
  }
  return shift_modes(local, first, static_cast<std::size_t>(m));
}

inline OptimizationProblem layer_problem(const VquConfig &cfg, std::size_t dim,
                                         std::vector<double> init, double target, LossFunction f) {
  OptimizationProblem p;
  p.dimension = dim;
  p.loss = std::move(f);
  p.initial = std::move(init);
  p.budget = cfg.budget_for(dim);
  p.target = target;
  p.rho_begin = cfg.rho_begin;
  p.rho_end = cfg.rho_end;
  p.stall_window = cfg.stall_window > 0 ? cfg.stall_window : 10 * dim + 200;
  if (cfg.minimal_interpolation)
    p.interpolation_points = dim + 2;
  p.record_points = cfg.record_points;
  return p;
}

/// Optimize one mesh layer acting on rows of transfer matrix `a`; updates `a`.
/// Returns the learned circuit and its trace.
inline std::pair<MeshCircuit, OptimizationTrace>
optimize_mesh_layer(ComplexMatrix &a, const MeshCircuit &layout, const VquConfig &cfg,
                    double target, Rng &rng, const std::function<double(const ComplexMatrix &)> &loss,
                    std::size_t max_restarts) {
  const std::size_t dim = 2 * layout.size();
  if (dim == 0)
    return {layout, OptimizationTrace{}};
  const ComplexMatrix a0 = a;
  auto f = [&a0, &layout, &loss](const std::vector<double> &x) {
    ComplexMatrix w = a0;
    apply_layout_rows(layout, x.data(), w);
    return loss(w);
  };
  std::vector<double> init =
      cfg.random_init ? uniform_phases(dim, rng) : layout_phases(layout);
  auto problem = layer_problem(cfg, dim, std::move(init), target, f);
  OptimizationTrace trace = minimize_with_restarts(problem, rng, max_restarts);
  MeshCircuit solved = with_phases(layout, trace.best_point);
  apply_layout_rows(layout, trace.best_point.data(), a);
  return {std::move(solved), std::move(trace)};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Losses.

/// 1 - |<psi_in| V |psi_out>|^2
inline double global_loss(const ComplexVector &psi_in, const ComplexVector &psi_out,
                          const UnitaryMatrix &v) {
  if (psi_in.size() != psi_out.size() || static_cast<std::size_t>(psi_in.size()) != v.dim())
    throw InvalidDimensionError("global_loss: state and unitary dimensions differ");
  return std::clamp(1.0 - std::norm(psi_in.dot(v.matrix() * psi_out)), 0.0, 1.0);
}

/// Value of a layer loss on an optical transfer matrix (kinds
/// OpticalSinglePhoton, OpticalBucket, ModeFlux).
inline double evaluate_loss(const LayerLoss &l, const ComplexMatrix &a) {
  switch (l.kind) {
  case LossKind::OpticalSinglePhoton:
    return 1.0 - prob_single_photon(a, l.target_index);
  case LossKind::OpticalBucket: {
    std::vector<int> rest;
    for (int i = 0; i < a.rows(); ++i)
      if (i != l.target_index)
        rest.push_back(i);
    return prob_all_in(a, rest);
  }
  case LossKind::ModeFlux:
    return std::clamp(mean_photon_number(a, l.target_index), 0.0, 1.0);
  default:
    throw ValidationError("loss kind does not apply to optical transfer matrices");
  }
}

/// Value of a qubit-site loss: 1 - P(site in |0>).
inline double evaluate_loss(const LayerLoss &l, const QuditState &psi) {
  if (l.kind != LossKind::QubitSite)
    throw ValidationError("loss kind does not apply to qudit states");
  return 1.0 - site_level_probability(psi, l.target_index, 0);
}

// ---------------------------------------------------------------------------
// Qubit VQU.

/// Unsamples U|0...0> on n = log2(dim U) qubits with a rectangular mesh on the
/// still-active qubits per layer.
inline VquResult qubit_vqu(const UnitaryMatrix &u_sample, const VquConfig &cfg) {
  const std::size_t dim = u_sample.dim();
  int n = 0;
  while ((std::size_t{1} << n) < dim)
    ++n;
  if (dim < 2 || (std::size_t{1} << n) != dim)
    throw InvalidDimensionError("qubit VQU needs a 2^n x 2^n unitary, got dimension " +
                                std::to_string(dim));
  VquResult r;
  r.protocol = Protocol::QubitVqu;
  r.n = n;
  r.m = 2;
  Rng rng(cfg.seed);
  const double target = cfg.threshold / n;

  ComplexVector psi = u_sample.matrix().col(0);
  for (int j = 0; j < n; ++j) {
    const auto active = static_cast<Eigen::Index>(std::size_t{1} << (n - j));
    const auto frozen = static_cast<Eigen::Index>(std::size_t{1} << j);
    // psi(f * active + a) = M(a, f): the active qubits index the rows.
    const ComplexMatrix m0 = Eigen::Map<const ComplexMatrix>(psi.data(), active, frozen);
    const auto layout = clements_layout(static_cast<int>(active));
    const std::size_t pdim = clements_phase_count(static_cast<int>(active));
    auto f = [&m0, &layout, active](const std::vector<double> &x) {
      ComplexMatrix w = m0;
      clements_apply(layout, x.data(), w);
      return std::clamp(1.0 - w.topRows(active / 2).squaredNorm(), 0.0, 1.0);
    };
    std::vector<double> init = cfg.random_init ? detail::uniform_phases(pdim, rng)
                                               : clements_identity_phases(static_cast<int>(active));
    auto problem = detail::layer_problem(cfg, pdim, std::move(init), target, f);
    OptimizationTrace trace = minimize_with_restarts(problem, rng, cfg.max_restarts);

    ComplexMatrix w = m0;
    clements_apply(layout, trace.best_point.data(), w);
    psi = Eigen::Map<const ComplexVector>(w.data(), active * frozen);

    LayerSolution sol;
    sol.kind = LayerSolution::Kind::Rectangular;
    sol.offset = j;
    sol.extent = n - j;
    sol.phases = trace.best_point;
    r.solution.push_back(std::move(sol));
    r.layers.push_back({"layer-" + std::to_string(j + 1), std::move(trace), 0.0});
    r.layers.back().final_loss = r.layers.back().trace.best_loss;
  }
  r.final_fidelity = std::norm(psi(0));
  detail::finish_result(r, cfg.threshold);
  return r;
}

// ---------------------------------------------------------------------------
// Optical VQU.

/// Exact or Poisson-sampled P(exactly one photon in `mode`).
namespace detail {

inline double sampled_single_photon(const ComplexMatrix &a, int mode, double shots, Rng &rng) {
  const auto basis = enumerate_basis(static_cast<int>(a.cols()), static_cast<int>(a.rows()));
  std::vector<double> probs(basis->size());
  for (std::size_t i = 0; i < basis->size(); ++i)
    probs[i] = outcome_probability(a, basis->occupation(i));
  const auto freq = sample_frequencies(probs, shots, rng);
  double p = 0.0;
  for (std::size_t i = 0; i < basis->size(); ++i)
    if (basis->occupancy(i, mode) == 1)
      p += freq[i];
  return p;
}

} // namespace detail

/// Layer j is a mesh on modes [j, m) maximizing P(exactly one photon in mode j).
/// Input |1...1, 0...0> with the photons in the first n modes.
inline VquResult optical_vqu_direct(const UnitaryMatrix &u_sample, int n, const VquConfig &cfg) {
  const auto m = static_cast<int>(u_sample.dim());
  if (n < 1 || n > m)
    throw InvalidDimensionError("need 1 <= n <= m photons");
  VquResult r;
  r.protocol = Protocol::OpticalDirect;
  r.n = n;
  r.m = m;
  Rng rng(cfg.seed);
  Rng noise(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const double target = cfg.threshold / n;

  ComplexMatrix a = u_sample.matrix().leftCols(n);
  for (int j = 0; j < n; ++j) {
    const int extent = m - j;
    if (extent < 2)
      break;
    const MeshCircuit layout =
        detail::optical_layer_layout(cfg.ansatz, j, extent, m, kBarState);
    std::function<double(const ComplexMatrix &)> loss;
    if (cfg.shots)
      loss = [j, &cfg, &noise](const ComplexMatrix &w) {
        return 1.0 - detail::sampled_single_photon(w, j, *cfg.shots, noise);
      };
    else
      loss = [j](const ComplexMatrix &w) { return 1.0 - prob_single_photon(w, j); };
    auto [circuit, trace] =
        detail::optimize_mesh_layer(a, layout, cfg, target, rng, loss, cfg.max_restarts);
    LayerSolution sol;
    sol.kind = LayerSolution::Kind::Mesh;
    sol.offset = j;
    sol.extent = extent;
    sol.circuit = std::move(circuit);
    r.solution.push_back(std::move(sol));
    r.layers.push_back({"layer-" + std::to_string(j + 1), std::move(trace),
                        1.0 - prob_single_photon(a, j)});
  }
  r.final_fidelity = std::norm(permanent(a.topRows(n)));
  detail::finish_result(r, cfg.threshold);
  return r;
}

struct CompressionResult {
  MeshCircuit circuit;      ///< every learned MZI, in application order
  ComplexMatrix transfer;   ///< circuit * U restricted to the input columns
  double confinement = 0.0; ///< P(all photons in the first n modes)
  std::vector<LayerReport> sweeps;
  std::vector<double> confinement_after_sweep;
};

namespace detail {

/// One sweep: n funnels, each pairing modes (k, k+1) from the bottom up and
/// choosing the MZI phases that minimize the mean photon number of mode k+1
/// right after it. Every MZI starts at (0, 0).
inline LayerReport compression_sweep(ComplexMatrix &a, MeshCircuit &circuit, int n,
                                     std::size_t index, bool record_points) {
  const auto m = static_cast<int>(a.rows());
  LayerReport report;
  report.label = "compression-sweep-" + std::to_string(index);
  report.trace.best_loss = std::numeric_limits<double>::infinity();
  for (int funnel = 0; funnel < n; ++funnel) {
    for (int k = m - 2; k >= 0; --k) {
      const Eigen::RowVectorXcd top = a.row(k);
      const Eigen::RowVectorXcd bottom = a.row(k + 1);
      OptimizationProblem p;
      p.dimension = 2;
      p.initial = {kCrossState.alpha, kCrossState.phi};
      p.budget = 400;
      p.target = 1e-15;
      p.record_points = record_points;
      p.loss = [&top, &bottom](const std::vector<double> &x) {
        const double c = std::cos(x[0] / 2.0);
        const double s = std::sin(x[0] / 2.0);
        return (std::polar(c, x[1]) * top - s * bottom).squaredNorm();
      };
      OptimizationTrace t = minimize(p);
      apply_mzi_rows(a, k, t.best_point[0], t.best_point[1]);
      circuit.placements.push_back({k + 1, k + 1, t.best_point[0], t.best_point[1]});
      report.trace.evaluations.insert(report.trace.evaluations.end(),
                                      std::make_move_iterator(t.evaluations.begin()),
                                      std::make_move_iterator(t.evaluations.end()));
      if (t.best_loss < report.trace.best_loss) {
        report.trace.best_loss = t.best_loss;
        report.trace.best_point = t.best_point;
      }
    }
  }
  report.trace.termination = Termination::TrustRegionCollapsed;
  report.final_loss = 1.0 - prob_confined(a, n);
  return report;
}

} // namespace detail

/// Runs exactly `sweeps` compression sweeps on U|1...1, 0...0>.
inline CompressionResult compress_photons(const UnitaryMatrix &u_sample, int n, std::size_t sweeps,
                                          bool record_points = true) {
  const auto m = static_cast<int>(u_sample.dim());
  if (n < 1 || n >= m)
    throw InvalidDimensionError("compression needs 1 <= n < m");
  CompressionResult out;
  out.circuit = MeshCircuit{static_cast<std::size_t>(m), {}};
  out.transfer = u_sample.matrix().leftCols(n);
  for (std::size_t s = 0; s < sweeps; ++s) {
    out.sweeps.push_back(
        detail::compression_sweep(out.transfer, out.circuit, n, s + 1, record_points));
    out.confinement_after_sweep.push_back(prob_confined(out.transfer, n));
  }
  out.confinement = prob_confined(out.transfer, n);
  return out;
}

/// Bucket-detector unsampling of a state whose photons sit (nearly) in the
/// first n modes of transfer matrix `a`. Layer j is a mesh on modes [j, n)
/// maximizing P(at least one photon in mode j); layers j = 0 .. n-2.
/// `per_layer_target` of 0 picks threshold / n.
inline VquResult bucket_unsample(const ComplexMatrix &a_in, int n, const VquConfig &cfg,
                                 double per_layer_target = 0.0) {
  const auto m = static_cast<int>(a_in.rows());
  if (a_in.cols() != n || n < 1 || n > m)
    throw InvalidDimensionError("bucket unsampling needs an m x n transfer matrix");
  VquResult r;
  r.protocol = Protocol::OpticalCompressed;
  r.n = n;
  r.m = m;
  Rng rng(cfg.seed);
  const double target = per_layer_target > 0.0 ? per_layer_target : cfg.threshold / n;
  ComplexMatrix a = a_in;
  for (int j = 0; j + 1 < n; ++j) {
    const MeshCircuit layout =
        detail::optical_layer_layout(cfg.ansatz, j, n - j, m, kCrossState);
    const LayerLoss ll{LossKind::OpticalBucket, j};
    auto [circuit, trace] = detail::optimize_mesh_layer(
        a, layout, cfg, target, rng, [ll](const ComplexMatrix &w) { return evaluate_loss(ll, w); },
        cfg.max_restarts);
    LayerSolution sol;
    sol.kind = LayerSolution::Kind::Mesh;
    sol.offset = j;
    sol.extent = n - j;
    sol.circuit = std::move(circuit);
    r.solution.push_back(std::move(sol));
    r.layers.push_back({"bucket-" + std::to_string(j + 1), std::move(trace), evaluate_loss(ll, a)});
    r.diagnostics.push_back(prob_single_photon(a, j));
  }
  r.final_fidelity = std::norm(permanent(a.topRows(n)));
  detail::finish_result(r, cfg.threshold);
  return r;
}

/// Compression (at least cfg.min_sweeps sweeps, more while the leaked
/// probability exceeds a tenth of the threshold) followed by bucket unsampling
/// with a fraction of the threshold per bucket layer.
inline VquResult optical_vqu_compressed(const UnitaryMatrix &u_sample, int n, const VquConfig &cfg) {
  const auto m = static_cast<int>(u_sample.dim());
  if (n < 1 || n > m)
    throw InvalidDimensionError("need 1 <= n <= m photons");
  if (n == m) {
    VquResult r = bucket_unsample(u_sample.matrix().leftCols(n), n, cfg);
    return r;
  }
  const double leak_target = 0.1 * cfg.threshold;
  CompressionResult comp = compress_photons(u_sample, n, cfg.min_sweeps, cfg.record_points);
  while (1.0 - comp.confinement > leak_target && comp.sweeps.size() < cfg.max_sweeps) {
    comp.sweeps.push_back(detail::compression_sweep(comp.transfer, comp.circuit, n,
                                                    comp.sweeps.size() + 1, cfg.record_points));
    comp.confinement = prob_confined(comp.transfer, n);
    comp.confinement_after_sweep.push_back(comp.confinement);
  }
  // P(n_j = 0) <= eps still allows P(n_j >= 2) of the same order, so each
  // bucket layer gets a quarter of its share of the threshold.
  const double per_layer = 0.25 * cfg.threshold / std::max(1, n - 1);
  VquResult r = bucket_unsample(comp.transfer, n, cfg, per_layer);

  LayerSolution csol;
  csol.kind = LayerSolution::Kind::Mesh;
  csol.offset = 0;
  csol.extent = m;
  csol.circuit = comp.circuit;
  r.solution.insert(r.solution.begin(), std::move(csol));
  r.layers.insert(r.layers.begin(), std::make_move_iterator(comp.sweeps.begin()),
                  std::make_move_iterator(comp.sweeps.end()));
  r.diagnostics.insert(r.diagnostics.begin(), comp.confinement_after_sweep.begin(),
                       comp.confinement_after_sweep.end());
  detail::finish_result(r, cfg.threshold);
  return r;
}

/// Direct or compressed optical VQU.
inline VquResult optical_vqu(const UnitaryMatrix &u_sample, int n, const VquConfig &cfg,
                             bool compressed) {
  return compressed ? optical_vqu_compressed(u_sample, n, cfg) : optical_vqu_direct(u_sample, n, cfg);
}

// ---------------------------------------------------------------------------
// Ansatz validation on the Laughlin state.

namespace detail {

/// Gates of trial layer `first`, in application order: the walk of the
/// highest remaining level back to site `first`, reversed from the generating
/// circuit. The other gates of the reversed (n-first)-site circuit cannot reach
/// site `first`; they are exactly the gates of the following layers.
inline std::vector<LaughlinGate> trial_layer_gates(int n, int first) {
  const int r = n - first;
  std::vector<LaughlinGate> out;
  const auto gates = laughlin_circuit(r);
  for (auto it = gates.rbegin(); it != gates.rend(); ++it)
    if (it->top == r - 1)
      out.push_back({first + it->site, it->top, it->p});
  return out;
}

inline QuditState apply_trial_layer(const QuditState &psi, int first,
                                    const std::vector<double> &theta, bool crippled) {
  const auto gates = trial_layer_gates(psi.n_sites(), first);
  QuditState out = psi;
  for (std::size_t g = 0; g < gates.size(); ++g) {
    const double angle = crippled ? 0.0 : theta[g];
    out = apply_unitary(out, laughlin_trial_gate(gates[g].top, angle, psi.local_dim()),
                        {gates[g].site, gates[g].site + 1});
  }
  return out;
}

} // namespace detail

/// Number of trial angles of the layer acting on `sites` sites.
inline std::size_t laughlin_trial_parameters(int sites) {
  return static_cast<std::size_t>(sites - 1);
}

/// Disentangles site j into level n-1-j for j = 0 .. n-2 using the W-tilde
/// trial ansatz. With `crippled` every gate angle is pinned at zero.
inline VquResult ansatz_validate(const QuditState &system_state, const VquConfig &cfg,
                                 bool crippled = false) {
  const int n = system_state.n_sites();
  const int d = system_state.local_dim();
  if (n < 2 || d < n)
    throw InvalidDimensionError("ansatz validation needs n >= 2 sites with local dimension >= n");
  VquResult r;
  r.protocol = Protocol::AnsatzValidation;
  r.n = n;
  r.m = d;
  Rng rng(cfg.seed);
  const double target = cfg.threshold / std::max(1, n - 1);
  QuditState psi = system_state;
  for (int j = 0; j + 1 < n; ++j) {
    const std::size_t dim = laughlin_trial_parameters(n - j);
    auto f = [&psi, j, n, crippled](const std::vector<double> &x) {
      return 1.0 - site_level_probability(detail::apply_trial_layer(psi, j, x, crippled), j,
                                          n - 1 - j);
    };
    std::vector<double> init = cfg.random_init ? detail::uniform_phases(dim, rng)
                                               : std::vector<double>(dim, kPi / 4.0);
    auto problem = detail::layer_problem(cfg, dim, std::move(init), target, f);
    OptimizationTrace trace = minimize_with_restarts(problem, rng, cfg.max_restarts);
    psi = detail::apply_trial_layer(psi, j, trace.best_point, crippled);

    LayerSolution sol;
    sol.kind = LayerSolution::Kind::LaughlinTrial;
    sol.offset = j;
    sol.extent = n - j;
    sol.phases = trace.best_point;
    sol.crippled = crippled;
    r.solution.push_back(std::move(sol));
    r.layers.push_back({"layer-" + std::to_string(j + 1), std::move(trace),
                        1.0 - site_level_probability(psi, j, n - 1 - j)});
  }
  std::vector<int> levels(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s)
    levels[static_cast<std::size_t>(s)] = n - 1 - s;
  r.final_fidelity = fidelity(psi, QuditState::product(d, levels));
  detail::finish_result(r, cfg.threshold);
  return r;
}

// ---------------------------------------------------------------------------
// Solution assembly.

/// The learned unitary V_sol: each layer padded with identity on the frozen
/// part, multiplied in protocol order (first layer acts first).
inline UnitaryMatrix assemble_solution(const VquResult &r) {
  switch (r.protocol) {
  case Protocol::QubitVqu: {
    const Eigen::Index dim = Eigen::Index{1} << r.n;
    ComplexMatrix v = ComplexMatrix::Identity(dim, dim);
    for (const auto &s : r.solution) {
      if (s.kind != LayerSolution::Kind::Rectangular || s.offset + s.extent != r.n)
        throw ShapeError("qubit layer does not cover the trailing qubits");
      const Eigen::Index active = Eigen::Index{1} << s.extent;
      const ComplexMatrix layer = clements_ansatz(static_cast<int>(active), s.phases).matrix();
      // I (frozen, more significant) x layer: block diagonal.
      ComplexMatrix padded = ComplexMatrix::Zero(dim, dim);
      for (Eigen::Index b = 0; b < dim / active; ++b)
        padded.block(b * active, b * active, active, active) = layer;
      v = padded * v;
    }
    return UnitaryMatrix::unchecked(std::move(v));
  }
  case Protocol::OpticalDirect:
  case Protocol::OpticalCompressed: {
    MeshCircuit all{static_cast<std::size_t>(r.m), {}};
    for (const auto &s : r.solution) {
      if (s.kind != LayerSolution::Kind::Mesh || s.circuit.dim != all.dim)
        throw ShapeError("optical layer is not a mesh on the system modes");
      all = compose(all, s.circuit);
    }
    return mesh_to_unitary(all);
  }
  case Protocol::AnsatzValidation: {
    const Eigen::Index dim =
        static_cast<Eigen::Index>(int_pow(static_cast<std::size_t>(r.m), static_cast<std::size_t>(r.n)));
    ComplexMatrix v(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
      ComplexVector e = ComplexVector::Zero(dim);
      e(c) = 1.0;
      QuditState col(r.n, r.m, std::move(e));
      for (const auto &s : r.solution) {
        if (s.kind != LayerSolution::Kind::LaughlinTrial)
          throw ShapeError("ansatz-validation layer has the wrong kind");
        col = detail::apply_trial_layer(col, s.offset, s.phases, s.crippled);
      }
      v.col(c) = col.amplitudes();
    }
    return UnitaryMatrix::unchecked(std::move(v));
  }
  }
  throw ShapeError("unknown protocol");
}

// ---------------------------------------------------------------------------
// JSON.

inline void to_json(nlohmann::json &j, const LayerSolution &s) {
  static const char *kinds[] = {"mesh", "rectangular", "laughlin-trial"};
  j = nlohmann::json{{"kind", kinds[static_cast<int>(s.kind)]},
                     {"offset", s.offset},
                     {"extent", s.extent}};
  if (s.kind == LayerSolution::Kind::Mesh)
    j["circuit"] = s.circuit;
  else
    j["phases"] = s.phases;
  if (s.crippled)
    j["crippled"] = true;
}

inline void to_json(nlohmann::json &j, const LayerReport &l) {
  j = nlohmann::json{{"label", l.label},
                     {"iterations", l.trace.size()},
                     {"restarts", l.trace.restarts_used()},
                     {"final_loss", l.final_loss},
                     {"trace", l.trace}};
}

inline void to_json(nlohmann::json &j, const VquResult &r) {
  j = nlohmann::json{{"protocol", to_string(r.protocol)},
                     {"n", r.n},
                     {"m", r.m},
                     {"final_fidelity", r.final_fidelity},
                     {"total_iterations", r.total_iterations},
                     {"restarts_used", r.restarts_used},
                     {"converged", r.converged},
                     {"layers", r.layers},
                     {"solution", r.solution},
                     {"diagnostics", r.diagnostics}};
}

} // namespace vqu
