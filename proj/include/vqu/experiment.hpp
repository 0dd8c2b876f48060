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
 * @file experiment.hpp
 * @brief Seeded Monte Carlo campaigns over the protocols, their JSON-lines
 * record store, scaling fits and CSV/JSON export.
 */
#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "vqu/errors.hpp"
#include "vqu/linalg.hpp"
#include "vqu/optimizer.hpp"
#include "vqu/protocols.hpp"
#include "vqu/qudit.hpp"

namespace vqu {

inline constexpr int kRecordSchemaVersion = 1;

struct LayerSummary {
  std::string label;
  std::size_t iterations = 0;
  double final_loss = 0.0;

  bool operator==(const LayerSummary &) const = default;
};

struct ExperimentRecord {
  int schema_version = kRecordSchemaVersion;
  Protocol protocol = Protocol::QubitVqu;
  int n = 0;
  int m = 0; ///< modes for optical protocols, 0 otherwise
  std::uint64_t seed = 0;
  int trial = 0;
  std::size_t total_iterations = 0;
  std::size_t restarts_used = 0;
  double final_fidelity = 0.0;
  bool converged = false;
  double wall_time_seconds = 0.0;
  std::vector<LayerSummary> layers;
};

inline void to_json(nlohmann::json &j, const LayerSummary &l) {
  j = nlohmann::json{{"label", l.label}, {"iterations", l.iterations}, {"final_loss", l.final_loss}};
}

inline void from_json(const nlohmann::json &j, LayerSummary &l) {
  j.at("label").get_to(l.label);
  j.at("iterations").get_to(l.iterations);
  j.at("final_loss").get_to(l.final_loss);
}

inline void to_json(nlohmann::json &j, const ExperimentRecord &r) {
  j = nlohmann::json{{"schema_version", r.schema_version},
                     {"protocol", to_string(r.protocol)},
                     {"n", r.n},
                     {"m", r.m},
                     {"seed", r.seed},
                     {"trial", r.trial},
                     {"total_iterations", r.total_iterations},
                     {"restarts_used", r.restarts_used},
                     {"final_fidelity", r.final_fidelity},
                     {"converged", r.converged},
                     {"wall_time_seconds", r.wall_time_seconds},
                     {"layers", r.layers}};
}

inline void from_json(const nlohmann::json &j, ExperimentRecord &r) {
  if (!j.contains("schema_version"))
    throw DataError("record has no schema_version");
  j.at("schema_version").get_to(r.schema_version);
  if (r.schema_version != kRecordSchemaVersion)
    throw DataError("unsupported record schema_version " + std::to_string(r.schema_version));
  r.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  j.at("n").get_to(r.n);
  j.at("m").get_to(r.m);
  j.at("seed").get_to(r.seed);
  j.at("trial").get_to(r.trial);
  j.at("total_iterations").get_to(r.total_iterations);
  j.at("restarts_used").get_to(r.restarts_used);
  j.at("final_fidelity").get_to(r.final_fidelity);
  j.at("converged").get_to(r.converged);
  j.at("wall_time_seconds").get_to(r.wall_time_seconds);
  j.at("layers").get_to(r.layers);
}

/// Every field except wall time, serialized: what replay must reproduce.
inline std::string deterministic_fields(const ExperimentRecord &r) {
  nlohmann::json j = r;
  j.erase("wall_time_seconds");
  return j.dump();
}

// ---------------------------------------------------------------------------
// Seeds.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// seed_i = hash(base_seed, protocol, n, trial): FNV-1a over the protocol
/// name mixed with splitmix64.
inline std::uint64_t derive_seed(std::uint64_t base, Protocol protocol, int n, int trial) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : to_string(protocol)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = splitmix64(base ^ h);
  s = splitmix64(s ^ static_cast<std::uint64_t>(n));
  return splitmix64(s ^ static_cast<std::uint64_t>(trial));
}

// ---------------------------------------------------------------------------
// Trials and campaigns.

struct CampaignConfig {
  Protocol protocol = Protocol::QubitVqu;
  std::vector<int> n_values{2};
  int modes = 0; ///< optical modes; 0 means n^2
  int trials = 1;
  std::uint64_t base_seed = 0;
  VquConfig vqu;
  bool allow_large = false; ///< permit n >= 5

  void validate() const {
    if (trials < 1)
      throw ValidationError("trials per n must be >= 1");
    if (n_values.empty())
      throw ValidationError("campaign needs at least one n");
    for (int n : n_values) {
      if (n < 1 || (protocol == Protocol::AnsatzValidation && n < 2))
        throw ValidationError("n = " + std::to_string(n) + " is out of range for " +
                              to_string(protocol));
      if (n >= 5 && !allow_large)
        throw ValidationError(
            "n >= 5 is beyond desk scale; set allow_large (--allow-large) to run it");
      if (protocol == Protocol::AnsatzValidation && n > 6)
        throw ValidationError("ansatz validation supports n <= 6");
      if ((protocol == Protocol::OpticalDirect || protocol == Protocol::OpticalCompressed) &&
          modes_for(n) < n)
        throw ValidationError("need at least n modes");
    }
  }

  [[nodiscard]] int modes_for(int n) const { return modes > 0 ? modes : n * n; }
};

/// One seeded trial. The sample unitary is Haar-random from Rng(seed).
inline ExperimentRecord run_trial(Protocol protocol, int n, int m, std::uint64_t seed, int trial,
                                  VquConfig cfg) {
  cfg.seed = seed;
  cfg.record_points = false;
  const auto start = std::chrono::steady_clock::now();
  Rng rng(seed);
  VquResult res;
  ExperimentRecord rec;
  switch (protocol) {
  case Protocol::QubitVqu:
    res = qubit_vqu(haar_unitary(std::size_t{1} << n, rng), cfg);
    break;
  case Protocol::OpticalDirect:
    res = optical_vqu_direct(haar_unitary(static_cast<std::size_t>(m), rng), n, cfg);
    rec.m = m;
    break;
  case Protocol::OpticalCompressed:
    res = optical_vqu_compressed(haar_unitary(static_cast<std::size_t>(m), rng), n, cfg);
    rec.m = m;
    break;
  case Protocol::AnsatzValidation:
    res = ansatz_validate(laughlin_state(n), cfg);
    break;
  }
  rec.protocol = protocol;
  rec.n = n;
  rec.seed = seed;
  rec.trial = trial;
  rec.total_iterations = res.total_iterations;
  rec.restarts_used = res.restarts_used;
  rec.final_fidelity = res.final_fidelity;
  rec.converged = res.converged;
  for (const auto &l : res.layers)
    rec.layers.push_back({l.label, l.trace.size(), l.final_loss});
  rec.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// Parses a records file. Throws DataError naming the first malformed line.
inline std::vector<ExperimentRecord> read_records(std::istream &is) {
  std::vector<ExperimentRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<ExperimentRecord>());
    } catch (const nlohmann::json::exception &e) {
      throw DataError("malformed record on line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error &e) {
      throw DataError("malformed record on line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<ExperimentRecord> read_records(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is)
    throw DataError("cannot open records file " + path.string());
  return read_records(is);
}

inline void sort_records(std::vector<ExperimentRecord> &records) {
  std::stable_sort(records.begin(), records.end(), [](const auto &a, const auto &b) {
    return std::tie(a.n, a.trial) < std::tie(b.n, b.trial);
  });
}

/// Runs every (n, trial) pair of the campaign that `out_path` does not already
/// hold for this protocol, appending each record as it finishes and flushing.
/// When all trials are present the file is rewritten ordered by (n, trial).
/// Returns the campaign's records in that order.
inline std::vector<ExperimentRecord>
run_campaign(const CampaignConfig &cfg, const std::filesystem::path &out_path,
             const std::function<void(const ExperimentRecord &)> &on_record = {}) {
  cfg.validate();
  std::vector<ExperimentRecord> existing;
  if (std::filesystem::exists(out_path))
    existing = read_records(out_path);

  std::set<std::pair<int, int>> done;
  for (const auto &r : existing)
    if (r.protocol == cfg.protocol)
      done.insert({r.n, r.trial});

  {
    std::ofstream os(out_path, std::ios::app);
    if (!os)
      throw DataError("cannot write records file " + out_path.string());
    for (int n : cfg.n_values) {
      const int m = cfg.modes_for(n);
      for (int t = 0; t < cfg.trials; ++t) {
        if (done.count({n, t}))
          continue;
        const auto seed = derive_seed(cfg.base_seed, cfg.protocol, n, t);
        ExperimentRecord rec = run_trial(cfg.protocol, n, m, seed, t, cfg.vqu);
        os << nlohmann::json(rec).dump() << '\n';
        os.flush();
        if (!os)
          throw DataError("write failed for " + out_path.string());
        if (on_record)
          on_record(rec);
        existing.push_back(std::move(rec));
      }
    }
  }

  sort_records(existing);
  const auto tmp = out_path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os)
      throw DataError("cannot write " + tmp);
    for (const auto &r : existing)
      os << nlohmann::json(r).dump() << '\n';
  }
  std::filesystem::rename(tmp, out_path);

  std::vector<ExperimentRecord> mine;
  for (const auto &r : existing)
    if (r.protocol == cfg.protocol &&
        std::find(cfg.n_values.begin(), cfg.n_values.end(), r.n) != cfg.n_values.end() &&
        r.trial < cfg.trials)
      mine.push_back(r);
  return mine;
}

// ---------------------------------------------------------------------------
// Scaling fits.

struct ModelFit {
  std::string model; ///< linear, quadratic, cubic, exponential
  bool fitted = false;
  std::string note;  ///< why the model was not fitted
  std::vector<double> coefficients;
  double r_squared = 0.0;
  double residual_error = 1.0; ///< 1 - R^2
};

struct ScalingReport {
  std::vector<int> photon_counts;
  std::vector<double> mean_iterations;
  std::vector<double> std_iterations;
  std::vector<std::size_t> samples;
  std::vector<ModelFit> fits;

  [[nodiscard]] const ModelFit &fit(const std::string &model) const {
    for (const auto &f : fits)
      if (f.model == model)
        return f;
    throw ValidationError("no model named " + model);
  }
};

/// a + B exp(c x), the exponential model a + b e^{cx + d} with e^d folded into B.
/// Least squares over (a, B, c) with the optimizer, c seeded by a log-linear fit.
inline ModelFit fit_exponential(const std::vector<double> &x, const std::vector<double> &y) {
  ModelFit f;
  f.model = "exponential";
  if (x.size() < 3) {
    f.note = "needs at least 3 photon counts";
    return f;
  }
  const double scale = *std::max_element(y.begin(), y.end());
  std::vector<double> yn(y.size());
  std::vector<double> logy(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    yn[i] = y[i] / scale;
    logy[i] = std::log(std::max(yn[i], 1e-12));
  }
  const auto seed_fit = polyfit(x, logy, 1);
  const double c0 = std::clamp(seed_fit.coefficients[1], -4.9, 4.9);
  const double b0 = std::clamp(std::exp(seed_fit.coefficients[0]), -99.0, 99.0);

  auto sse = [&x, &yn](const std::vector<double> &p) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = yn[i] - (p[0] + p[1] * std::exp(p[2] * x[i]));
      s += r * r;
    }
    return s;
  };
  OptimizationProblem prob;
  prob.dimension = 3;
  prob.loss = sse;
  prob.initial = {0.0, b0, c0};
  prob.lower = {-100.0, -100.0, -5.0};
  prob.upper = {100.0, 100.0, 5.0};
  prob.budget = 5000;
  prob.target = 0.0;
  prob.rho_begin = 0.1;
  prob.rho_end = 1e-10;
  prob.record_points = false;
  const auto trace = minimize(prob);
  const auto &p = trace.best_point;
  std::vector<double> fitted(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    fitted[i] = scale * (p[0] + p[1] * std::exp(p[2] * x[i]));
  f.fitted = true;
  f.coefficients = {scale * p[0], scale * p[1], p[2]};
  f.r_squared = r_squared(y, fitted);
  f.residual_error = 1.0 - f.r_squared;
  return f;
}

/// Fits mean iterations of converged records against n. Record order does not matter.
inline ScalingReport fit_scaling(const std::vector<ExperimentRecord> &records) {
  std::map<int, std::vector<double>> by_n;
  std::set<int> seen;
  for (const auto &r : records) {
    seen.insert(r.n);
    if (r.converged)
      by_n[r.n].push_back(static_cast<double>(r.total_iterations));
  }
  if (by_n.size() < 2) {
    std::string missing;
    for (int n : seen)
      if (!by_n.count(n))
        missing += (missing.empty() ? "" : ", ") + std::to_string(n);
    throw InsufficientDataError(
        "scaling fit needs >= 2 photon counts with a converged record; have " +
        std::to_string(by_n.size()) +
        (missing.empty() ? std::string() : "; no converged records for n = " + missing));
  }
  ScalingReport rep;
  for (auto &[n, its] : by_n) {
    std::sort(its.begin(), its.end());
    double mean = 0.0;
    for (double v : its)
      mean += v;
    mean /= static_cast<double>(its.size());
    double var = 0.0;
    for (double v : its)
      var += (v - mean) * (v - mean);
    rep.photon_counts.push_back(n);
    rep.mean_iterations.push_back(mean);
    rep.std_iterations.push_back(its.size() > 1 ? std::sqrt(var / static_cast<double>(its.size() - 1))
                                                : 0.0);
    rep.samples.push_back(its.size());
  }
  std::vector<double> x(rep.photon_counts.begin(), rep.photon_counts.end());
  const char *names[] = {"linear", "quadratic", "cubic"};
  for (std::size_t deg = 1; deg <= 3; ++deg) {
    ModelFit f;
    f.model = names[deg - 1];
    if (x.size() < deg + 1) {
      f.note = "needs at least " + std::to_string(deg + 1) + " photon counts, have " +
               std::to_string(x.size());
    } else {
      const auto pf = polyfit(x, rep.mean_iterations, deg);
      f.fitted = true;
      f.coefficients = pf.coefficients;
      f.r_squared = pf.r_squared;
      f.residual_error = pf.residual_error;
    }
    rep.fits.push_back(std::move(f));
  }
  rep.fits.push_back(fit_exponential(x, rep.mean_iterations));
  return rep;
}

inline void to_json(nlohmann::json &j, const ModelFit &f) {
  j = nlohmann::json{{"model", f.model}, {"fitted", f.fitted}};
  if (f.fitted) {
    j["coefficients"] = f.coefficients;
    j["r_squared"] = f.r_squared;
    j["one_minus_r_squared"] = f.residual_error;
  } else {
    j["note"] = f.note;
  }
}

inline void to_json(nlohmann::json &j, const ScalingReport &r) {
  j = nlohmann::json{{"photon_counts", r.photon_counts},
                     {"mean_iterations", r.mean_iterations},
                     {"std_iterations", r.std_iterations},
                     {"samples", r.samples},
                     {"fits", r.fits}};
}

/// Table-style text: one row per model with 1 - R^2.
inline void write_scaling_table(std::ostream &os, const ScalingReport &r) {
  char buf[160];
  os << "n    mean_iterations    std\n";
  for (std::size_t i = 0; i < r.photon_counts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-4d %-18.6g %.6g\n", r.photon_counts[i], r.mean_iterations[i],
                  r.std_iterations[i]);
    os << buf;
  }
  os << "\nmodel        1 - R^2\n";
  for (const auto &f : r.fits) {
    if (f.fitted)
      std::snprintf(buf, sizeof buf, "%-12s %.3e\n", f.model.c_str(), f.residual_error);
    else
      std::snprintf(buf, sizeof buf, "%-12s not fitted (%s)\n", f.model.c_str(), f.note.c_str());
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Export.

inline const char *kCsvHeader =
    "schema_version,protocol,n,m,seed,trial,total_iterations,restarts_used,final_fidelity,"
    "converged,wall_time_seconds,layer_iterations,layer_final_losses";

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One row per record. Layer columns are ';'-separated lists.
inline void export_csv(std::ostream &os, const std::vector<ExperimentRecord> &records) {
  os << kCsvHeader << '\n';
  for (const auto &r : records) {
    std::string its;
    std::string losses;
    for (std::size_t i = 0; i < r.layers.size(); ++i) {
      if (i > 0) {
        its += ';';
        losses += ';';
      }
      its += std::to_string(r.layers[i].iterations);
      losses += format_double(r.layers[i].final_loss);
    }
    os << r.schema_version << ',' << to_string(r.protocol) << ',' << r.n << ',' << r.m << ','
       << r.seed << ',' << r.trial << ',' << r.total_iterations << ',' << r.restarts_used << ','
       << format_double(r.final_fidelity) << ',' << (r.converged ? "true" : "false") << ','
       << format_double(r.wall_time_seconds) << ',' << its << ',' << losses << '\n';
  }
}

inline void export_json(std::ostream &os, const std::vector<ExperimentRecord> &records) {
  os << nlohmann::json(records).dump(2) << '\n';
}

} // namespace vqu
