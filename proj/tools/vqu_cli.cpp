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


// vqu: run seeded unsampling campaigns, fit their scaling, export records and
// run the acceptance suite.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 acceptance failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "acceptance/criteria.hpp"
#include "vqu/experiment.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNotConverged = 3 };

struct RunArgs {
  std::string protocol = "qubit-vqu";
  std::string pipeline = "compressed";
  std::vector<int> n{2};
  int modes = 0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out = "records.jsonl";
  double threshold = 1e-5;
  std::size_t max_restarts = 10;
  std::string ansatz = "reck-full";
  std::string shots = "exact";
  bool allow_large = false;
};

vqu::CampaignConfig campaign_from(const RunArgs &a) {
  vqu::CampaignConfig c;
  if (a.protocol == "optical")
    c.protocol = a.pipeline == "direct" ? vqu::Protocol::OpticalDirect
                                        : vqu::Protocol::OpticalCompressed;
  else
    c.protocol = vqu::protocol_from_string(a.protocol);
  c.n_values = a.n;
  c.modes = a.modes;
  c.trials = a.trials;
  c.base_seed = a.seed;
  c.allow_large = a.allow_large;
  c.vqu.threshold = a.threshold;
  c.vqu.max_restarts = a.max_restarts;
  c.vqu.ansatz =
      a.ansatz == "diagonal" ? vqu::OpticalAnsatz::Diagonal : vqu::OpticalAnsatz::ReckFull;
  if (a.shots != "exact") {
    if (c.protocol != vqu::Protocol::OpticalDirect)
      throw vqu::ValidationError("--shots applies to the direct optical pipeline only");
    std::size_t used = 0;
    const long shots = std::stol(a.shots, &used);
    if (used != a.shots.size() || shots < 1)
      throw vqu::ValidationError("--shots takes a positive integer or 'exact'");
    c.vqu.shots = static_cast<double>(shots);
    c.vqu.random_init = true;
    c.vqu.rho_begin = 1.0;
    c.vqu.rho_end = 0.1;
  }
  return c;
}

int run(const RunArgs &a) {
  const auto cfg = campaign_from(a);
  cfg.validate();
  for (int n : cfg.n_values)
    if (n >= 5)
      std::cerr << "warning: n = " << n << " can take hours and a lot of memory\n";
  std::size_t converged = 0;
  const auto recs = vqu::run_campaign(cfg, a.out, [](const vqu::ExperimentRecord &r) {
    std::cerr << "n = " << r.n << " trial " << r.trial << ": F = " << r.final_fidelity << ", "
              << r.total_iterations << " evaluations" << (r.converged ? "" : ", not converged")
              << '\n';
  });
  for (const auto &r : recs)
    converged += r.converged;
  std::cout << recs.size() << " records in " << a.out << ", " << converged << " converged\n";
  return kOk;
}

int fit(const std::string &in, const std::string &protocol, const std::string &json_out) {
  auto recs = vqu::read_records(std::filesystem::path(in));
  if (!protocol.empty()) {
    const auto p = vqu::protocol_from_string(protocol);
    std::erase_if(recs, [p](const vqu::ExperimentRecord &r) { return r.protocol != p; });
  } else {
    for (const auto &r : recs)
      if (r.protocol != recs.front().protocol)
        throw vqu::ValidationError("records mix " + to_string(recs.front().protocol) + " and " +
                                   to_string(r.protocol) + "; choose one with --protocol");
  }
  const auto rep = vqu::fit_scaling(recs);
  vqu::write_scaling_table(std::cout, rep);
  if (!json_out.empty()) {
    std::ofstream os(json_out);
    if (!os)
      throw vqu::DataError("cannot write " + json_out);
    os << nlohmann::json(rep).dump(2) << '\n';
  }
  return kOk;
}

int export_records(const std::string &in, const std::string &format, const std::string &out) {
  const auto recs = vqu::read_records(std::filesystem::path(in));
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file)
      throw vqu::DataError("cannot write " + out);
  }
  std::ostream &os = out.empty() ? std::cout : file;
  if (format == "csv")
    vqu::export_csv(os, recs);
  else
    vqu::export_json(os, recs);
  return kOk;
}

int verify(const std::string &workdir, std::uint64_t seed) {
  vqu::acceptance::Options opt;
  if (!workdir.empty())
    opt.workdir = workdir;
  opt.seed = seed;
  opt.progress = [](const std::string &s) { std::cerr << s << '\n'; };
  const auto outcomes = vqu::acceptance::run_all(opt, [](const vqu::acceptance::Outcome &o) {
    std::cout << vqu::acceptance::format_line(o) << std::endl;
  });
  return vqu::acceptance::all_required_pass(outcomes) ? kOk : kNotConverged;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Variational unsampling campaigns over qubit and linear-optical protocols"};
  app.require_subcommand(1);

  RunArgs ra;
  auto *run_cmd = app.add_subcommand("run", "run a seeded campaign and append its records");
  run_cmd->add_option("--protocol", ra.protocol, "protocol")
      ->check(CLI::IsMember({"qubit-vqu", "optical", "optical-direct", "optical-compressed",
                             "ansatz-validation"}))
      ->capture_default_str();
  run_cmd->add_option("--n", ra.n, "photon or qubit counts, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  run_cmd->add_option("--modes", ra.modes, "optical modes (default n^2)");
  run_cmd->add_option("--trials", ra.trials, "trials per n")->capture_default_str();
  run_cmd->add_option("--seed", ra.seed, "base seed")->capture_default_str();
  run_cmd->add_option("--out", ra.out, "records file (JSON lines)")->capture_default_str();
  run_cmd->add_option("--threshold", ra.threshold, "target infidelity")->capture_default_str();
  run_cmd->add_option("--max-restarts", ra.max_restarts, "restarts per layer")
      ->capture_default_str();
  run_cmd->add_option("--ansatz", ra.ansatz, "optical layer ansatz")
      ->check(CLI::IsMember({"reck-full", "diagonal"}))
      ->capture_default_str();
  run_cmd->add_option("--pipeline", ra.pipeline, "optical pipeline for --protocol optical")
      ->check(CLI::IsMember({"direct", "compressed"}))
      ->capture_default_str();
  run_cmd->add_option("--shots", ra.shots, "events per loss evaluation, or 'exact'")
      ->capture_default_str();
  run_cmd->add_flag("--allow-large", ra.allow_large, "allow n >= 5");

  std::string fit_in;
  std::string fit_protocol;
  std::string fit_json;
  auto *fit_cmd = app.add_subcommand("fit", "fit mean iterations against n");
  fit_cmd->add_option("--in", fit_in, "records file")->required();
  fit_cmd->add_option("--protocol", fit_protocol, "only records of this protocol");
  fit_cmd->add_option("--json", fit_json, "also write the report as JSON");

  std::string ex_in;
  std::string ex_format = "csv";
  std::string ex_out;
  auto *export_cmd = app.add_subcommand("export", "export records as CSV or JSON");
  export_cmd->add_option("--in", ex_in, "records file")->required();
  export_cmd->add_option("--format", ex_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  export_cmd->add_option("--out", ex_out, "output file (default stdout)");

  std::string verify_dir;
  std::uint64_t verify_seed = 2026;
  auto *verify_cmd = app.add_subcommand("verify", "run the acceptance suite");
  verify_cmd->add_option("--out", verify_dir, "working directory for campaign records");
  verify_cmd->add_option("--seed", verify_seed, "base seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (run_cmd->parsed())
      return run(ra);
    if (fit_cmd->parsed())
      return fit(fit_in, fit_protocol, fit_json);
    if (export_cmd->parsed())
      return export_records(ex_in, ex_format, ex_out);
    return verify(verify_dir, verify_seed);
  } catch (const vqu::ValidationError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const vqu::InvalidDimensionError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const vqu::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
