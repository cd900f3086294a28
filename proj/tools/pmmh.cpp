// Copyright 2026 The pmmh Authors
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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmmh/pmmh.hpp"

namespace {

void print_summary(const pmmh::RunSummary& s) {
  std::cout << "experiment " << s.experiment << " kernel " << s.kernel
            << " seed " << s.seed << " sweeps " << s.sweeps << " n " << s.n
            << "\n";
  std::cout << "acceptance " << s.acceptance << "  block draws "
            << s.block_draws << "  max holding " << s.holding.max << "\n";
  for (const auto& [id, p] : s.model_probability) {
    std::cout << "  model " << id << ": " << p << "\n";
  }
  if (s.burn_in) {
    std::cout << "after burn-in " << *s.burn_in << ":\n";
    for (const auto& [id, p] : s.burned_model_probability) {
      std::cout << "  model " << id << ": " << p << "\n";
    }
  }
}

int run_verb(const std::string& config_path,
             const std::optional<std::uint64_t>& seed,
             const std::optional<std::string>& out) {
  const pmmh::ExperimentConfig config = pmmh::load_experiment_config(
      config_path, /*grid_mode=*/false, seed, out, std::nullopt);
  if (config.experiment == "weight-diagnostic") {
    const auto result = pmmh::run_weight_diagnostic(config);
    std::cout << "n,epsilon,estimate,std_error,max_log_gamma\n";
    for (const auto& r : result.reports) {
      std::cout << r.n << "," << r.epsilon << "," << r.estimate << ","
                << r.std_error << "," << r.max_log_gamma << "\n";
    }
    std::cout << "wrote " << config.output_dir << "/tail_curve.csv\n";
    return 0;
  }
  const auto result = pmmh::run_experiment(config);
  print_summary(result.summary);
  std::cout << "wrote " << config.output_dir << "/trace.csv and summary.txt\n";
  return 0;
}

int grid_verb(const std::string& config_path,
              const std::optional<std::uint64_t>& seed,
              const std::optional<std::string>& out,
              const std::optional<std::size_t>& workers) {
  const pmmh::ExperimentConfig config = pmmh::load_experiment_config(
      config_path, /*grid_mode=*/true, seed, out, workers);
  const auto result = pmmh::run_comparison_suite(config);
  std::cout << "n sweeps acceptance\n";
  for (const auto& row : result.rows) {
    std::cout << row.n << " " << row.sweeps << " " << row.summary.acceptance
              << "\n";
  }
  std::cout << "pairwise TV:\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < result.rows.size(); ++j) {
      std::cout << "  n=" << result.rows[i].n << " vs n=" << result.rows[j].n
                << ": " << result.tv[i][j] << "\n";
    }
  }
  std::cout << "wrote " << config.output_dir << "/comparison.csv\n";
  return 0;
}

int check_verb() {
  const auto results = pmmh::run_all_checks();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << " " << r.name << ": "
              << r.detail << "\n";
  }
  std::cout << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all ? 0 : 1;
}

int gen_data_verb(std::uint64_t seed, const std::string& out, int m, int k,
                  const std::vector<double>& truth) {
  pmmh::Vector coefficients;
  if (truth.empty()) {
    coefficients = pmmh::glm_paper_truth();
    if (k != coefficients.size()) {
      coefficients = pmmh::Vector::Zero(k);
      const pmmh::Vector defaults = pmmh::glm_paper_truth();
      for (int j = 0; j < k && j < defaults.size(); ++j) {
        coefficients(j) = defaults(j);
      }
    }
  } else {
    if (static_cast<int>(truth.size()) != k) {
      std::cerr << "gen-data: --truth needs exactly k values\n";
      return 1;
    }
    coefficients = Eigen::Map<const pmmh::Vector>(
        truth.data(), static_cast<Eigen::Index>(truth.size()));
  }
  const pmmh::GlmDataset data =
      pmmh::generate_glm_dataset(seed, m, k, coefficients);
  pmmh::write_glm_dataset_csv(out, data);
  std::cout << "wrote " << out << " (" << m << " rows, " << k
            << " covariates, seed " << seed << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudo-marginal MCMC experiment harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  std::optional<std::size_t> workers_override;

  auto add_common = [&](CLI::App* cmd, bool with_workers) {
    cmd->add_option("--config", config_path, "key=value config file")
        ->required();
    cmd->add_option("--seed", seed_override, "override the config seed");
    cmd->add_option("--out", out_override, "override the output directory");
    if (with_workers) {
      cmd->add_option("--workers", workers_override,
                      "override the worker count");
    }
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one configured chain");
  add_common(run_cmd, false);
  CLI::App* grid_cmd =
      app.add_subcommand("grid", "run a comparison grid of chains");
  add_common(grid_cmd, true);
  app.add_subcommand("check", "run the numerical self checks");

  CLI::App* gen_cmd =
      app.add_subcommand("gen-data", "generate a synthetic logit dataset");
  std::uint64_t gen_seed = 0;
  std::string gen_out = "glm_data.csv";
  int gen_m = 50;
  int gen_k = 4;
  std::vector<double> gen_truth;
  gen_cmd->add_option("--seed", gen_seed, "dataset seed")->required();
  gen_cmd->add_option("--out", gen_out, "output csv path");
  gen_cmd->add_option("--m", gen_m, "number of observations")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--k", gen_k, "number of covariates")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--truth", gen_truth,
                      "comma separated true coefficients")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("run")) {
      return run_verb(config_path, seed_override, out_override);
    }
    if (app.got_subcommand("grid")) {
      return grid_verb(config_path, seed_override, out_override,
                       workers_override);
    }
    if (app.got_subcommand("check")) {
      return check_verb();
    }
    return gen_data_verb(gen_seed, gen_out, gen_m, gen_k, gen_truth);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
