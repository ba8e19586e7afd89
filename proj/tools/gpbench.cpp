/*
 * Copyright 2026 the gpbench authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpbench/data.hpp"
#include "gpbench/harness.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

gpbench::SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
  if (!j.contains("dataset") || !j.at("dataset").contains("synthetic"))
    throw std::invalid_argument("config: this command needs a dataset.synthetic block");
  const nlohmann::json& s = j.at("dataset").at("synthetic");
  gpbench::SyntheticSpec spec;
  spec.input_dim = s.at("input_dim").get<Eigen::Index>();
  spec.n_train = s.at("n_train").get<Eigen::Index>();
  spec.n_test = s.at("n_test").get<Eigen::Index>();
  if (s.contains("lengthscale")) spec.lengthscale = s.at("lengthscale").get<double>();
  if (s.contains("signal_std")) spec.signal_std = s.at("signal_std").get<double>();
  if (s.contains("noise_variance"))
    spec.noise_variance = s.at("noise_variance").get<double>();
  spec.seed = s.at("seed").get<std::uint64_t>();
  return spec;
}

int summarize_cells(const gpbench::ExperimentReport& report) {
  int failed = 0;
  for (const gpbench::CellResult& cell : report.cells)
    if (cell.failed) ++failed;
  std::cout << "dataset " << report.dataset.name << ": n_train=" << report.dataset.n_train
            << " n_test=" << report.dataset.n_test << " d=" << report.dataset.input_dim
            << "\ncells: " << (report.cells.size() - static_cast<std::size_t>(failed))
            << " ok, " << failed << " failed\n";
  for (const gpbench::CellResult& cell : report.cells)
    if (cell.failed)
      std::cout << "  failed " << gpbench::method_name(cell.method) << " m=" << cell.m
                << " run=" << cell.run << ": " << cell.failure_reason << "\n";
  return failed;
}

int do_gen(const std::string& config_path, const std::string& out_dir) {
  const gpbench::SyntheticSpec spec = synthetic_from_json(load_json(config_path));
  const gpbench::Dataset ds = gpbench::generate_synthetic(spec);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  gpbench::save_csv((out / "train.csv").string(), ds.train_inputs, ds.train_targets);
  gpbench::save_csv((out / "test.csv").string(), ds.test_inputs, ds.test_targets);
  gpbench::write_manifest((out / "manifest.json").string(), ds);
  std::cout << "wrote " << ds.name << ": " << ds.n_train() << " train and "
            << ds.n_test() << " test rows to " << out_dir << "\n";
  return 0;
}

int do_curves(const std::string& report_path, const std::string& out_dir) {
  const gpbench::ExperimentReport report =
      gpbench::report_from_json(load_json(report_path));
  gpbench::emit_results(report, out_dir);
  std::cout << "rebuilt results.csv, report.json, curves.csv in " << out_dir << " from "
            << report.cells.size() << " cells\n";
  return 0;
}

int do_trace(const std::string& config_path, const std::string& out_dir) {
  const nlohmann::json j = load_json(config_path);
  const gpbench::SyntheticSpec spec = synthetic_from_json(j);
  gpbench::TerminationPolicy policy;
  Eigen::Index dense_until = 32;
  Eigen::Index every = 4;
  std::vector<Eigen::Index> reference_m;
  if (j.contains("trace")) {
    const nlohmann::json& t = j.at("trace");
    if (t.contains("rel_tol")) policy.rel_tol = t.at("rel_tol").get<double>();
    if (t.contains("max_iterations"))
      policy.max_iterations = t.at("max_iterations").get<Eigen::Index>();
    if (t.contains("max_seconds") && !t.at("max_seconds").is_null())
      policy.max_seconds = t.at("max_seconds").get<double>();
    if (t.contains("dense_until")) dense_until = t.at("dense_until").get<Eigen::Index>();
    if (t.contains("every")) every = t.at("every").get<Eigen::Index>();
    if (t.contains("reference_m"))
      for (const nlohmann::json& m : t.at("reference_m"))
        reference_m.push_back(m.get<Eigen::Index>());
  }
  const gpbench::TraceRunResult result =
      gpbench::run_trace(spec, policy, dense_until, every, reference_m, out_dir);
  std::cout << "cg finished after " << result.cg.iterations
            << " iterations, rel_residual=" << result.cg.rel_residual << "\n"
            << "wrote trace.csv and sod_reference.csv to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process regression benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string report_path;
  std::string out_dir = "out";
  int jobs = 1;
  std::uint64_t seed = 0;

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset as CSV");
  gen->add_option("--config", config_path, "Experiment config JSON")
      ->required();
  gen->add_option("--out", out_dir, "Output directory");
  CLI::Option* gen_seed = gen->add_option("--seed", seed, "Override the generation seed");

  CLI::App* run = app.add_subcommand("run", "Run the full experiment grid");
  run->add_option("--config", config_path, "Experiment config JSON")
      ->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--jobs", jobs, "Worker processes")->check(CLI::PositiveNumber);
  CLI::Option* run_seed = run->add_option("--seed", seed, "Override base_seed");

  CLI::App* curves = app.add_subcommand("curves", "Rebuild CSV outputs from a report");
  curves->add_option("--report", report_path, "report.json from a previous run")
      ->required();
  curves->add_option("--out", out_dir, "Output directory");

  CLI::App* compare =
      app.add_subcommand("compare", "Run learned and fixed hyperparameter legs");
  compare->add_option("--config", config_path, "Experiment config JSON")
      ->required();
  compare->add_option("--out", out_dir, "Output directory");
  CLI::Option* compare_seed = compare->add_option("--seed", seed, "Override base_seed");

  CLI::App* trace = app.add_subcommand("trace", "Trace one cg solve with error probes");
  trace->add_option("--config", config_path, "Config JSON with a trace block")
      ->required();
  trace->add_option("--out", out_dir, "Output directory");
  CLI::Option* trace_seed = trace->add_option("--seed", seed, "Override the generation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed() || trace->parsed()) {
      // A seed override rewrites the config in memory before use.
      nlohmann::json j = load_json(config_path);
      const bool seeded = gen->parsed() ? static_cast<bool>(*gen_seed)
                                        : static_cast<bool>(*trace_seed);
      if (seeded) {
        if (!j.contains("dataset") || !j.at("dataset").contains("synthetic"))
          throw std::invalid_argument("config: --seed needs a dataset.synthetic block");
        j["dataset"]["synthetic"]["seed"] = seed;
        const std::string patched = out_dir + "/.config_seeded.json";
        std::filesystem::create_directories(out_dir);
        std::ofstream out(patched);
        out << j.dump(2);
        out.close();
        const int code = gen->parsed() ? do_gen(patched, out_dir) : do_trace(patched, out_dir);
        std::filesystem::remove(patched);
        return code;
      }
      return gen->parsed() ? do_gen(config_path, out_dir) : do_trace(config_path, out_dir);
    }
    if (run->parsed() || compare->parsed()) {
      gpbench::ExperimentConfig config =
          gpbench::ExperimentConfig::from_json(load_json(config_path));
      const bool seeded = run->parsed() ? static_cast<bool>(*run_seed)
                                        : static_cast<bool>(*compare_seed);
      if (seeded) config.base_seed = seed;
      if (run->parsed()) {
        const gpbench::ExperimentReport report = gpbench::run_experiment_jobs(config, jobs);
        gpbench::emit_results(report, out_dir);
        const int failed = summarize_cells(report);
        std::cout << "wrote results.csv, report.json, curves.csv to " << out_dir << "\n";
        return failed > 0 ? 2 : 0;
      }
      const gpbench::PairedReport pair = gpbench::compare_fixed_vs_learned(config, out_dir);
      std::cout << "learned leg:\n";
      int failed = summarize_cells(pair.learned);
      std::cout << "fixed leg:\n";
      failed += summarize_cells(pair.fixed);
      std::cout << "wrote learned/, fixed/, deltas.csv to " << out_dir << "\n";
      return failed > 0 ? 2 : 0;
    }
    if (curves->parsed()) return do_curves(report_path, out_dir);
  } catch (const std::exception& err) {
    std::cerr << "gpbench: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
