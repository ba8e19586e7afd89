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

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gpbench/data.hpp"
#include "gpbench/iterative.hpp"
#include "gpbench/local.hpp"
#include "gpbench/optimizer.hpp"
#include "gpbench/selection.hpp"

namespace gpbench {

enum class Method { kExact, kSod, kFitc, kHybrid, kLocal, kCg };
enum class HyperMode { kLearn, kFixed };

std::string method_name(Method method);
Method parse_method(const std::string& name);

// One experiment entry: a method plus its grid and method-specific knobs.
struct MethodSpec {
  Method method{Method::kExact};
  std::vector<Eigen::Index> m;  // empty: built-in grid capped at n/2
  SelectionMethod selector{SelectionMethod::kRandom};  // sod / fitc / hybrid
  LocalMode local_mode{LocalMode::kJoint};             // local
  TerminationPolicy cg_policy;                         // cg
};

// Either a generation recipe or a pair of CSV paths.
struct DatasetRef {
  std::optional<SyntheticSpec> synthetic;
  std::string train_csv;
  std::string test_csv;
  std::string name;
  std::optional<bool> standardize;  // default: files yes, synthetic no

  Dataset resolve() const;
};

/*
 * Versioned experiment description, bijective with its JSON form: the
 * schema field must equal 1. Seeds are shared across methods per run so
 * rows pair up: run r always uses base_seed + r.
 */
struct ExperimentConfig {
  DatasetRef dataset;
  std::vector<MethodSpec> methods;
  HyperMode hyper_mode{HyperMode::kLearn};
  std::optional<Eigen::VectorXd> fixed_theta;  // packed; generative if absent
  bool ard{false};
  int runs{5};
  std::uint64_t base_seed{1};
  OptBudget budget;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct DatasetSummary {
  std::string name;
  Eigen::Index input_dim{0};
  Eigen::Index n_train{0};
  Eigen::Index n_test{0};
  bool standardized{false};
  bool synthetic{false};
};

/*
 * One grid cell: a (method, m, run) execution with its three phase
 * timings measured exclusively around learning, training, and testing.
 * Training time appears both without selection (how fit cost scales)
 * and with it (what a user actually waits for).
 */
struct CellResult {
  Method method{Method::kExact};
  Eigen::Index m{0};  // n for exact and cg
  int run{0};
  std::uint64_t seed{0};
  bool failed{false};
  std::string failure_reason;
  double selection_seconds{0.0};
  double hyper_seconds{0.0};
  double train_seconds{0.0};
  double train_seconds_with_selection{0.0};
  double test_seconds{0.0};
  double test_seconds_per_point{0.0};
  Eigen::Index n_test{0};
  double smse{std::numeric_limits<double>::quiet_NaN()};
  double msll{std::numeric_limits<double>::quiet_NaN()};  // NaN for cg
  Eigen::VectorXd theta0;
  std::vector<Eigen::VectorXd> thetas;  // one entry, or one per leaf
  Eigen::Index evals{0};
  Eigen::Index cg_iterations{0};
  std::string cg_status;
};

struct ExperimentReport {
  nlohmann::json config;  // echo of the resolved configuration
  DatasetSummary dataset;
  std::vector<CellResult> cells;
};

/*
 * Executes the whole grid; a cell that throws is recorded as failed
 * with its reason and never aborts the run. With worker_count > 1 only
 * cells whose flat index falls on worker_index modulo worker_count are
 * executed, which is how process-level parallelism partitions work.
 */
ExperimentReport run_experiment(const ExperimentConfig& config, int worker_index = 0,
                                int worker_count = 1);

// Forks `jobs` workers over the grid and merges their reports; with
// jobs <= 1 this is run_experiment. Result order matches serial runs.
ExperimentReport run_experiment_jobs(const ExperimentConfig& config, int jobs);

// results.csv (scalar columns per cell), report.json (full nested
// report including every theta), curves.csv (per method-and-m means).
void emit_results(const ExperimentReport& report, const std::string& out_dir);

nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);

// Same grid twice with shared seeds, learned vs fixed-at-generative
// hyperparameters, plus per-cell metric deltas (learned minus fixed).
struct PairedReport {
  ExperimentReport learned;
  ExperimentReport fixed;
};
PairedReport compare_fixed_vs_learned(const ExperimentConfig& config,
                                      const std::string& out_dir);

// Residual-trace run: one CG solve against the generative system with
// an error probe per trace point, plus subset-GP reference fits, both
// written as CSV for error-versus-time plots.
struct SodReferencePoint {
  Eigen::Index m{0};
  double train_seconds{0.0};
  double smse{0.0};
};
struct TraceRunResult {
  CgResult cg;
  std::vector<SodReferencePoint> reference;
};
TraceRunResult run_trace(const SyntheticSpec& spec, const TerminationPolicy& policy,
                         Eigen::Index dense_until, Eigen::Index every,
                         const std::vector<Eigen::Index>& reference_m,
                         const std::string& out_dir);

}  // namespace gpbench
