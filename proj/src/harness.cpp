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

#include "gpbench/harness.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "gpbench/fitc.hpp"
#include "gpbench/gpr_exact.hpp"
#include "gpbench/kernel.hpp"
#include "gpbench/metrics.hpp"
#include "gpbench/sod.hpp"

namespace gpbench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string cg_status_name(CgStatus status) {
  switch (status) {
    case CgStatus::kConverged: return "converged";
    case CgStatus::kMaxIterations: return "max_iterations";
    case CgStatus::kTimeBudget: return "time_budget";
    case CgStatus::kDiverged: return "diverged";
  }
  return "unknown";
}

SubsetChoice choose_subset(const Eigen::MatrixXd& X, Eigen::Index m,
                           SelectionMethod selector, std::uint64_t seed) {
  if (selector == SelectionMethod::kFpc) return select_fpc(X, m, seed).centres;
  return select_random(X.rows(), m, seed);
}

// Built-in grids, capped at half the training set so every entry leaves
// a meaningful remainder to approximate over.
std::vector<Eigen::Index> default_m_grid(Method method, Eigen::Index n) {
  std::vector<Eigen::Index> full;
  const Eigen::Index lo = method == Method::kFitc ? 8 : 32;
  const Eigen::Index hi = method == Method::kFitc ? 512 : 4096;
  for (Eigen::Index m = lo; m <= hi; m *= 2) full.push_back(m);
  std::vector<Eigen::Index> grid;
  for (Eigen::Index m : full)
    if (2 * m <= n) grid.push_back(m);
  if (grid.empty()) grid.push_back(std::max<Eigen::Index>(1, n / 2));
  return grid;
}

std::vector<Eigen::Index> grid_for(const MethodSpec& spec, Eigen::Index n) {
  if (spec.method == Method::kExact || spec.method == Method::kCg) return {n};
  if (!spec.m.empty()) return spec.m;
  return default_m_grid(spec.method, n);
}

Eigen::Index total_cells(const ExperimentConfig& config, Eigen::Index n) {
  Eigen::Index total = 0;
  for (const MethodSpec& spec : config.methods)
    total += static_cast<Eigen::Index>(grid_for(spec, n).size()) * config.runs;
  return total;
}

void validate_config(const ExperimentConfig& config, const Dataset& ds) {
  if (config.runs < 1) throw std::invalid_argument("config: runs must be at least 1");
  if (config.methods.empty()) throw std::invalid_argument("config: no methods given");
  if (config.budget.max_evals < 0)
    throw std::invalid_argument("config: optimizer max_evals must be nonnegative");
  const Eigen::Index n = ds.n_train();
  for (const MethodSpec& spec : config.methods) {
    if ((spec.method == Method::kExact || spec.method == Method::kCg) && !spec.m.empty())
      throw std::invalid_argument("config: m does not apply to " +
                                  method_name(spec.method));
    for (Eigen::Index m : spec.m) {
      if (m < 1 || m > n) {
        std::ostringstream msg;
        msg << "config: m = " << m << " outside [1, " << n << "] for "
            << method_name(spec.method);
        throw std::invalid_argument(msg.str());
      }
    }
    if (spec.method == Method::kCg && config.hyper_mode == HyperMode::kLearn)
      throw std::invalid_argument(
          "config: cg has no likelihood gradient here and runs only with "
          "fixed hyperparameters");
  }
  if (config.hyper_mode == HyperMode::kFixed && !config.fixed_theta) {
    if (!ds.synthetic)
      throw std::invalid_argument(
          "config: fixed mode without fixed_theta needs a synthetic dataset");
    if (ds.standardization)
      throw std::invalid_argument(
          "config: generative hyperparameters are undefined after "
          "standardization; give fixed_theta explicitly");
  }
  if (config.fixed_theta) {
    const Eigen::Index expected = config.ard ? ds.input_dim() + 2 : 3;
    if (config.fixed_theta->size() != expected) {
      std::ostringstream msg;
      msg << "config: fixed_theta has " << config.fixed_theta->size()
          << " entries, expected " << expected;
      throw std::invalid_argument(msg.str());
    }
  }
}

Hyperparameters resolve_fixed_theta(const ExperimentConfig& config, const Dataset& ds) {
  if (config.fixed_theta)
    return Hyperparameters::unpack(*config.fixed_theta, config.ard);
  Hyperparameters hp = ds.synthetic->generative_hp();
  if (config.ard)
    hp = Hyperparameters::ard_uniform(ds.input_dim(), hp.log_lengthscales[0],
                                      hp.log_signal_std, hp.log_noise_std);
  return hp;
}

DatasetSummary summarize(const Dataset& ds) {
  DatasetSummary s;
  s.name = ds.name;
  s.input_dim = ds.input_dim();
  s.n_train = ds.n_train();
  s.n_test = ds.n_test();
  s.standardized = ds.standardization.has_value();
  s.synthetic = ds.synthetic.has_value();
  return s;
}

void finish_metrics(CellResult& cell, const PredictiveDistribution& pred,
                    const Dataset& ds, bool with_msll) {
  const TrivialPredictor trivial = TrivialPredictor::from_targets(ds.train_targets);
  cell.smse = smse(pred.mean, ds.test_targets, trivial);
  if (with_msll)
    cell.msll = msll(pred.mean, pred.observation_variance, ds.test_targets, trivial);
}

// Wraps a packed-gradient likelihood as the optimizer's objective.
Objective packed_objective(std::function<LogmlResult(const Hyperparameters&)> logml,
                           bool ard) {
  return [logml = std::move(logml), ard](const Eigen::VectorXd& theta) {
    LogmlResult r = logml(Hyperparameters::unpack(theta, ard));
    return std::make_pair(r.value, r.grad);
  };
}

CellResult execute_cell(const Dataset& ds, const ExperimentConfig& config,
                        const MethodSpec& spec, Eigen::Index m, int run,
                        const Hyperparameters& hp0,
                        const std::optional<Hyperparameters>& fixed_hp) {
  CellResult cell;
  cell.method = spec.method;
  cell.m = m;
  cell.run = run;
  cell.seed = config.base_seed + static_cast<std::uint64_t>(run);
  cell.n_test = ds.n_test();
  const bool learn = config.hyper_mode == HyperMode::kLearn;
  cell.theta0 = learn ? hp0.pack() : fixed_hp->pack();
  try {
    const Eigen::MatrixXd& X = ds.train_inputs;
    const Eigen::VectorXd& y = ds.train_targets;
    PredictiveDistribution pred;
    bool with_msll = true;
    switch (spec.method) {
      case Method::kExact: {
        Hyperparameters theta = learn ? hp0 : *fixed_hp;
        if (learn) {
          auto t0 = Clock::now();
          OptResult opt = maximize_objective(
              packed_objective([&](const Hyperparameters& hp) { return exact_logml(X, y, hp); },
                               config.ard),
              hp0.pack(), config.budget);
          cell.hyper_seconds = seconds_since(t0);
          cell.evals = opt.evals;
          theta = Hyperparameters::unpack(opt.theta, config.ard);
        }
        cell.thetas = {theta.pack()};
        auto t1 = Clock::now();
        ExactModel model = exact_train(X, y, theta);
        cell.train_seconds = seconds_since(t1);
        auto t2 = Clock::now();
        pred = exact_predict(model, ds.test_inputs);
        cell.test_seconds = seconds_since(t2);
        break;
      }
      case Method::kSod:
      case Method::kFitc: {
        auto ts = Clock::now();
        SubsetChoice subset = choose_subset(X, m, spec.selector, cell.seed);
        cell.selection_seconds = seconds_since(ts);
        Hyperparameters theta = learn ? hp0 : *fixed_hp;
        if (learn) {
          const bool is_sod = spec.method == Method::kSod;
          auto t0 = Clock::now();
          OptResult opt = maximize_objective(
              packed_objective(
                  [&, is_sod](const Hyperparameters& hp) {
                    return is_sod ? sod_logml(X, y, subset, hp)
                                  : fitc_logml(X, y, subset, hp);
                  },
                  config.ard),
              hp0.pack(), config.budget);
          cell.hyper_seconds = seconds_since(t0);
          cell.evals = opt.evals;
          theta = Hyperparameters::unpack(opt.theta, config.ard);
        }
        cell.thetas = {theta.pack()};
        if (spec.method == Method::kSod) {
          auto t1 = Clock::now();
          SodModel model = sod_train_on(X, y, subset, theta);
          cell.train_seconds = seconds_since(t1);
          auto t2 = Clock::now();
          pred = sod_predict(model, ds.test_inputs);
          cell.test_seconds = seconds_since(t2);
        } else {
          auto t1 = Clock::now();
          FitcModel model = fitc_train_on(X, y, subset, theta);
          cell.train_seconds = seconds_since(t1);
          auto t2 = Clock::now();
          pred = fitc_predict(model, ds.test_inputs);
          cell.test_seconds = seconds_since(t2);
        }
        break;
      }
      case Method::kHybrid: {
        if (learn) {
          HybridResult hybrid =
              hybrid_train(X, y, m, spec.selector, cell.seed, hp0, config.budget);
          cell.selection_seconds = hybrid.selection_seconds;
          cell.hyper_seconds = hybrid.hyper_seconds;
          cell.train_seconds = hybrid.fit_seconds;
          cell.evals = hybrid.evals;
          cell.thetas = {hybrid.theta.pack()};
          auto t2 = Clock::now();
          pred = fitc_predict(hybrid.model, ds.test_inputs);
          cell.test_seconds = seconds_since(t2);
        } else {
          auto ts = Clock::now();
          SubsetChoice subset = choose_subset(X, m, spec.selector, cell.seed);
          cell.selection_seconds = seconds_since(ts);
          cell.thetas = {fixed_hp->pack()};
          auto t1 = Clock::now();
          FitcModel model = fitc_train_on(X, y, subset, *fixed_hp);
          cell.train_seconds = seconds_since(t1);
          auto t2 = Clock::now();
          pred = fitc_predict(model, ds.test_inputs);
          cell.test_seconds = seconds_since(t2);
        }
        break;
      }
      case Method::kLocal: {
        auto ts = Clock::now();
        RpcTree tree = build_rpc(X, m, cell.seed);
        cell.selection_seconds = seconds_since(ts);
        const Eigen::Index n_leaves = static_cast<Eigen::Index>(tree.leaves().size());
        std::vector<Hyperparameters> leaf_hp;
        if (!learn) {
          leaf_hp = {*fixed_hp};
          cell.thetas = {fixed_hp->pack()};
        } else if (spec.local_mode == LocalMode::kJoint) {
          auto t0 = Clock::now();
          OptResult opt = maximize_objective(
              packed_objective(
                  [&](const Hyperparameters& hp) { return local_logml_joint(X, y, tree, hp); },
                  config.ard),
              hp0.pack(), config.budget);
          cell.hyper_seconds = seconds_since(t0);
          cell.evals = opt.evals;
          leaf_hp = {Hyperparameters::unpack(opt.theta, config.ard)};
          cell.thetas = {opt.theta};
        } else {
          auto t0 = Clock::now();
          leaf_hp.reserve(n_leaves);
          for (const std::vector<Eigen::Index>& leaf : tree.leaves()) {
            Eigen::MatrixXd Xl = gather_rows(X, leaf);
            Eigen::VectorXd yl = gather(y, leaf);
            OptResult opt = maximize_objective(
                packed_objective(
                    [&](const Hyperparameters& hp) { return exact_logml(Xl, yl, hp); },
                    config.ard),
                hp0.pack(), config.budget);
            cell.evals += opt.evals;
            leaf_hp.push_back(Hyperparameters::unpack(opt.theta, config.ard));
            cell.thetas.push_back(opt.theta);
          }
          cell.hyper_seconds = seconds_since(t0);
        }
        auto t1 = Clock::now();
        LocalModel model = local_train_on(X, y, tree, leaf_hp);
        cell.train_seconds = seconds_since(t1);
        auto t2 = Clock::now();
        pred = local_predict(model, ds.test_inputs);
        cell.test_seconds = seconds_since(t2);
        break;
      }
      case Method::kCg: {
        cell.thetas = {fixed_hp->pack()};
        auto t1 = Clock::now();
        DenseKernelMvm op(X, *fixed_hp);
        CgResult r = cg_solve(op, y, spec.cg_policy);
        cell.train_seconds = seconds_since(t1);
        cell.cg_iterations = r.iterations;
        cell.cg_status = cg_status_name(r.status);
        auto t2 = Clock::now();
        pred.mean = mean_from_alpha(X, ds.test_inputs, *fixed_hp, r.solution);
        cell.test_seconds = seconds_since(t2);
        with_msll = false;  // no variance comes out of the linear solve
        break;
      }
    }
    cell.train_seconds_with_selection = cell.selection_seconds + cell.train_seconds;
    cell.test_seconds_per_point =
        cell.n_test > 0 ? cell.test_seconds / static_cast<double>(cell.n_test) : 0.0;
    finish_metrics(cell, pred, ds, with_msll);
  } catch (const std::exception& err) {
    cell.failed = true;
    cell.failure_reason = err.what();
  }
  return cell;
}

ExperimentReport run_experiment_on(const Dataset& ds, const ExperimentConfig& config,
                                   int worker_index, int worker_count) {
  if (worker_count < 1 || worker_index < 0 || worker_index >= worker_count)
    throw std::invalid_argument("run_experiment: bad worker partition");
  validate_config(config, ds);
  std::optional<Hyperparameters> fixed_hp;
  if (config.hyper_mode == HyperMode::kFixed) fixed_hp = resolve_fixed_theta(config, ds);
  const Hyperparameters hp0 =
      default_initial_hyperparameters(ds.train_targets, ds.input_dim(), config.ard);
  ExperimentReport report;
  report.config = config.to_json();
  report.dataset = summarize(ds);
  Eigen::Index flat = 0;
  for (const MethodSpec& spec : config.methods) {
    for (Eigen::Index m : grid_for(spec, ds.n_train())) {
      for (int run = 0; run < config.runs; ++run, ++flat) {
        if (flat % worker_count != worker_index) continue;
        report.cells.push_back(execute_cell(ds, config, spec, m, run, hp0, fixed_hp));
      }
    }
  }
  return report;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// JSON text has no NaN; absent and null both read back as quiet NaN.
double json_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null())
    return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::kExact: return "exact";
    case Method::kSod: return "sod";
    case Method::kFitc: return "fitc";
    case Method::kHybrid: return "hybrid";
    case Method::kLocal: return "local";
    case Method::kCg: return "cg";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "exact") return Method::kExact;
  if (name == "sod") return Method::kSod;
  if (name == "fitc") return Method::kFitc;
  if (name == "hybrid") return Method::kHybrid;
  if (name == "local") return Method::kLocal;
  if (name == "cg") return Method::kCg;
  throw std::invalid_argument("unknown method: " + name);
}

Dataset DatasetRef::resolve() const {
  const bool has_files = !train_csv.empty() || !test_csv.empty();
  if (synthetic.has_value() == has_files)
    throw std::invalid_argument(
        "dataset: give either a synthetic block or train_csv and test_csv");
  Dataset ds;
  if (synthetic) {
    ds = generate_synthetic(*synthetic);
  } else {
    if (train_csv.empty() || test_csv.empty())
      throw std::invalid_argument("dataset: both train_csv and test_csv are required");
    ds = load_csv(train_csv, test_csv, name);
  }
  if (!name.empty()) ds.name = name;
  // Files carry arbitrary units, synthetic data is already on the
  // kernel's scale, so standardization defaults differ.
  const bool wants_standardize = standardize.value_or(!synthetic.has_value());
  if (wants_standardize) ds = gpbench::standardize(ds);
  return ds;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.contains("schema") || !j.at("schema").is_number_integer() ||
      j.at("schema").get<int>() != 1)
    throw std::invalid_argument("config: schema must be the integer 1");
  ExperimentConfig config;
  const nlohmann::json& d = j.at("dataset");
  if (d.contains("synthetic")) {
    const nlohmann::json& s = d.at("synthetic");
    SyntheticSpec spec;
    spec.input_dim = s.at("input_dim").get<Eigen::Index>();
    spec.n_train = s.at("n_train").get<Eigen::Index>();
    spec.n_test = s.at("n_test").get<Eigen::Index>();
    if (s.contains("lengthscale")) spec.lengthscale = s.at("lengthscale").get<double>();
    if (s.contains("signal_std")) spec.signal_std = s.at("signal_std").get<double>();
    if (s.contains("noise_variance"))
      spec.noise_variance = s.at("noise_variance").get<double>();
    spec.seed = s.at("seed").get<std::uint64_t>();
    config.dataset.synthetic = spec;
  }
  if (d.contains("train_csv")) config.dataset.train_csv = d.at("train_csv").get<std::string>();
  if (d.contains("test_csv")) config.dataset.test_csv = d.at("test_csv").get<std::string>();
  if (d.contains("name")) config.dataset.name = d.at("name").get<std::string>();
  if (d.contains("standardize")) config.dataset.standardize = d.at("standardize").get<bool>();
  for (const nlohmann::json& mj : j.at("methods")) {
    MethodSpec spec;
    spec.method = parse_method(mj.at("method").get<std::string>());
    if (mj.contains("m"))
      for (const nlohmann::json& mv : mj.at("m"))
        spec.m.push_back(mv.get<Eigen::Index>());
    if (mj.contains("selector")) {
      if (spec.method == Method::kLocal || spec.method == Method::kExact ||
          spec.method == Method::kCg)
        throw std::invalid_argument("config: selector does not apply to " +
                                    method_name(spec.method));
      const std::string sel = mj.at("selector").get<std::string>();
      if (sel == "random") spec.selector = SelectionMethod::kRandom;
      else if (sel == "fpc") spec.selector = SelectionMethod::kFpc;
      else throw std::invalid_argument("config: unknown selector: " + sel);
    }
    if (mj.contains("local_mode")) {
      if (spec.method != Method::kLocal)
        throw std::invalid_argument("config: local_mode applies only to local");
      const std::string mode = mj.at("local_mode").get<std::string>();
      if (mode == "joint") spec.local_mode = LocalMode::kJoint;
      else if (mode == "separate") spec.local_mode = LocalMode::kSeparate;
      else throw std::invalid_argument("config: unknown local_mode: " + mode);
    }
    if (mj.contains("rel_tol")) spec.cg_policy.rel_tol = mj.at("rel_tol").get<double>();
    if (mj.contains("max_iterations"))
      spec.cg_policy.max_iterations = mj.at("max_iterations").get<Eigen::Index>();
    if (mj.contains("max_seconds") && !mj.at("max_seconds").is_null())
      spec.cg_policy.max_seconds = mj.at("max_seconds").get<double>();
    config.methods.push_back(std::move(spec));
  }
  const std::string mode = j.at("hyper_mode").get<std::string>();
  if (mode == "learn") config.hyper_mode = HyperMode::kLearn;
  else if (mode == "fixed") config.hyper_mode = HyperMode::kFixed;
  else throw std::invalid_argument("config: unknown hyper_mode: " + mode);
  if (j.contains("fixed_theta") && !j.at("fixed_theta").is_null())
    config.fixed_theta = from_std(j.at("fixed_theta").get<std::vector<double>>());
  if (j.contains("ard")) config.ard = j.at("ard").get<bool>();
  if (j.contains("runs")) config.runs = j.at("runs").get<int>();
  if (j.contains("base_seed")) config.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("optimizer")) {
    const nlohmann::json& o = j.at("optimizer");
    if (o.contains("max_evals")) config.budget.max_evals = o.at("max_evals").get<int>();
    if (o.contains("grad_tol")) config.budget.grad_tol = o.at("grad_tol").get<double>();
    if (o.contains("rel_improvement_tol"))
      config.budget.rel_improvement_tol = o.at("rel_improvement_tol").get<double>();
  }
  return config;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  nlohmann::json d = nlohmann::json::object();
  if (dataset.synthetic) {
    const SyntheticSpec& s = *dataset.synthetic;
    d["synthetic"] = {{"input_dim", s.input_dim},   {"n_train", s.n_train},
                      {"n_test", s.n_test},         {"lengthscale", s.lengthscale},
                      {"signal_std", s.signal_std}, {"noise_variance", s.noise_variance},
                      {"seed", s.seed}};
  }
  if (!dataset.train_csv.empty()) d["train_csv"] = dataset.train_csv;
  if (!dataset.test_csv.empty()) d["test_csv"] = dataset.test_csv;
  if (!dataset.name.empty()) d["name"] = dataset.name;
  if (dataset.standardize) d["standardize"] = *dataset.standardize;
  j["dataset"] = std::move(d);
  j["methods"] = nlohmann::json::array();
  for (const MethodSpec& spec : methods) {
    nlohmann::json mj;
    mj["method"] = method_name(spec.method);
    if (!spec.m.empty()) mj["m"] = spec.m;
    if (spec.method == Method::kSod || spec.method == Method::kFitc ||
        spec.method == Method::kHybrid)
      mj["selector"] = spec.selector == SelectionMethod::kFpc ? "fpc" : "random";
    if (spec.method == Method::kLocal)
      mj["local_mode"] = spec.local_mode == LocalMode::kSeparate ? "separate" : "joint";
    if (spec.method == Method::kCg) {
      mj["rel_tol"] = spec.cg_policy.rel_tol;
      mj["max_iterations"] = spec.cg_policy.max_iterations;
      if (std::isfinite(spec.cg_policy.max_seconds))
        mj["max_seconds"] = spec.cg_policy.max_seconds;
    }
    j["methods"].push_back(std::move(mj));
  }
  j["hyper_mode"] = hyper_mode == HyperMode::kFixed ? "fixed" : "learn";
  if (fixed_theta) j["fixed_theta"] = to_std(*fixed_theta);
  j["ard"] = ard;
  j["runs"] = runs;
  j["base_seed"] = base_seed;
  j["optimizer"] = {{"max_evals", budget.max_evals},
                    {"grad_tol", budget.grad_tol},
                    {"rel_improvement_tol", budget.rel_improvement_tol}};
  return j;
}

ExperimentReport run_experiment(const ExperimentConfig& config, int worker_index,
                                int worker_count) {
  Dataset ds = config.dataset.resolve();
  return run_experiment_on(ds, config, worker_index, worker_count);
}

ExperimentReport run_experiment_jobs(const ExperimentConfig& config, int jobs) {
  Dataset ds = config.dataset.resolve();
  validate_config(config, ds);
  const Eigen::Index total = total_cells(config, ds.n_train());
  const int workers =
      static_cast<int>(std::min<Eigen::Index>(std::max(1, jobs), std::max<Eigen::Index>(1, total)));
  if (workers == 1) return run_experiment_on(ds, config, 0, 1);

  namespace fs = std::filesystem;
  std::vector<fs::path> parts;
  std::vector<pid_t> pids;
  for (int w = 0; w < workers; ++w) {
    fs::path part = fs::temp_directory_path() /
                    ("gpbench-" + std::to_string(::getpid()) + "-part" +
                     std::to_string(w) + ".json");
    pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error("run_experiment_jobs: fork failed");
    if (pid == 0) {
      // Child: the dataset is inherited, so only its grid slice runs here.
      int code = 0;
      try {
        ExperimentReport slice = run_experiment_on(ds, config, w, workers);
        std::ofstream out(part);
        out << report_to_json(slice).dump();
        out.flush();
        if (!out) code = 1;
      } catch (...) {
        code = 1;
      }
      ::_exit(code);
    }
    pids.push_back(pid);
    parts.push_back(std::move(part));
  }
  bool all_ok = true;
  for (pid_t pid : pids) {
    int status = 0;
    if (::waitpid(pid, &status, 0) != pid || !WIFEXITED(status) ||
        WEXITSTATUS(status) != 0)
      all_ok = false;
  }
  std::vector<ExperimentReport> slices;
  if (all_ok) {
    for (const fs::path& part : parts) {
      std::ifstream in(part);
      nlohmann::json j;
      in >> j;
      if (!in) {
        all_ok = false;
        break;
      }
      slices.push_back(report_from_json(j));
    }
  }
  for (const fs::path& part : parts) {
    std::error_code ec;
    fs::remove(part, ec);
  }
  if (!all_ok) throw std::runtime_error("run_experiment_jobs: a worker failed");

  // Worker w executed flat cells w, w + workers, ... in order, so the
  // serial order is recovered by round-robin interleaving.
  ExperimentReport merged;
  merged.config = slices[0].config;
  merged.dataset = slices[0].dataset;
  merged.cells.reserve(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) {
    ExperimentReport& slice = slices[static_cast<std::size_t>(i % workers)];
    const std::size_t k = static_cast<std::size_t>(i / workers);
    if (k >= slice.cells.size())
      throw std::runtime_error("run_experiment_jobs: worker report is short");
    merged.cells.push_back(std::move(slice.cells[k]));
  }
  return merged;
}

nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["schema"] = 1;
  j["config"] = report.config;
  j["dataset"] = {{"name", report.dataset.name},
                  {"input_dim", report.dataset.input_dim},
                  {"n_train", report.dataset.n_train},
                  {"n_test", report.dataset.n_test},
                  {"standardized", report.dataset.standardized},
                  {"synthetic", report.dataset.synthetic}};
  j["cells"] = nlohmann::json::array();
  for (const CellResult& cell : report.cells) {
    nlohmann::json c;
    c["method"] = method_name(cell.method);
    c["m"] = cell.m;
    c["run"] = cell.run;
    c["seed"] = cell.seed;
    c["failed"] = cell.failed;
    c["failure_reason"] = cell.failure_reason;
    c["selection_seconds"] = cell.selection_seconds;
    c["hyper_seconds"] = cell.hyper_seconds;
    c["train_seconds"] = cell.train_seconds;
    c["train_seconds_with_selection"] = cell.train_seconds_with_selection;
    c["test_seconds"] = cell.test_seconds;
    c["test_seconds_per_point"] = cell.test_seconds_per_point;
    c["n_test"] = cell.n_test;
    c["smse"] = cell.smse;
    c["msll"] = cell.msll;
    c["theta0"] = to_std(cell.theta0);
    c["thetas"] = nlohmann::json::array();
    for (const Eigen::VectorXd& theta : cell.thetas) c["thetas"].push_back(to_std(theta));
    c["evals"] = cell.evals;
    c["cg_iterations"] = cell.cg_iterations;
    c["cg_status"] = cell.cg_status;
    j["cells"].push_back(std::move(c));
  }
  return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  if (!j.contains("schema") || j.at("schema").get<int>() != 1)
    throw std::invalid_argument("report: schema must be the integer 1");
  ExperimentReport report;
  report.config = j.at("config");
  const nlohmann::json& d = j.at("dataset");
  report.dataset.name = d.at("name").get<std::string>();
  report.dataset.input_dim = d.at("input_dim").get<Eigen::Index>();
  report.dataset.n_train = d.at("n_train").get<Eigen::Index>();
  report.dataset.n_test = d.at("n_test").get<Eigen::Index>();
  report.dataset.standardized = d.at("standardized").get<bool>();
  report.dataset.synthetic = d.at("synthetic").get<bool>();
  for (const nlohmann::json& c : j.at("cells")) {
    CellResult cell;
    cell.method = parse_method(c.at("method").get<std::string>());
    cell.m = c.at("m").get<Eigen::Index>();
    cell.run = c.at("run").get<int>();
    cell.seed = c.at("seed").get<std::uint64_t>();
    cell.failed = c.at("failed").get<bool>();
    cell.failure_reason = c.at("failure_reason").get<std::string>();
    cell.selection_seconds = json_number(c, "selection_seconds");
    cell.hyper_seconds = json_number(c, "hyper_seconds");
    cell.train_seconds = json_number(c, "train_seconds");
    cell.train_seconds_with_selection = json_number(c, "train_seconds_with_selection");
    cell.test_seconds = json_number(c, "test_seconds");
    cell.test_seconds_per_point = json_number(c, "test_seconds_per_point");
    cell.n_test = c.at("n_test").get<Eigen::Index>();
    cell.smse = json_number(c, "smse");
    cell.msll = json_number(c, "msll");
    cell.theta0 = from_std(c.at("theta0").get<std::vector<double>>());
    for (const nlohmann::json& theta : c.at("thetas"))
      cell.thetas.push_back(from_std(theta.get<std::vector<double>>()));
    cell.evals = c.at("evals").get<Eigen::Index>();
    cell.cg_iterations = c.at("cg_iterations").get<Eigen::Index>();
    cell.cg_status = c.at("cg_status").get<std::string>();
    report.cells.push_back(std::move(cell));
  }
  return report;
}

void emit_results(const ExperimentReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::ofstream csv(fs::path(out_dir) / "results.csv");
  csv << "dataset,method,m,run,seed,failed,failure_reason,selection_seconds,"
         "hyper_seconds,train_seconds,train_seconds_with_selection,test_seconds,"
         "test_seconds_per_point,n_test,smse,msll,evals,cg_iterations,cg_status\n";
  for (const CellResult& cell : report.cells) {
    csv << csv_field(report.dataset.name) << ',' << method_name(cell.method) << ','
        << cell.m << ',' << cell.run << ',' << cell.seed << ',' << (cell.failed ? 1 : 0)
        << ',' << csv_field(cell.failure_reason) << ','
        << format_double(cell.selection_seconds) << ','
        << format_double(cell.hyper_seconds) << ',' << format_double(cell.train_seconds)
        << ',' << format_double(cell.train_seconds_with_selection) << ','
        << format_double(cell.test_seconds) << ','
        << format_double(cell.test_seconds_per_point) << ',' << cell.n_test << ','
        << format_double(cell.smse) << ',' << format_double(cell.msll) << ','
        << cell.evals << ',' << cell.cg_iterations << ',' << cell.cg_status << '\n';
  }
  csv.flush();
  if (!csv) throw std::runtime_error("emit_results: cannot write results.csv");

  std::ofstream json_out(fs::path(out_dir) / "report.json");
  json_out << report_to_json(report).dump(2) << '\n';
  json_out.flush();
  if (!json_out) throw std::runtime_error("emit_results: cannot write report.json");

  // Per (method, m) means over completed runs; msll averages only the
  // cells that define it.
  struct Bucket {
    std::string method;
    Eigen::Index m{0};
    Eigen::Index cells{0};
    Eigen::Index failed{0};
    double smse_sum{0.0};
    Eigen::Index smse_count{0};
    double msll_sum{0.0};
    Eigen::Index msll_count{0};
    double selection_sum{0.0};
    double hyper_sum{0.0};
    double train_sum{0.0};
    double train_sel_sum{0.0};
    double test_pp_sum{0.0};
    Eigen::Index ok{0};
  };
  std::vector<Bucket> buckets;
  for (const CellResult& cell : report.cells) {
    const std::string name = method_name(cell.method);
    Bucket* bucket = nullptr;
    for (Bucket& b : buckets)
      if (b.method == name && b.m == cell.m) bucket = &b;
    if (!bucket) {
      buckets.push_back(Bucket{});
      bucket = &buckets.back();
      bucket->method = name;
      bucket->m = cell.m;
    }
    ++bucket->cells;
    if (cell.failed) {
      ++bucket->failed;
      continue;
    }
    ++bucket->ok;
    bucket->selection_sum += cell.selection_seconds;
    bucket->hyper_sum += cell.hyper_seconds;
    bucket->train_sum += cell.train_seconds;
    bucket->train_sel_sum += cell.train_seconds_with_selection;
    bucket->test_pp_sum += cell.test_seconds_per_point;
    if (std::isfinite(cell.smse)) {
      bucket->smse_sum += cell.smse;
      ++bucket->smse_count;
    }
    if (std::isfinite(cell.msll)) {
      bucket->msll_sum += cell.msll;
      ++bucket->msll_count;
    }
  }
  std::ofstream curves(fs::path(out_dir) / "curves.csv");
  curves << "method,m,cells,failed,mean_smse,mean_msll,mean_selection_seconds,"
            "mean_hyper_seconds,mean_train_seconds,mean_train_seconds_with_selection,"
            "mean_test_seconds_per_point\n";
  for (const Bucket& b : buckets) {
    auto mean = [](double sum, Eigen::Index count) {
      return count > 0 ? sum / static_cast<double>(count)
                       : std::numeric_limits<double>::quiet_NaN();
    };
    curves << b.method << ',' << b.m << ',' << b.cells << ',' << b.failed << ','
           << format_double(mean(b.smse_sum, b.smse_count)) << ','
           << format_double(mean(b.msll_sum, b.msll_count)) << ','
           << format_double(mean(b.selection_sum, b.ok)) << ','
           << format_double(mean(b.hyper_sum, b.ok)) << ','
           << format_double(mean(b.train_sum, b.ok)) << ','
           << format_double(mean(b.train_sel_sum, b.ok)) << ','
           << format_double(mean(b.test_pp_sum, b.ok)) << '\n';
  }
  curves.flush();
  if (!curves) throw std::runtime_error("emit_results: cannot write curves.csv");
}

PairedReport compare_fixed_vs_learned(const ExperimentConfig& config,
                                      const std::string& out_dir) {
  if (!config.dataset.synthetic && !config.fixed_theta)
    throw std::invalid_argument(
        "compare_fixed_vs_learned: the fixed leg needs a synthetic dataset or "
        "an explicit fixed_theta");
  ExperimentConfig learn_config = config;
  learn_config.hyper_mode = HyperMode::kLearn;
  ExperimentConfig fixed_config = config;
  fixed_config.hyper_mode = HyperMode::kFixed;

  Dataset ds = config.dataset.resolve();
  PairedReport pair;
  pair.learned = run_experiment_on(ds, learn_config, 0, 1);
  pair.fixed = run_experiment_on(ds, fixed_config, 0, 1);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  emit_results(pair.learned, (fs::path(out_dir) / "learned").string());
  emit_results(pair.fixed, (fs::path(out_dir) / "fixed").string());

  if (pair.learned.cells.size() != pair.fixed.cells.size())
    throw std::runtime_error("compare_fixed_vs_learned: grid mismatch between legs");
  std::ofstream deltas(fs::path(out_dir) / "deltas.csv");
  deltas << "method,m,run,seed,smse_learned,smse_fixed,smse_delta,msll_learned,"
            "msll_fixed,msll_delta\n";
  for (std::size_t i = 0; i < pair.learned.cells.size(); ++i) {
    const CellResult& a = pair.learned.cells[i];
    const CellResult& b = pair.fixed.cells[i];
    const double smse_delta = a.smse - b.smse;
    const double msll_delta = a.msll - b.msll;
    deltas << method_name(a.method) << ',' << a.m << ',' << a.run << ',' << a.seed << ','
           << format_double(a.smse) << ',' << format_double(b.smse) << ','
           << format_double(smse_delta) << ',' << format_double(a.msll) << ','
           << format_double(b.msll) << ',' << format_double(msll_delta) << '\n';
  }
  deltas.flush();
  if (!deltas) throw std::runtime_error("compare_fixed_vs_learned: cannot write deltas.csv");
  return pair;
}

TraceRunResult run_trace(const SyntheticSpec& spec, const TerminationPolicy& policy,
                         Eigen::Index dense_until, Eigen::Index every,
                         const std::vector<Eigen::Index>& reference_m,
                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const Dataset ds = generate_synthetic(spec);
  const Hyperparameters hp = spec.generative_hp();
  const TrivialPredictor trivial = TrivialPredictor::from_targets(ds.train_targets);

  DenseKernelMvm op(ds.train_inputs, hp);
  preflight_check(op, spec.seed);

  TraceOptions options;
  options.dense_until = dense_until;
  options.every = every;
  options.evaluate = [&](const Eigen::VectorXd& alpha) {
    Eigen::VectorXd mean = mean_from_alpha(ds.train_inputs, ds.test_inputs, hp, alpha);
    return smse(mean, ds.test_targets, trivial);
  };

  TraceRunResult result;
  result.cg = cg_solve(op, ds.train_targets, policy, &options);
  write_trace_csv((fs::path(out_dir) / "trace.csv").string(), result.cg.trace);

  for (Eigen::Index m : reference_m) {
    if (m < 1 || m > ds.n_train())
      throw std::invalid_argument("run_trace: reference m outside [1, n_train]");
    auto t0 = Clock::now();
    SubsetChoice subset = select_random(ds.n_train(), m, spec.seed);
    SodModel model = sod_train_on(ds.train_inputs, ds.train_targets, subset, hp);
    const double train_seconds = seconds_since(t0);
    PredictiveDistribution pred = sod_predict(model, ds.test_inputs);
    result.reference.push_back(
        {m, train_seconds, smse(pred.mean, ds.test_targets, trivial)});
  }
  std::ofstream refs(fs::path(out_dir) / "sod_reference.csv");
  refs << "m,train_seconds,smse\n";
  for (const SodReferencePoint& point : result.reference)
    refs << point.m << ',' << format_double(point.train_seconds) << ','
         << format_double(point.smse) << '\n';
  refs.flush();
  if (!refs) throw std::runtime_error("run_trace: cannot write sod_reference.csv");
  return result;
}

}  // namespace gpbench
