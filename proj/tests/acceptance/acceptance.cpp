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

/*
 * Acceptance gate: every release-blocking behavior of the library gets
 * one numbered criterion with a pinned tolerance, checked against an
 * oracle that is independent of the code under test. The binary prints
 * one [PASS]/[FAIL] line per criterion and exits nonzero if any fail.
 * Run a single criterion with --only N.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpbench/data.hpp"
#include "gpbench/fitc.hpp"
#include "gpbench/gpr_exact.hpp"
#include "gpbench/harness.hpp"
#include "gpbench/iterative.hpp"
#include "gpbench/kernel.hpp"
#include "gpbench/local.hpp"
#include "gpbench/metrics.hpp"
#include "gpbench/optimizer.hpp"
#include "gpbench/selection.hpp"
#include "gpbench/sod.hpp"
#include "test_util.hpp"

using namespace gpbench;
using namespace gpbench::testutil;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct CriterionResult {
  bool pass{false};
  std::string detail;
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

/*
 * The dense reference dataset shared by the benchmark-scale criteria:
 * a two-dimensional draw with unit lengthscale and a 1e-6 noise floor,
 * large enough that subset methods are meaningfully cheaper than the
 * full problem. Generated once and cached; generation time is charged
 * to the first criterion that touches it.
 */
struct DenseCase {
  Dataset ds;
  Hyperparameters generative;
  double gen_seconds{0.0};
};

const DenseCase& dense_case() {
  static const DenseCase cache = [] {
    SyntheticSpec spec;
    spec.input_dim = 2;
    spec.n_train = 8192;
    spec.n_test = 4096;
    spec.lengthscale = 1.0;
    spec.signal_std = 1.0;
    spec.noise_variance = 1e-6;
    spec.seed = 20260818;
    const auto t0 = Clock::now();
    DenseCase c{generate_synthetic(spec), spec.generative_hp(), 0.0};
    c.gen_seconds = seconds_since(t0);
    return c;
  }();
  return cache;
}

double dataset_smse(const Dataset& ds, const Eigen::VectorXd& means) {
  return smse(means, ds.test_targets, TrivialPredictor::from_targets(ds.train_targets));
}

// 1. A subset-of-data fit must be indistinguishable from the exact GP
// trained on the extracted subset alone.
CriterionResult c01_sod_matches_exact_on_subset() {
  constexpr double kTol = 1e-10;
  auto rng = make_rng(101);
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::Index n = 64 + static_cast<Eigen::Index>(rng() % 193);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 3);
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % n);
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const Eigen::VectorXd y = random_vector(rng, n);
    const Hyperparameters hp = random_hp(rng, d, rep % 2 == 0);
    const SubsetChoice subset = select_random(n, m, rng());

    const SodModel sod = sod_train_on(X, y, subset, hp);
    const ExactModel exact =
        exact_train(gather_rows(X, subset.indices), gather(y, subset.indices), hp);
    const Eigen::MatrixXd Xs = random_matrix(rng, 40, d);
    const PredictiveDistribution ps = sod_predict(sod, Xs);
    const PredictiveDistribution pe = exact_predict(exact, Xs);
    worst = std::max(worst, max_rel_err(ps.mean, pe.mean));
    worst = std::max(worst, max_rel_err(ps.latent_variance, pe.latent_variance));
    worst = std::max(worst, max_rel_err(ps.observation_variance, pe.observation_variance));
  }
  return {worst < kTol, fmt("max rel err %.2e (tol %.0e)", worst, kTol)};
}

// 2. The low-rank-plus-diagonal model must agree with an exact GP run
// on the explicitly assembled surrogate Gram matrix.
CriterionResult c02_fitc_matches_dense_surrogate() {
  constexpr double kTol = 1e-6;
  double worst = 0.0;
  for (const std::uint64_t seed : {202ull, 203ull, 204ull}) {
    auto rng = make_rng(seed);
    const Eigen::Index n = 56, m = 12, t = 20;
    const Eigen::MatrixXd X = random_matrix(rng, n, 2);
    const Eigen::VectorXd y = random_vector(rng, n);
    const Hyperparameters hp =
        Hyperparameters::isotropic(std::log(0.5), 0.1, std::log(0.15));
    const SubsetChoice subset = select_fpc(X, m, rng()).centres;
    const Eigen::MatrixXd U = gather_rows(X, subset.indices);

    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        K(i, j) = fitc_kernel_eval(X.row(i).transpose(), X.row(j).transpose(), U, hp);
    K.diagonal().array() += hp.noise_variance();
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    const Eigen::VectorXd alpha = llt.solve(y);

    const Eigen::MatrixXd Xs = random_matrix(rng, t, 2);
    Eigen::MatrixXd Q(t, n);
    for (Eigen::Index i = 0; i < t; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        Q(i, j) = fitc_kernel_eval(Xs.row(i).transpose(), X.row(j).transpose(), U, hp);
    const Eigen::VectorXd mean = Q * alpha;
    Eigen::VectorXd latent(t);
    for (Eigen::Index i = 0; i < t; ++i) {
      const Eigen::VectorXd qi = Q.row(i).transpose();
      latent[i] = hp.signal_variance() - qi.dot(llt.solve(qi));
    }
    const double logml =
        -0.5 * y.dot(alpha) -
        llt.matrixL().toDenseMatrix().diagonal().array().log().sum() -
        0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);

    const FitcModel model = fitc_train_on(X, y, subset, hp);
    const PredictiveDistribution pred = fitc_predict(model, Xs);
    worst = std::max(worst, max_rel_err(pred.mean, mean));
    worst = std::max(worst, max_rel_err(pred.latent_variance, latent));
    worst = std::max(worst, rel_err(fitc_logml(X, y, subset, hp).value, logml));
  }
  return {worst < kTol, fmt("max rel err %.2e (tol %.0e)", worst, kTol)};
}

// 3. As the noise level shrinks, the low-rank model must collapse onto
// the subset-of-data GP that shares its inducing set.
CriterionResult c03_fitc_approaches_sod_as_noise_vanishes() {
  auto rng = make_rng(301);
  const Eigen::Index n = 128, m = 16, t = 64;
  const Eigen::MatrixXd X = random_matrix(rng, n, 2);
  Hyperparameters hp = Hyperparameters::isotropic(std::log(0.5), 0.0, std::log(1e-2));
  const Eigen::VectorXd y = sample_gp_prior(X, hp, rng);
  const Eigen::MatrixXd Xs = random_matrix(rng, t, 2);
  const SubsetChoice subset = select_fpc(X, m, rng()).centres;

  std::vector<double> gaps;
  for (const double sigma : {1e-2, 1e-3, 1e-4}) {
    hp.log_noise_std = std::log(sigma);
    const PredictiveDistribution pf = fitc_predict(fitc_train_on(X, y, subset, hp), Xs);
    const PredictiveDistribution ps = sod_predict(sod_train_on(X, y, subset, hp), Xs);
    gaps.push_back((pf.mean - ps.mean).cwiseAbs().maxCoeff());
  }
  const bool pass = gaps[0] > gaps[1] && gaps[1] > gaps[2];
  return {pass, fmt("max mean gaps %.3e > %.3e > %.3e at sigma 1e-2, 1e-3, 1e-4",
                    gaps[0], gaps[1], gaps[2])};
}

// 4. Analytic likelihood gradients against central finite differences.
CriterionResult c04_gradients_match_finite_differences() {
  constexpr double kTol = 1e-5;
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  auto rng = make_rng(401);
  for (const bool ard : {false, true}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::Index d = 3;
      const Eigen::MatrixXd X = random_matrix(rng, 10, d);
      const Eigen::VectorXd y = random_vector(rng, 10);
      const Hyperparameters hp = random_hp(rng, d, ard);
      const LogmlResult lm = exact_logml(X, y, hp);
      const Eigen::VectorXd fd = finite_difference_gradient(
          [&](const Eigen::VectorXd& theta) {
            return exact_logml(X, y, Hyperparameters::unpack(theta, ard)).value;
          },
          hp.pack(), kStep);
      worst = std::max(worst, max_rel_err(lm.grad, fd));
    }
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::Index d = 3;
      const Eigen::MatrixXd X = random_matrix(rng, 40, d);
      const Eigen::VectorXd y = random_vector(rng, 40);
      const Hyperparameters hp = random_hp(rng, d, ard);
      const SubsetChoice subset = select_random(40, 8, rng());
      const LogmlResult lm = fitc_logml(X, y, subset, hp);
      const Eigen::VectorXd fd = finite_difference_gradient(
          [&](const Eigen::VectorXd& theta) {
            return fitc_logml(X, y, subset, Hyperparameters::unpack(theta, ard)).value;
          },
          hp.pack(), kStep);
      worst = std::max(worst, max_rel_err(lm.grad, fd));
    }
  }
  return {worst < kTol, fmt("max rel err %.2e over 80 instances (tol %.0e)", worst, kTol)};
}

namespace rpc_detail {
int subtree_size(const RpcTree& tree, int node) {
  const RpcNode& nd = tree.nodes()[static_cast<std::size_t>(node)];
  if (nd.is_leaf)
    return static_cast<int>(tree.leaves()[static_cast<std::size_t>(nd.leaf_id)].size());
  return subtree_size(tree, nd.left) + subtree_size(tree, nd.right);
}
}  // namespace rpc_detail

// 5. Partition structure: exact cover, capped and balanced leaves, and
// self-consistent point routing.
CriterionResult c05_partition_structure() {
  auto rng = make_rng(501);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = 30 + static_cast<Eigen::Index>(rng() % 371);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 6);
    const Eigen::Index cap = 2 + static_cast<Eigen::Index>(rng() % 49);
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const RpcTree tree = build_rpc(X, cap, rng());

    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const auto& leaf : tree.leaves()) {
      if (leaf.empty() || static_cast<Eigen::Index>(leaf.size()) > cap)
        return {false, fmt("rep %d: leaf size %zu outside [1, %ld]", rep, leaf.size(),
                           static_cast<long>(cap))};
      for (const Eigen::Index i : leaf) {
        if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)])
          return {false, fmt("rep %d: index %ld missing or repeated", rep,
                             static_cast<long>(i))};
        seen[static_cast<std::size_t>(i)] = 1;
      }
    }
    if (std::count(seen.begin(), seen.end(), 1) != n)
      return {false, fmt("rep %d: leaves do not cover the index set", rep)};
    for (const RpcNode& nd : tree.nodes())
      if (!nd.is_leaf &&
          std::abs(rpc_detail::subtree_size(tree, nd.left) -
                   rpc_detail::subtree_size(tree, nd.right)) > 1)
        return {false, fmt("rep %d: sibling sizes differ by more than 1", rep)};
    for (Eigen::Index i = 0; i < n; ++i) {
      const int leaf = rpc_assign(tree, X.row(i).transpose());
      const auto& members = tree.leaves()[static_cast<std::size_t>(leaf)];
      if (std::find(members.begin(), members.end(), i) == members.end())
        return {false, fmt("rep %d: point %ld routed away from its leaf", rep,
                           static_cast<long>(i))};
    }
  }
  return {true, "50 datasets: cover, cap, balance, and routing all hold"};
}

// 6. Greedy farthest-point selection against a from-scratch quadratic
// recomputation.
CriterionResult c06_farthest_point_oracle() {
  auto rng = make_rng(601);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng() % 281);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 8);
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 15);
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const Eigen::Index first = static_cast<Eigen::Index>(rng() % n);

    std::vector<Eigen::Index> centres{first};
    while (static_cast<Eigen::Index>(centres.size()) < m) {
      Eigen::Index best_i = -1;
      double best_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::find(centres.begin(), centres.end(), i) != centres.end()) continue;
        double nearest = std::numeric_limits<double>::infinity();
        for (const Eigen::Index c : centres)
          nearest = std::min(nearest, (X.row(i) - X.row(c)).squaredNorm());
        if (nearest > best_d) {
          best_d = nearest;
          best_i = i;
        }
      }
      centres.push_back(best_i);
    }
    if (select_fpc_from(X, m, first).centres.indices != centres)
      return {false, fmt("rep %d: centre sequence diverges from the oracle", rep)};
  }
  return {true, "20 instances: centre sequences identical"};
}

// 7. The iterative solver against direct factorizations, plus the
// operator sanity gate.
CriterionResult c07_cg_matches_direct_solves() {
  constexpr double kTol = 1e-8;
  auto rng = make_rng(701);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng() % 181);
    const Eigen::MatrixXd A = random_spd(rng, n, 1e4);
    const Eigen::VectorXd b = random_vector(rng, n);
    TerminationPolicy policy;
    policy.rel_tol = 1e-10;
    policy.max_iterations = 20 * n;  // round-off breaks the exact n-step bound
    const CgResult r = cg_solve(MatrixMvm(A), b, policy);
    if (r.status != CgStatus::kConverged)
      return {false, fmt("rep %d: solver stopped with a non-converged status", rep)};
    const Eigen::VectorXd direct = A.llt().solve(b);
    worst = std::max(worst, (r.solution - direct).norm() / direct.norm());
  }
  auto hp_rng = make_rng(702);
  const Eigen::MatrixXd X = random_matrix(hp_rng, 50, 2);
  try {
    preflight_check(DenseKernelMvm(X, Hyperparameters::isotropic(-0.3, 0.0, -1.0)), 7);
  } catch (const std::exception& err) {
    return {false, fmt("preflight rejected a healthy kernel operator: %s", err.what())};
  }
  return {worst < kTol,
          fmt("max rel err %.2e over 20 systems (tol %.0e); preflight ok", worst, kTol)};
}

// 8. Metric identities at their defining points.
CriterionResult c08_metric_identities() {
  constexpr double kTol = 1e-12;
  auto rng = make_rng(801);
  Eigen::VectorXd y_train = random_vector(rng, 80, 1.3);
  y_train.array() += 0.7;
  Eigen::VectorXd y_test = random_vector(rng, 30, 1.1);
  y_test.array() += 0.7;
  const TrivialPredictor trivial = TrivialPredictor::from_targets(y_train);

  const Eigen::VectorXd trivial_mean = Eigen::VectorXd::Constant(30, trivial.mean);
  const Eigen::VectorXd trivial_var = Eigen::VectorXd::Constant(30, trivial.variance);
  const double smse_trivial = smse(trivial_mean, y_test, trivial);
  const double smse_perfect = smse(y_test, y_test, trivial);
  const double msll_trivial = msll(trivial_mean, trivial_var, y_test, trivial);

  const bool pass = std::abs(smse_trivial - 1.0) < kTol && smse_perfect == 0.0 &&
                    std::abs(msll_trivial) < kTol;
  return {pass, fmt("trivial smse %.17g, perfect smse %.17g, trivial msll %.2e (tol %.0e)",
                    smse_trivial, smse_perfect, msll_trivial, kTol)};
}

// 9. On the dense low-noise dataset, a learned subset model at m=2048
// must push the error close to the noise floor, within a sane budget.
CriterionResult c09_noise_floor_recovery() {
  constexpr double kSmseTol = 1e-4;
  constexpr double kBudgetSeconds = 600.0;
  const auto t0 = Clock::now();
  const DenseCase& dense = dense_case();
  const Dataset& ds = dense.ds;

  const Hyperparameters hp0 =
      default_initial_hyperparameters(ds.train_targets, ds.input_dim(), false);
  const SubsetChoice subset = select_random(ds.n_train(), 2048, 1);
  OptBudget budget;
  budget.max_evals = 30;
  const OptResult opt = maximize_objective(
      [&](const Eigen::VectorXd& theta) {
        const LogmlResult lm =
            sod_logml(ds.train_inputs, ds.train_targets, subset,
                      Hyperparameters::unpack(theta, false));
        return std::make_pair(lm.value, lm.grad);
      },
      hp0.pack(), budget);
  const Hyperparameters theta = Hyperparameters::unpack(opt.theta, false);
  const SodModel model = sod_train_on(ds.train_inputs, ds.train_targets, subset, theta);
  const double err = dataset_smse(ds, sod_predict(model, ds.test_inputs).mean);
  const double elapsed = seconds_since(t0);
  return {err < kSmseTol && elapsed < kBudgetSeconds,
          fmt("smse %.3e (tol %.0e) in %.0fs (budget %.0fs, %d evals)", err, kSmseTol,
              elapsed, kBudgetSeconds, opt.evals)};
}

// 10. Growing the subset must not make the median error worse, for both
// subset families, at the generative hyperparameters.
CriterionResult c10_error_non_increasing_in_m() {
  const DenseCase& dense = dense_case();
  const Dataset& ds = dense.ds;
  const Hyperparameters& hp = dense.generative;

  const auto medians = [&](bool fitc, const std::vector<Eigen::Index>& grid) {
    std::vector<double> out;
    for (const Eigen::Index m : grid) {
      std::vector<double> errs;
      for (int s = 0; s < 5; ++s) {
        const SubsetChoice subset = select_random(ds.n_train(), m, 500 + s);
        Eigen::VectorXd mean;
        if (fitc)
          mean = fitc_predict(fitc_train_on(ds.train_inputs, ds.train_targets, subset, hp),
                              ds.test_inputs)
                     .mean;
        else
          mean = sod_predict(sod_train_on(ds.train_inputs, ds.train_targets, subset, hp),
                             ds.test_inputs)
                     .mean;
        errs.push_back(dataset_smse(ds, mean));
      }
      out.push_back(median5(errs));
    }
    return out;
  };
  const std::vector<double> sod_med = medians(false, {256, 512, 1024, 2048});
  const std::vector<double> fitc_med = medians(true, {32, 64, 128, 256});
  bool pass = true;
  for (std::size_t i = 1; i < sod_med.size(); ++i) pass &= sod_med[i] <= sod_med[i - 1];
  for (std::size_t i = 1; i < fitc_med.size(); ++i) pass &= fitc_med[i] <= fitc_med[i - 1];
  std::ostringstream detail;
  detail << "sod medians";
  for (const double v : sod_med) detail << fmt(" %.2e", v);
  detail << "; fitc medians";
  for (const double v : fitc_med) detail << fmt(" %.2e", v);
  return {pass, detail.str()};
}

// 11. Learning on the subset likelihood must be faster than learning on
// the low-rank likelihood at equal m and budget, without giving up the
// accuracy edge over the plain subset model.
CriterionResult c11_hybrid_faster_and_at_least_as_accurate() {
  const DenseCase& dense = dense_case();
  const Dataset& ds = dense.ds;
  const Eigen::Index m = 128;
  OptBudget budget;
  budget.max_evals = 15;
  const Hyperparameters hp0 =
      default_initial_hyperparameters(ds.train_targets, ds.input_dim(), false);

  int time_wins = 0;
  int accuracy_wins = 0;
  std::ostringstream detail;
  for (int s = 0; s < 5; ++s) {
    const std::uint64_t seed = 2000 + static_cast<std::uint64_t>(s);
    const HybridResult hybrid = hybrid_train(ds.train_inputs, ds.train_targets, m,
                                             SelectionMethod::kRandom, seed, hp0, budget);
    const double smse_hybrid =
        dataset_smse(ds, fitc_predict(hybrid.model, ds.test_inputs).mean);

    const SubsetChoice subset = select_random(ds.n_train(), m, seed);
    const auto t0 = Clock::now();
    maximize_objective(
        [&](const Eigen::VectorXd& theta) {
          const LogmlResult lm = fitc_logml(ds.train_inputs, ds.train_targets, subset,
                                            Hyperparameters::unpack(theta, false));
          return std::make_pair(lm.value, lm.grad);
        },
        hp0.pack(), budget);
    const double fitc_hyper_seconds = seconds_since(t0);

    const SodModel sod =
        sod_train_on(ds.train_inputs, ds.train_targets, subset, hybrid.theta);
    const double smse_sod = dataset_smse(ds, sod_predict(sod, ds.test_inputs).mean);

    time_wins += hybrid.hyper_seconds < fitc_hyper_seconds;
    accuracy_wins += smse_hybrid <= smse_sod;
    detail << fmt(" [s%d hyb %.2fs fitc %.2fs smse %.2e vs %.2e]", s,
                  hybrid.hyper_seconds, fitc_hyper_seconds, smse_hybrid, smse_sod);
  }
  const bool pass = time_wins == 5 && accuracy_wins >= 3;
  return {pass, fmt("time wins %d/5, accuracy wins %d/5 (need 5 and >=3);%s", time_wins,
                    accuracy_wins, detail.str().c_str())};
}

// 12. Doubling m has to cost what the complexity model says it costs:
// roughly cubic for the subset fit, roughly quadratic-in-m for the
// low-rank fit. Both legs of each pair are placed where the measured
// time exceeds 0.1 s so the ratio is not timer noise.
CriterionResult c12_training_time_scaling() {
  constexpr double kMinSeconds = 0.1;
  const DenseCase& dense = dense_case();
  const Dataset& ds = dense.ds;
  const Hyperparameters& hp = dense.generative;

  const auto time_fit = [&](bool fitc, Eigen::Index m, std::uint64_t seed) {
    const SubsetChoice subset = select_random(ds.n_train(), m, seed);
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 2; ++rep) {
      const auto t0 = Clock::now();
      if (fitc)
        fitc_train_on(ds.train_inputs, ds.train_targets, subset, hp);
      else
        sod_train_on(ds.train_inputs, ds.train_targets, subset, hp);
      best = std::min(best, seconds_since(t0));
    }
    return best;
  };
  const double sod_small = time_fit(false, 2048, 42);
  const double sod_large = time_fit(false, 4096, 42);
  const double fitc_small = time_fit(true, 2048, 43);
  const double fitc_large = time_fit(true, 4096, 43);
  const double sod_ratio = sod_large / sod_small;
  const double fitc_ratio = fitc_large / fitc_small;
  const bool measurable = sod_small > kMinSeconds && fitc_small > kMinSeconds;
  const bool pass =
      measurable && sod_ratio >= 5.0 && sod_ratio <= 12.0 && fitc_ratio >= 3.0 &&
      fitc_ratio <= 6.0;
  return {pass, fmt("sod %.2fs -> %.2fs (x%.1f, want 5-12); fitc %.2fs -> %.2fs "
                    "(x%.1f, want 3-6)",
                    sod_small, sod_large, sod_ratio, fitc_small, fitc_large, fitc_ratio)};
}

// 13. Residual-trace shape on a higher-dimensional draw: noisy early
// iterations, then log-linear decay, with the error-versus-time CSVs in
// place for plotting against subset reference fits.
CriterionResult c13_cg_trace_shape() {
  constexpr double kMinTailR2 = 0.85;
  SyntheticSpec spec;
  spec.input_dim = 8;
  spec.n_train = 4096;
  spec.n_test = 1024;
  spec.lengthscale = 1.0;
  spec.signal_std = 1.0;
  spec.noise_variance = 1e-3;
  spec.seed = 77;
  TerminationPolicy policy;
  policy.rel_tol = 1e-8;
  policy.max_iterations = 3000;

  const TraceRunResult result =
      run_trace(spec, policy, 60, 10, {256, 1024}, "acceptance_out/trace");
  if (result.cg.status != CgStatus::kConverged)
    return {false, "solver did not converge within the iteration budget"};
  const std::vector<TracePoint>& trace = result.cg.trace;
  if (trace.size() < 20)
    return {false, fmt("only %zu trace points recorded", trace.size())};

  bool fluctuates = false;
  for (std::size_t i = 1; i + 1 < trace.size() / 4; ++i)
    fluctuates |= trace[i + 1].rel_residual > trace[i].rel_residual;

  // Least-squares line through log10(residual) over the later half.
  std::vector<double> xs, ys;
  for (const TracePoint& p : trace)
    if (p.iteration * 2 >= result.cg.iterations) {
      xs.push_back(static_cast<double>(p.iteration));
      ys.push_back(std::log10(p.rel_residual));
    }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double cov = sxy - sx * sy / n;
  const double var_x = sxx - sx * sx / n;
  const double var_y = syy - sy * sy / n;
  const double slope = cov / var_x;
  const double r2 = (cov * cov) / (var_x * var_y);

  bool probes_ok = true;
  for (const TracePoint& p : trace) probes_ok &= std::isfinite(p.smse);
  const bool files_ok = std::filesystem::exists("acceptance_out/trace/trace.csv") &&
                        std::filesystem::exists("acceptance_out/trace/sod_reference.csv") &&
                        result.reference.size() == 2;
  const bool pass =
      fluctuates && slope < 0.0 && r2 >= kMinTailR2 && probes_ok && files_ok;
  return {pass, fmt("%ld iterations; early fluctuation %s; tail slope %.3f, R^2 %.3f "
                    "(min %.2f); probes %s; csv %s",
                    static_cast<long>(result.cg.iterations), fluctuates ? "yes" : "no",
                    slope, r2, kMinTailR2, probes_ok ? "finite" : "missing",
                    files_ok ? "written" : "missing")};
}

// 14. At small m the learned hyperparameters must not beat the
// generative ones on error: the subset is too small to estimate them
// reliably, so fixed values should win most seeds.
CriterionResult c14_learned_vs_fixed_small_m() {
  const DenseCase& dense = dense_case();
  const Dataset& ds = dense.ds;
  OptBudget budget;
  budget.max_evals = 30;
  const Hyperparameters hp0 =
      default_initial_hyperparameters(ds.train_targets, ds.input_dim(), false);

  std::ostringstream detail;
  bool pass = true;
  for (const Eigen::Index m : {Eigen::Index(64), Eigen::Index(128)}) {
    int fixed_wins = 0;
    for (int s = 0; s < 5; ++s) {
      const SubsetChoice subset =
          select_random(ds.n_train(), m, 3000 + static_cast<std::uint64_t>(s));
      const OptResult opt = maximize_objective(
          [&](const Eigen::VectorXd& theta) {
            const LogmlResult lm = sod_logml(ds.train_inputs, ds.train_targets, subset,
                                             Hyperparameters::unpack(theta, false));
            return std::make_pair(lm.value, lm.grad);
          },
          hp0.pack(), budget);
      const Hyperparameters learned = Hyperparameters::unpack(opt.theta, false);
      const double smse_learned = dataset_smse(
          ds, sod_predict(sod_train_on(ds.train_inputs, ds.train_targets, subset, learned),
                          ds.test_inputs)
                  .mean);
      const double smse_fixed = dataset_smse(
          ds, sod_predict(sod_train_on(ds.train_inputs, ds.train_targets, subset,
                                       dense.generative),
                          ds.test_inputs)
                  .mean);
      fixed_wins += smse_learned >= smse_fixed;
    }
    pass &= fixed_wins >= 3;
    detail << fmt(" m=%ld: fixed wins %d/5", static_cast<long>(m), fixed_wins);
  }
  return {pass, fmt("(need >=3 per m)%s", detail.str().c_str())};
}

struct Criterion {
  int id;
  const char* name;
  CriterionResult (*run)();
};

const Criterion kCriteria[] = {
    {1, "subset-of-data fit equals the exact gp on its subset", c01_sod_matches_exact_on_subset},
    {2, "low-rank model equals the exact gp on its surrogate gram", c02_fitc_matches_dense_surrogate},
    {3, "low-rank model collapses onto the subset gp as noise vanishes", c03_fitc_approaches_sod_as_noise_vanishes},
    {4, "likelihood gradients match central finite differences", c04_gradients_match_finite_differences},
    {5, "projection partition covers, caps, balances, and routes", c05_partition_structure},
    {6, "farthest-point selection equals brute-force recomputation", c06_farthest_point_oracle},
    {7, "conjugate gradients matches direct solves", c07_cg_matches_direct_solves},
    {8, "metric identities hold at their defining points", c08_metric_identities},
    {9, "learned subset model reaches the noise floor on dense data", c09_noise_floor_recovery},
    {10, "median error is non-increasing as the subset doubles", c10_error_non_increasing_in_m},
    {11, "hybrid learns faster than the low-rank likelihood, no accuracy loss", c11_hybrid_faster_and_at_least_as_accurate},
    {12, "training time scales as the complexity model predicts", c12_training_time_scaling},
    {13, "residual trace fluctuates early then decays log-linearly", c13_cg_trace_shape},
    {14, "fixed hyperparameters beat learned ones at small subsets", c14_learned_vs_fixed_small_m},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--list") == 0) {
      for (const Criterion& c : kCriteria) std::printf("%2d %s\n", c.id, c.name);
      return 0;
    } else {
      std::fprintf(stderr, "usage: %s [--only N] [--list]\n", argv[0]);
      return 1;
    }
  }

  int failures = 0;
  int ran = 0;
  for (const Criterion& criterion : kCriteria) {
    if (only != 0 && criterion.id != only) continue;
    const auto t0 = Clock::now();
    CriterionResult result;
    try {
      result = criterion.run();
    } catch (const std::exception& err) {
      result = {false, fmt("threw: %s", err.what())};
    }
    ++ran;
    failures += result.pass ? 0 : 1;
    std::printf("[%s] %2d %s: %s [%.1fs]\n", result.pass ? "PASS" : "FAIL", criterion.id,
                criterion.name, result.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion with id %d\n", only);
    return 1;
  }
  std::printf("acceptance: %d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
