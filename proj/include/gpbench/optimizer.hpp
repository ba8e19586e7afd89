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
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gpbench/kernel.hpp"

namespace gpbench {

// Objective to maximize: returns (value, gradient) at a point. Trial
// points that throw or return non-finite values are treated as
// rejections; a failure at the initial point is an error.
using Objective = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

/*
 * The budget is counted in objective evaluations, the dominant cost for
 * every likelihood here. The line search may finish its current bracket
 * after the budget runs out; kLineSearchMaxEvals bounds that overdraft.
 */
struct OptBudget {
  int max_evals{100};
  double grad_tol{1e-6};            // stop when ||grad||_inf falls below
  double rel_improvement_tol{1e-9};  // stop after two tiny relative gains
};

inline constexpr int kLineSearchMaxEvals = 20;

enum class OptStatus { kGradConverged, kBudgetExhausted, kStalled };

struct OptPoint {
  int eval_index{0};  // 1-based count of objective evaluations so far
  double value{0.0};
};

struct OptResult {
  Eigen::VectorXd theta;
  double value{0.0};
  Eigen::VectorXd grad;
  std::vector<OptPoint> trace;  // every successful evaluation, in order
  int evals{0};
  OptStatus status{OptStatus::kBudgetExhausted};
};

/*
 * Nonlinear conjugate gradients (Polak-Ribiere with restarts) under a
 * strong-Wolfe line search. Accepted iterates never decrease the
 * objective. A zero budget returns the initial point unevaluated.
 */
OptResult maximize_objective(const Objective& objective, const Eigen::VectorXd& theta0,
                             const OptBudget& budget);

// Hyperparameter initialization used when no starting point is given:
// unit lengthscales, signal deviation matching the target spread, noise
// a tenth of it. Constant targets fall back to unit spread.
Hyperparameters default_initial_hyperparameters(const Eigen::VectorXd& y,
                                                Eigen::Index input_dim, bool ard);

}  // namespace gpbench
