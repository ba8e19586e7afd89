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

#include "gpbench/gpr_exact.hpp"
#include "gpbench/selection.hpp"

namespace gpbench {

/*
 * Subset of data: pick m of the n training points and run the exact GP
 * on them, discarding the rest. Training drops from O(n^3) to O(m^3)
 * and prediction to O(m) / O(m^2) per test point.
 */
struct SodModel {
  SubsetChoice subset;
  ExactModel inner;               // exact GP over the subset rows
  double selection_seconds{0.0};  // wall clock spent choosing the subset
};

// Select a subset with the given method and fit the exact GP on it.
SodModel sod_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::Index m,
                   SelectionMethod method, std::uint64_t seed, const Hyperparameters& hp);

// Fit on an already-chosen subset; used when selection happened earlier
// (hyperparameter learning and final training share one subset).
SodModel sod_train_on(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const SubsetChoice& subset, const Hyperparameters& hp);

PredictiveDistribution sod_predict(const SodModel& model, const Eigen::MatrixXd& Xstar);

// Log marginal likelihood of the subset under the exact model; the
// objective maximized when learning hyperparameters for this method.
LogmlResult sod_logml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const SubsetChoice& subset, const Hyperparameters& hp);

}  // namespace gpbench
