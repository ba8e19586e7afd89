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
#include "gpbench/optimizer.hpp"
#include "gpbench/selection.hpp"

namespace gpbench {

/*
 * Sparse approximation through m inducing points u taken from the
 * training inputs. The low-rank surrogate
 *
 *   q(x, x') = k(x, u) K_uu^{-1} k(u, x')
 *
 * replaces the kernel off the diagonal, while the diagonal keeps the
 * exact k(x, x): the effective train covariance is Q + diag(k - q) +
 * sn^2 I. Everything costs O(m^2 n) time and O(m n) memory; no n x n
 * matrix is ever formed.
 *
 * With the inducing set fixed, driving the noise to zero collapses the
 * corrected diagonal and the predictor degenerates to the exact GP on
 * the inducing points alone, so a subset-of-data fit is the natural
 * reference point for validating this model.
 */
struct FitcModel {
  SubsetChoice inducing;
  Eigen::MatrixXd inducing_inputs;  // m x D rows of the training inputs
  Eigen::MatrixXd chol_kuu;         // L_uu with L_uu L_uu^T = K_uu (+ jitter)
  Eigen::MatrixXd chol_b;           // L_B with L_B L_B^T = I + V Lam^{-1} V^T
  Eigen::VectorXd beta;             // predictive mean weights: mean = k_u' beta
  Hyperparameters hp;
  double kuu_jitter{0.0};
  double selection_seconds{0.0};
};

// Select inducing points and fit. Noise enters only through the
// corrected diagonal; the inducing Gram takes the jitter ladder when
// needed.
FitcModel fitc_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::Index m,
                     SelectionMethod method, std::uint64_t seed, const Hyperparameters& hp);

// Fit on an already-chosen inducing subset.
FitcModel fitc_train_on(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const SubsetChoice& inducing, const Hyperparameters& hp);

// Mean and variance per test row, O(m) / O(m^2) per point.
PredictiveDistribution fitc_predict(const FitcModel& model, const Eigen::MatrixXd& Xstar);

// Log marginal likelihood of the low-rank-plus-diagonal train covariance
// and its gradient in packed order, O(m^2 n) per parameter.
LogmlResult fitc_logml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const SubsetChoice& inducing, const Hyperparameters& hp);

// Single surrogate covariance value q(x, x') for the given inducing
// rows, with the exact diagonal restored at coincident arguments.
// O(m^3) per call; meant for oracles and diagnostics, not bulk use.
double fitc_kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                        const Eigen::MatrixXd& U, const Hyperparameters& hp);

/*
 * Two-stage variant: hyperparameters are learned on the subset's exact
 * GP likelihood, which is m x m work per step instead of m x n, and the
 * final model is the low-rank fit above on the same subset at those
 * learned values.
 */
struct HybridResult {
  FitcModel model;
  Hyperparameters theta;     // learned on the subset likelihood
  double selection_seconds{0.0};
  double hyper_seconds{0.0};  // optimization wall clock
  double fit_seconds{0.0};    // final low-rank fit wall clock
  int evals{0};
  double logml{0.0};          // subset likelihood at the accepted theta
};

HybridResult hybrid_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          Eigen::Index m, SelectionMethod method, std::uint64_t seed,
                          const Hyperparameters& hp0, const OptBudget& budget);

}  // namespace gpbench
