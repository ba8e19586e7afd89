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

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "gpbench/kernel.hpp"

namespace gpbench {

// Cholesky factorization failed even after the full jitter ladder; the
// message names every level that was attempted.
class FactorizationError : public std::runtime_error {
 public:
  explicit FactorizationError(const std::string& what) : std::runtime_error(what) {}
};

struct CholeskyResult {
  Eigen::MatrixXd lower;
  double jitter{0.0};  // absolute value added to the diagonal
};

/*
 * Cholesky with an escalating diagonal jitter. The first attempt adds
 * nothing; on failure the ladder runs 1e-10 * mean(diag) up by factors
 * of 10 to 1e-4 * mean(diag), then throws FactorizationError. The input
 * is the complete matrix to factor (noise already folded in when there
 * is any).
 */
CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& A);

struct PredictiveDistribution {
  Eigen::VectorXd mean;
  Eigen::VectorXd latent_variance;       // var of the noise-free function
  Eigen::VectorXd observation_variance;  // latent + noise variance
};

struct ExactModel {
  Eigen::MatrixXd train_inputs;
  Eigen::MatrixXd chol_lower;  // L with L L^T = K + sn^2 I (+ jitter)
  Eigen::VectorXd alpha;       // (K + sn^2 I)^{-1} y
  Hyperparameters hp;
  double jitter{0.0};
};

struct LogmlResult {
  double value{0.0};
  Eigen::VectorXd grad;  // d value / d [log ell..., log sf, log sn]
};

// Factor K(X,X) + sn^2 I and solve for alpha. O(n^3) time, O(n^2) memory.
ExactModel exact_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Hyperparameters& hp);

// Predictive mean and variance at each row of Xstar. The latent variance
// is clamped to (0, sf^2]; the observation variance adds sn^2.
PredictiveDistribution exact_predict(const ExactModel& model, const Eigen::MatrixXd& Xstar);

// Log marginal likelihood of the targets and its gradient in the packed
// parameter order. One O(n^3) factorization plus O(n^2) work per
// parameter.
LogmlResult exact_logml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Hyperparameters& hp);

// Value of the log marginal likelihood given an existing factorization:
// -0.5 y'alpha - sum(log diag L) - n/2 log(2 pi).
double logml_value(const Eigen::MatrixXd& chol_lower, const Eigen::VectorXd& alpha,
                   const Eigen::VectorXd& y);

}  // namespace gpbench
