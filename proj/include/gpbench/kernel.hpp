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

#include <Eigen/Dense>

namespace gpbench {

/*
 * Squared-exponential covariance in log parameterization.
 *
 *   k(x, x') = sf^2 * exp(-0.5 * sum_d (x_d - x'_d)^2 / ell_d^2)
 *
 * An isotropic kernel stores one log lengthscale shared by every input
 * dimension; an ARD kernel stores one per dimension. The flavor is fixed
 * at construction. All three parameter groups live on the log scale so
 * that unconstrained optimization keeps them positive.
 */
struct Hyperparameters {
  Eigen::VectorXd log_lengthscales;  // size 1 (isotropic) or D (ARD)
  double log_signal_std{0.0};
  double log_noise_std{0.0};
  bool ard{false};

  static Hyperparameters isotropic(double log_ell, double log_sf, double log_sn);
  static Hyperparameters ard_from(Eigen::VectorXd log_ells, double log_sf, double log_sn);
  static Hyperparameters ard_uniform(Eigen::Index input_dim, double log_ell, double log_sf,
                                     double log_sn);

  Eigen::Index n_lengthscales() const { return log_lengthscales.size(); }
  // Kernel parameters are [lengthscales..., signal]; the noise deviation is
  // a parameter of the model, not of the kernel itself.
  Eigen::Index n_kernel_params() const { return log_lengthscales.size() + 1; }
  Eigen::Index n_params() const { return log_lengthscales.size() + 2; }

  double lengthscale(Eigen::Index d) const {
    return std::exp(log_lengthscales[ard ? d : 0]);
  }
  double signal_std() const { return std::exp(log_signal_std); }
  double signal_variance() const { return std::exp(2.0 * log_signal_std); }
  double noise_std() const { return std::exp(log_noise_std); }
  double noise_variance() const { return std::exp(2.0 * log_noise_std); }

  // Flat vector [log ell..., log sf, log sn] used by the optimizer.
  Eigen::VectorXd pack() const;
  static Hyperparameters unpack(const Eigen::VectorXd& theta, bool ard);

  // Throws std::invalid_argument on non-finite entries or an empty
  // lengthscale vector.
  void validate() const;
  // Throws std::invalid_argument when the lengthscale count does not
  // match the data dimension (ARD) or the vector is not a scalar
  // (isotropic).
  void check_dim(Eigen::Index input_dim) const;
};

// Single covariance value. Exactly symmetric in its arguments and bounded
// by sf^2, with equality iff the inputs coincide.
double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                   const Hyperparameters& hp);

// Cross-covariance matrix K(X, Xp), rows of X against rows of Xp.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp,
                              const Hyperparameters& hp);

// Self-covariance K(X, X). The lower triangle is computed and mirrored so
// the result is exactly symmetric; the diagonal is exactly sf^2.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Hyperparameters& hp);

/*
 * Derivative of K(X, X) with respect to one log-scale parameter.
 * `which` indexes [lengthscales..., signal]:
 *
 *   dK/dlog ell_d  = K .* M_d,  M_d(i,j) = (x_id - x_jd)^2 / ell_d^2
 *   dK/dlog sf     = 2 K
 *
 * For the isotropic flavor the single lengthscale derivative sums M_d
 * over all dimensions. Results are exactly symmetric with a zero
 * diagonal for lengthscale derivatives.
 */
Eigen::MatrixXd kernel_matrix_grad(const Eigen::MatrixXd& X, const Hyperparameters& hp,
                                   Eigen::Index which);

// Same derivative for a cross matrix K(A, B); needed by approximations
// whose likelihood touches cross-covariances.
Eigen::MatrixXd kernel_cross_grad(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  const Hyperparameters& hp, Eigen::Index which);

}  // namespace gpbench
