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

#include "gpbench/gpr_exact.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace gpbench {

namespace {

void check_training_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Hyperparameters& hp) {
  if (X.rows() == 0) {
    throw std::invalid_argument("gpr: empty training set");
  }
  if (y.size() != X.rows()) {
    throw std::invalid_argument("gpr: target count != input count");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("gpr: non-finite training data");
  }
  hp.validate();
  hp.check_dim(X.cols());
}

}  // namespace

CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& A) {
  const double mean_diag = A.diagonal().mean();
  // First attempt adds nothing; afterwards the ladder escalates by
  // decades relative to the mean diagonal.
  std::vector<double> levels{0.0};
  for (double rel = 1e-10; rel < 1.5e-4; rel *= 10.0) {
    levels.push_back(rel * mean_diag);
  }
  for (const double jitter : levels) {
    Eigen::MatrixXd B = A;
    if (jitter > 0.0) {
      B.diagonal().array() += jitter;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() == Eigen::Success) {
      return {llt.matrixL(), jitter};
    }
  }
  std::ostringstream msg;
  msg << "cholesky_with_jitter: factorization failed; attempted jitters";
  for (const double jitter : levels) {
    msg << " " << jitter;
  }
  throw FactorizationError(msg.str());
}

ExactModel exact_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Hyperparameters& hp) {
  check_training_inputs(X, y, hp);
  Eigen::MatrixXd A = kernel_matrix(X, hp);
  A.diagonal().array() += hp.noise_variance();
  CholeskyResult chol = cholesky_with_jitter(A);

  ExactModel model;
  model.train_inputs = X;
  model.chol_lower = std::move(chol.lower);
  model.jitter = chol.jitter;
  model.hp = hp;
  model.alpha = model.chol_lower.triangularView<Eigen::Lower>().solve(y);
  model.chol_lower.triangularView<Eigen::Lower>().adjoint().solveInPlace(model.alpha);
  return model;
}

PredictiveDistribution exact_predict(const ExactModel& model, const Eigen::MatrixXd& Xstar) {
  if (Xstar.cols() != model.train_inputs.cols()) {
    throw std::invalid_argument("exact_predict: input dimension mismatch");
  }
  if (!Xstar.allFinite()) {
    throw std::invalid_argument("exact_predict: non-finite test inputs");
  }
  const double sf2 = model.hp.signal_variance();
  const Eigen::MatrixXd Kxs = kernel_matrix(model.train_inputs, Xstar, model.hp);

  PredictiveDistribution out;
  out.mean = Kxs.transpose() * model.alpha;
  const Eigen::MatrixXd V = model.chol_lower.triangularView<Eigen::Lower>().solve(Kxs);
  out.latent_variance = (sf2 - V.colwise().squaredNorm().array())
                            .max(sf2 * 1e-15)
                            .matrix()
                            .transpose();
  out.observation_variance = out.latent_variance.array() + model.hp.noise_variance();
  return out;
}

double logml_value(const Eigen::MatrixXd& chol_lower, const Eigen::VectorXd& alpha,
                   const Eigen::VectorXd& y) {
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(alpha) - chol_lower.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

LogmlResult exact_logml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Hyperparameters& hp) {
  check_training_inputs(X, y, hp);
  const Eigen::Index n = X.rows();

  Eigen::MatrixXd A = kernel_matrix(X, hp);
  A.diagonal().array() += hp.noise_variance();
  const CholeskyResult chol = cholesky_with_jitter(A);
  const Eigen::MatrixXd& L = chol.lower;

  Eigen::VectorXd alpha = L.triangularView<Eigen::Lower>().solve(y);
  L.triangularView<Eigen::Lower>().adjoint().solveInPlace(alpha);

  LogmlResult out;
  out.value = logml_value(L, alpha, y);

  // A^{-1} = L^{-T} L^{-1}; the explicit inverse keeps every parameter
  // derivative to an elementwise product with a gradient matrix.
  Eigen::MatrixXd Linv = Eigen::MatrixXd::Identity(n, n);
  L.triangularView<Eigen::Lower>().solveInPlace(Linv);
  const Eigen::MatrixXd Ainv = Linv.transpose() * Linv;

  out.grad.resize(hp.n_params());
  for (Eigen::Index j = 0; j < hp.n_kernel_params(); ++j) {
    const Eigen::MatrixXd Kd = kernel_matrix_grad(X, hp, j);
    const double quad = alpha.dot(Kd * alpha);
    const double trace = Ainv.cwiseProduct(Kd).sum();
    out.grad[j] = 0.5 * (quad - trace);
  }
  const double sn2 = hp.noise_variance();
  out.grad[hp.n_kernel_params()] = sn2 * alpha.squaredNorm() - sn2 * Ainv.trace();
  return out;
}

}  // namespace gpbench
