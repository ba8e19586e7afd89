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

#include "gpbench/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace gpbench {

namespace {

// Inputs with every column divided by its lengthscale; squared distances
// of the result are the exponent argument of the kernel.
Eigen::MatrixXd scaled_inputs(const Eigen::MatrixXd& X, const Hyperparameters& hp) {
  Eigen::MatrixXd Xs = X;
  if (hp.ard) {
    for (Eigen::Index d = 0; d < X.cols(); ++d) {
      Xs.col(d) /= hp.lengthscale(d);
    }
  } else {
    Xs /= hp.lengthscale(0);
  }
  return Xs;
}

// Pairwise squared distances via the expanded norm; negative round-off
// is clamped so the exponent never flips sign.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::VectorXd a2 = A.rowwise().squaredNorm();
  Eigen::VectorXd b2 = B.rowwise().squaredNorm();
  Eigen::MatrixXd D2 = -2.0 * (A * B.transpose());
  D2.colwise() += a2;
  D2.rowwise() += b2.transpose();
  return D2.cwiseMax(0.0);
}

void check_pair(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                const Hyperparameters& hp) {
  if (A.cols() != B.cols()) {
    throw std::invalid_argument("kernel: input dimension mismatch");
  }
  hp.validate();
  hp.check_dim(A.cols());
}

}  // namespace

Hyperparameters Hyperparameters::isotropic(double log_ell, double log_sf, double log_sn) {
  Hyperparameters hp;
  hp.log_lengthscales = Eigen::VectorXd::Constant(1, log_ell);
  hp.log_signal_std = log_sf;
  hp.log_noise_std = log_sn;
  hp.ard = false;
  return hp;
}

Hyperparameters Hyperparameters::ard_from(Eigen::VectorXd log_ells, double log_sf,
                                          double log_sn) {
  Hyperparameters hp;
  hp.log_lengthscales = std::move(log_ells);
  hp.log_signal_std = log_sf;
  hp.log_noise_std = log_sn;
  hp.ard = true;
  return hp;
}

Hyperparameters Hyperparameters::ard_uniform(Eigen::Index input_dim, double log_ell,
                                             double log_sf, double log_sn) {
  return ard_from(Eigen::VectorXd::Constant(input_dim, log_ell), log_sf, log_sn);
}

Eigen::VectorXd Hyperparameters::pack() const {
  Eigen::VectorXd theta(n_params());
  theta.head(log_lengthscales.size()) = log_lengthscales;
  theta[log_lengthscales.size()] = log_signal_std;
  theta[log_lengthscales.size() + 1] = log_noise_std;
  return theta;
}

Hyperparameters Hyperparameters::unpack(const Eigen::VectorXd& theta, bool ard) {
  if (theta.size() < 3) {
    throw std::invalid_argument("Hyperparameters::unpack: need at least 3 entries");
  }
  Hyperparameters hp;
  hp.log_lengthscales = theta.head(theta.size() - 2);
  hp.log_signal_std = theta[theta.size() - 2];
  hp.log_noise_std = theta[theta.size() - 1];
  hp.ard = ard;
  if (!ard && hp.log_lengthscales.size() != 1) {
    throw std::invalid_argument("Hyperparameters::unpack: isotropic kernel takes one lengthscale");
  }
  return hp;
}

void Hyperparameters::validate() const {
  if (log_lengthscales.size() == 0) {
    throw std::invalid_argument("Hyperparameters: empty lengthscale vector");
  }
  if (!log_lengthscales.allFinite() || !std::isfinite(log_signal_std) ||
      !std::isfinite(log_noise_std)) {
    throw std::invalid_argument("Hyperparameters: non-finite parameter");
  }
}

void Hyperparameters::check_dim(Eigen::Index input_dim) const {
  if (ard) {
    if (log_lengthscales.size() != input_dim) {
      throw std::invalid_argument("Hyperparameters: ARD lengthscale count != input dimension");
    }
  } else if (log_lengthscales.size() != 1) {
    throw std::invalid_argument("Hyperparameters: isotropic kernel takes one lengthscale");
  }
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                   const Hyperparameters& hp) {
  if (x.size() != xp.size()) {
    throw std::invalid_argument("kernel_eval: input dimension mismatch");
  }
  hp.validate();
  hp.check_dim(x.size());
  double s = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double delta = (x[d] - xp[d]) / hp.lengthscale(d);
    s += delta * delta;
  }
  return hp.signal_variance() * std::exp(-0.5 * s);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp,
                              const Hyperparameters& hp) {
  check_pair(X, Xp, hp);
  const Eigen::MatrixXd As = scaled_inputs(X, hp);
  const Eigen::MatrixXd Bs = scaled_inputs(Xp, hp);
  Eigen::MatrixXd K = squared_distances(As, Bs);
  K = hp.signal_variance() * (-0.5 * K.array()).exp();
  return K;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Hyperparameters& hp) {
  hp.validate();
  hp.check_dim(X.cols());
  const Eigen::MatrixXd Xs = scaled_inputs(X, hp);
  Eigen::MatrixXd K = squared_distances(Xs, Xs);
  K = hp.signal_variance() * (-0.5 * K.array()).exp();
  // Mirror the lower triangle and pin the diagonal so symmetry and the
  // k(x,x) = sf^2 bound hold exactly, not just to round-off.
  K = K.selfadjointView<Eigen::Lower>();
  K.diagonal().setConstant(hp.signal_variance());
  return K;
}

Eigen::MatrixXd kernel_cross_grad(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  const Hyperparameters& hp, Eigen::Index which) {
  check_pair(A, B, hp);
  if (which < 0 || which >= hp.n_kernel_params()) {
    throw std::out_of_range("kernel gradient: parameter index out of range");
  }
  Eigen::MatrixXd K = kernel_matrix(A, B, hp);
  if (which == hp.n_lengthscales()) {
    return 2.0 * K;
  }
  Eigen::MatrixXd M;
  if (hp.ard) {
    const Eigen::MatrixXd ca = A.col(which) / hp.lengthscale(which);
    const Eigen::MatrixXd cb = B.col(which) / hp.lengthscale(which);
    M = squared_distances(ca, cb);
  } else {
    M = squared_distances(scaled_inputs(A, hp), scaled_inputs(B, hp));
  }
  return K.cwiseProduct(M);
}

Eigen::MatrixXd kernel_matrix_grad(const Eigen::MatrixXd& X, const Hyperparameters& hp,
                                   Eigen::Index which) {
  hp.validate();
  hp.check_dim(X.cols());
  if (which < 0 || which >= hp.n_kernel_params()) {
    throw std::out_of_range("kernel gradient: parameter index out of range");
  }
  if (which == hp.n_lengthscales()) {
    return 2.0 * kernel_matrix(X, hp);
  }
  Eigen::MatrixXd G = kernel_cross_grad(X, X, hp, which);
  G = G.selfadjointView<Eigen::Lower>();
  G.diagonal().setZero();
  return G;
}

}  // namespace gpbench
