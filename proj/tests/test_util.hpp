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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "gpbench/kernel.hpp"

namespace gpbench::testutil {

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                                     Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      M(i, j) = normal(rng);
    }
  }
  return M;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n,
                                     double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Hyperparameters random_hp(std::mt19937_64& rng, Eigen::Index input_dim, bool ard) {
  const double log_sf = uniform(rng, -0.5, 0.7);
  const double log_sn = uniform(rng, -3.0, -0.5);
  if (ard) {
    Eigen::VectorXd ells(input_dim);
    for (Eigen::Index d = 0; d < input_dim; ++d) {
      ells[d] = uniform(rng, -0.7, 0.9);
    }
    return Hyperparameters::ard_from(ells, log_sf, log_sn);
  }
  return Hyperparameters::isotropic(uniform(rng, -0.7, 0.9), log_sf, log_sn);
}

// Central-difference gradient of a scalar function; the analytic side of
// every gradient test is checked against this, never against itself.
inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double step = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

inline double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, rel_err(a[i], b[i]));
  }
  return worst;
}

// Random SPD matrix with a controlled condition number, for solver tests.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n,
                                  double cond = 1e4) {
  const Eigen::MatrixXd G = random_matrix(rng, n, n);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd eigs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (n == 1) ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    eigs[i] = std::pow(cond, -t);  // eigenvalues in [1/cond, 1]
  }
  return Q * eigs.asDiagonal() * Q.transpose();
}

}  // namespace gpbench::testutil
