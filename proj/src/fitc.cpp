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

#include "gpbench/fitc.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gpbench {

namespace {

void check_inducing(const SubsetChoice& inducing, Eigen::Index n) {
  if (inducing.indices.empty()) {
    throw std::invalid_argument("fitc: empty inducing set");
  }
  for (const Eigen::Index i : inducing.indices) {
    if (i < 0 || i >= n) {
      throw std::invalid_argument("fitc: inducing index out of range");
    }
  }
}

void check_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const Hyperparameters& hp) {
  if (X.rows() == 0) {
    throw std::invalid_argument("fitc: empty training set");
  }
  if (y.size() != X.rows()) {
    throw std::invalid_argument("fitc: target count != input count");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("fitc: non-finite training data");
  }
  hp.validate();
  hp.check_dim(X.cols());
}

// Shared forward pass: every quantity is m x n or smaller, so the cost
// is O(m^2 n) time and O(m n) memory.
struct FitcFactors {
  Eigen::MatrixXd U;       // m x D inducing rows
  Eigen::MatrixXd L_uu;    // chol(K_uu + jitter)
  double jitter{0.0};
  Eigen::MatrixXd V;       // L_uu^{-1} K_ux, m x n
  Eigen::VectorXd lambda;  // corrected diagonal + noise, size n
  Eigen::VectorXd sqrt_w;  // lambda^{-1/2}
  Eigen::MatrixXd Vs;      // V scaled by sqrt_w columnwise
  Eigen::MatrixXd L_B;     // chol(I + Vs Vs^T)
  Eigen::VectorXd c;       // L_B^{-1} Vs (sqrt_w .* y)
  Eigen::VectorXd alpha;   // (Q + Lambda)^{-1} y
};

FitcFactors fitc_factorize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const SubsetChoice& inducing, const Hyperparameters& hp) {
  check_data(X, y, hp);
  check_inducing(inducing, X.rows());
  const Eigen::Index n = X.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(inducing.indices.size());
  const double sf2 = hp.signal_variance();
  const double sn2 = hp.noise_variance();

  FitcFactors f;
  f.U = gather_rows(X, inducing.indices);

  const CholeskyResult kuu = cholesky_with_jitter(kernel_matrix(f.U, hp));
  f.L_uu = kuu.lower;
  f.jitter = kuu.jitter;

  f.V = kernel_matrix(f.U, X, hp);
  f.L_uu.triangularView<Eigen::Lower>().solveInPlace(f.V);

  // Exact diagonal restored: lambda_i = k_ii - q_ii + sn^2, clamped so
  // round-off never pushes the corrected part negative.
  const Eigen::ArrayXd q = f.V.colwise().squaredNorm().transpose().array();
  f.lambda = ((sf2 - q).max(0.0) + sn2).matrix();
  f.sqrt_w = f.lambda.cwiseSqrt().cwiseInverse();

  f.Vs = f.V * f.sqrt_w.asDiagonal();
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(m, m);
  B.selfadjointView<Eigen::Lower>().rankUpdate(f.Vs);
  const Eigen::LLT<Eigen::MatrixXd> lltB(B.selfadjointView<Eigen::Lower>());
  if (lltB.info() != Eigen::Success) {
    throw FactorizationError("fitc: inner system I + V'V lost positive definiteness");
  }
  f.L_B = lltB.matrixL();

  const Eigen::VectorXd ys = f.sqrt_w.cwiseProduct(y);
  f.c = f.L_B.triangularView<Eigen::Lower>().solve(f.Vs * ys);

  Eigen::VectorXd tail = f.L_B.triangularView<Eigen::Lower>().adjoint().solve(f.c);
  f.alpha = f.sqrt_w.cwiseProduct(ys - f.Vs.transpose() * tail);
  return f;
}

}  // namespace

FitcModel fitc_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::Index m,
                     SelectionMethod method, std::uint64_t seed, const Hyperparameters& hp) {
  const auto t0 = std::chrono::steady_clock::now();
  SubsetChoice inducing;
  if (method == SelectionMethod::kRandom) {
    inducing = select_random(X.rows(), m, seed);
  } else {
    inducing = select_fpc(X, m, seed).centres;
  }
  const auto t1 = std::chrono::steady_clock::now();

  FitcModel model = fitc_train_on(X, y, inducing, hp);
  model.selection_seconds = std::chrono::duration<double>(t1 - t0).count();
  return model;
}

FitcModel fitc_train_on(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const SubsetChoice& inducing, const Hyperparameters& hp) {
  FitcFactors f = fitc_factorize(X, y, inducing, hp);

  FitcModel model;
  model.inducing = inducing;
  model.inducing_inputs = std::move(f.U);
  model.chol_kuu = std::move(f.L_uu);
  model.chol_b = std::move(f.L_B);
  model.hp = hp;
  model.kuu_jitter = f.jitter;

  // mean weights: beta = K_uu^{-1} K_ux alpha = L_uu^{-T} L_B^{-T} c.
  model.beta = model.chol_b.triangularView<Eigen::Lower>().adjoint().solve(f.c);
  model.chol_kuu.triangularView<Eigen::Lower>().adjoint().solveInPlace(model.beta);
  return model;
}

PredictiveDistribution fitc_predict(const FitcModel& model, const Eigen::MatrixXd& Xstar) {
  if (Xstar.cols() != model.inducing_inputs.cols()) {
    throw std::invalid_argument("fitc_predict: input dimension mismatch");
  }
  if (!Xstar.allFinite()) {
    throw std::invalid_argument("fitc_predict: non-finite test inputs");
  }
  const double sf2 = model.hp.signal_variance();

  const Eigen::MatrixXd Ku = kernel_matrix(model.inducing_inputs, Xstar, model.hp);

  PredictiveDistribution out;
  out.mean = Ku.transpose() * model.beta;

  // latent = k** - ||L_uu^{-1} k_u||^2 + ||L_B^{-1} L_uu^{-1} k_u||^2.
  Eigen::MatrixXd T1 = Ku;
  model.chol_kuu.triangularView<Eigen::Lower>().solveInPlace(T1);
  const Eigen::RowVectorXd q = T1.colwise().squaredNorm();
  model.chol_b.triangularView<Eigen::Lower>().solveInPlace(T1);
  const Eigen::RowVectorXd s = T1.colwise().squaredNorm();
  out.latent_variance =
      (sf2 - q.array() + s.array()).max(sf2 * 1e-15).min(sf2).matrix().transpose();
  out.observation_variance = out.latent_variance.array() + model.hp.noise_variance();
  return out;
}

LogmlResult fitc_logml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const SubsetChoice& inducing, const Hyperparameters& hp) {
  const FitcFactors f = fitc_factorize(X, y, inducing, hp);
  const Eigen::Index n = X.rows();
  const double sf2 = hp.signal_variance();
  const double sn2 = hp.noise_variance();

  LogmlResult out;
  const Eigen::VectorXd ys = f.sqrt_w.cwiseProduct(y);
  out.value = -0.5 * (ys.squaredNorm() - f.c.squaredNorm()) -
              0.5 * f.lambda.array().log().sum() -
              f.L_B.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // P = K_uu^{-1} K_ux and Z = L_B^{-1} Vs carry every trace term;
  // A^{-1} itself is diag(w) - Zw' Zw and is never formed.
  Eigen::MatrixXd P = f.V;
  f.L_uu.triangularView<Eigen::Lower>().adjoint().solveInPlace(P);
  Eigen::MatrixXd Zw = f.Vs;
  f.L_B.triangularView<Eigen::Lower>().solveInPlace(Zw);
  const Eigen::VectorXd z_col2 = Zw.colwise().squaredNorm().transpose();
  Zw = Zw * f.sqrt_w.asDiagonal();

  const Eigen::VectorXd w = f.sqrt_w.cwiseAbs2();
  const Eigen::VectorXd s_diag = w.cwiseProduct(Eigen::VectorXd::Ones(n) - z_col2);

  const Eigen::VectorXd p_alpha = P * f.alpha;
  // PS = P A^{-1}, reused by every parameter's trace term.
  const Eigen::MatrixXd PS = P * w.asDiagonal() - (P * Zw.transpose()) * Zw;
  const Eigen::MatrixXd M2 = PS * P.transpose();

  out.grad.resize(hp.n_params());
  for (Eigen::Index j = 0; j < hp.n_kernel_params(); ++j) {
    const Eigen::MatrixXd Kd_uu = kernel_matrix_grad(f.U, hp, j);
    const Eigen::MatrixXd Rd = kernel_cross_grad(f.U, X, hp, j);
    const double kd_ff = (j == hp.n_lengthscales()) ? 2.0 * sf2 : 0.0;

    const Eigen::MatrixXd KdP = Kd_uu.selfadjointView<Eigen::Lower>() * P;
    const Eigen::VectorXd diag_qd =
        2.0 * (Rd.cwiseProduct(P)).colwise().sum().transpose() -
        (P.cwiseProduct(KdP)).colwise().sum().transpose();

    const double quad_q = 2.0 * (Rd * f.alpha).dot(p_alpha) -
                          p_alpha.dot(Kd_uu.selfadjointView<Eigen::Lower>() * p_alpha);
    const double quad_diag =
        (kd_ff - diag_qd.array()).cwiseProduct(f.alpha.array().square()).sum();

    const double trace_q = 2.0 * PS.cwiseProduct(Rd).sum() - Kd_uu.cwiseProduct(M2).sum();
    const double trace_diag = (kd_ff - diag_qd.array()).cwiseProduct(s_diag.array()).sum();

    out.grad[j] = 0.5 * (quad_q + quad_diag) - 0.5 * (trace_q + trace_diag);
  }
  out.grad[hp.n_kernel_params()] = sn2 * f.alpha.squaredNorm() - sn2 * s_diag.sum();
  return out;
}

double fitc_kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                        const Eigen::MatrixXd& U, const Hyperparameters& hp) {
  if (x.size() != xp.size() || x.size() != U.cols()) {
    throw std::invalid_argument("fitc_kernel_eval: input dimension mismatch");
  }
  if (U.rows() == 0) {
    throw std::invalid_argument("fitc_kernel_eval: empty inducing set");
  }
  if (x == xp) {
    return kernel_eval(x, x, hp);  // the diagonal stays exact
  }
  const CholeskyResult kuu = cholesky_with_jitter(kernel_matrix(U, hp));
  const Eigen::VectorXd ku_x =
      kuu.lower.triangularView<Eigen::Lower>().solve(kernel_matrix(U, x.transpose(), hp));
  const Eigen::VectorXd ku_xp =
      kuu.lower.triangularView<Eigen::Lower>().solve(kernel_matrix(U, xp.transpose(), hp));
  return ku_x.dot(ku_xp);
}

HybridResult hybrid_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          Eigen::Index m, SelectionMethod method, std::uint64_t seed,
                          const Hyperparameters& hp0, const OptBudget& budget) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  SubsetChoice subset;
  if (method == SelectionMethod::kRandom) {
    subset = select_random(X.rows(), m, seed);
  } else {
    subset = select_fpc(X, m, seed).centres;
  }
  const auto t1 = clock::now();

  // Stage one: maximize the subset's exact likelihood, m x m per step.
  const Eigen::MatrixXd Xm = gather_rows(X, subset.indices);
  const Eigen::VectorXd ym = gather(y, subset.indices);
  const bool ard = hp0.ard;
  const Objective objective = [&](const Eigen::VectorXd& theta) {
    const LogmlResult lm = exact_logml(Xm, ym, Hyperparameters::unpack(theta, ard));
    return std::make_pair(lm.value, lm.grad);
  };
  const OptResult opt = maximize_objective(objective, hp0.pack(), budget);
  const auto t2 = clock::now();

  // Stage two: the low-rank fit on the same subset at the learned point.
  HybridResult out;
  out.theta = Hyperparameters::unpack(opt.theta, ard);
  out.model = fitc_train_on(X, y, subset, out.theta);
  const auto t3 = clock::now();

  out.selection_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.hyper_seconds = std::chrono::duration<double>(t2 - t1).count();
  out.fit_seconds = std::chrono::duration<double>(t3 - t2).count();
  out.evals = opt.evals;
  out.logml = opt.value;
  return out;
}

}  // namespace gpbench
