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
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpbench/kernel.hpp"

namespace gpbench {

// Matrix-vector product abstraction: iterative solvers only ever touch
// the system through apply, so the matrix itself need not be stored.
class MvmOperator {
 public:
  virtual ~MvmOperator() = default;
  virtual Eigen::Index size() const = 0;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& v) const = 0;
};

// (K + noise I) v with the kernel matrix held dense.
class DenseKernelMvm : public MvmOperator {
 public:
  DenseKernelMvm(const Eigen::MatrixXd& X, const Hyperparameters& hp);

  Eigen::Index size() const override { return K_.rows(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const override;

 private:
  Eigen::MatrixXd K_;
  double noise_variance_;
};

// Adapter over an explicit matrix, chiefly for tests and oracles.
class MatrixMvm : public MvmOperator {
 public:
  explicit MatrixMvm(Eigen::MatrixXd A) : A_(std::move(A)) {}

  Eigen::Index size() const override { return A_.rows(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const override { return A_ * v; }

 private:
  Eigen::MatrixXd A_;
};

// Randomized probe that a claimed operator is symmetric and linear, the
// two properties conjugate gradients silently depends on.
void preflight_check(const MvmOperator& op, std::uint64_t seed);

struct TerminationPolicy {
  Eigen::Index max_iterations{0};  // 0 means the system size
  double rel_tol{1e-10};
  double max_seconds{std::numeric_limits<double>::infinity()};
};

struct TracePoint {
  Eigen::Index iteration{0};
  double rel_residual{0.0};
  double seconds{0.0};  // solver time only, probe evaluations excluded
  double smse{std::numeric_limits<double>::quiet_NaN()};
};

// Progress recording: every iteration up to dense_until, then every
// `every` iterations, plus the final one. `evaluate` maps the current
// iterate to an error probe (its cost never counts as solver time).
struct TraceOptions {
  Eigen::Index dense_until{32};
  Eigen::Index every{4};
  std::function<double(const Eigen::VectorXd&)> evaluate;
};

enum class CgStatus { kConverged, kMaxIterations, kTimeBudget, kDiverged };

struct CgResult {
  Eigen::VectorXd solution;
  CgStatus status{CgStatus::kConverged};
  Eigen::Index iterations{0};
  double rel_residual{0.0};
  double seconds{0.0};
  std::vector<TracePoint> trace;
};

/*
 * Conjugate gradients from a zero start. The reported residual is the
 * recurrence residual ||r|| / ||b||; a non-positive curvature p'Ap
 * aborts with kDiverged since the system is then not positive definite.
 */
CgResult cg_solve(const MvmOperator& op, const Eigen::VectorXd& b,
                  const TerminationPolicy& policy,
                  const TraceOptions* trace = nullptr);

// Predictive mean induced by a (possibly approximate) weight vector.
Eigen::VectorXd mean_from_alpha(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xstar,
                                const Hyperparameters& hp, const Eigen::VectorXd& alpha);

// iteration,rel_residual,seconds,smse rows; smse stays empty when NaN.
void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace);

}  // namespace gpbench
