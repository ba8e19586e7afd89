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

#include "gpbench/iterative.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace gpbench {

DenseKernelMvm::DenseKernelMvm(const Eigen::MatrixXd& X, const Hyperparameters& hp)
    : K_(kernel_matrix(X, hp)), noise_variance_(hp.noise_variance()) {}

Eigen::VectorXd DenseKernelMvm::apply(const Eigen::VectorXd& v) const {
  if (v.size() != K_.rows()) {
    throw std::invalid_argument("mvm: vector length != system size");
  }
  return K_ * v + noise_variance_ * v;
}

void preflight_check(const MvmOperator& op, std::uint64_t seed) {
  const Eigen::Index n = op.size();
  if (n <= 0) {
    throw std::invalid_argument("preflight: empty operator");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd u(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    u[i] = gauss(rng);
    v[i] = gauss(rng);
  }
  const Eigen::VectorXd Au = op.apply(u);
  const Eigen::VectorXd Av = op.apply(v);
  if (!Au.allFinite() || !Av.allFinite()) {
    throw std::invalid_argument("preflight: operator produced non-finite values");
  }

  const double scale = Au.norm() * v.norm() + Av.norm() * u.norm() + 1.0;
  if (std::abs(u.dot(Av) - v.dot(Au)) > 1e-8 * scale) {
    throw std::invalid_argument("preflight: operator is not symmetric");
  }

  const double a = 0.37, b = -1.21;
  const Eigen::VectorXd combined = op.apply(a * u + b * v);
  if ((combined - a * Au - b * Av).norm() > 1e-8 * scale) {
    throw std::invalid_argument("preflight: operator is not linear");
  }
}

CgResult cg_solve(const MvmOperator& op, const Eigen::VectorXd& b,
                  const TerminationPolicy& policy, const TraceOptions* trace) {
  using clock = std::chrono::steady_clock;
  const Eigen::Index n = op.size();
  if (b.size() != n) {
    throw std::invalid_argument("cg: right-hand side length != system size");
  }
  if (!b.allFinite()) {
    throw std::invalid_argument("cg: non-finite right-hand side");
  }
  if (policy.rel_tol <= 0.0) {
    throw std::invalid_argument("cg: tolerance must be positive");
  }
  const Eigen::Index max_it = policy.max_iterations > 0 ? policy.max_iterations : n;

  CgResult out;
  out.solution = Eigen::VectorXd::Zero(n);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    out.status = CgStatus::kConverged;
    return out;
  }

  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();

  double solve_seconds = 0.0;
  auto segment_start = clock::now();
  const auto record = [&](Eigen::Index it, double rel) {
    if (trace == nullptr) {
      return;
    }
    if (it <= trace->dense_until || (trace->every > 0 && it % trace->every == 0) ||
        it == max_it) {
      // Pause the solver clock while the probe runs.
      solve_seconds += std::chrono::duration<double>(clock::now() - segment_start).count();
      TracePoint point;
      point.iteration = it;
      point.rel_residual = rel;
      point.seconds = solve_seconds;
      if (trace->evaluate) {
        point.smse = trace->evaluate(out.solution);
      }
      out.trace.push_back(point);
      segment_start = clock::now();
    }
  };

  for (Eigen::Index it = 1; it <= max_it; ++it) {
    const Eigen::VectorXd Ap = op.apply(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) {
      solve_seconds += std::chrono::duration<double>(clock::now() - segment_start).count();
      out.status = CgStatus::kDiverged;
      out.iterations = it;
      out.rel_residual = std::sqrt(rr) / b_norm;
      out.seconds = solve_seconds;
      return out;
    }
    const double gamma = rr / pAp;
    out.solution += gamma * p;
    r -= gamma * Ap;
    const double rr_next = r.squaredNorm();
    const double rel = std::sqrt(rr_next) / b_norm;
    out.iterations = it;
    out.rel_residual = rel;

    record(it, rel);

    if (rel <= policy.rel_tol) {
      out.status = CgStatus::kConverged;
      break;
    }
    solve_seconds += std::chrono::duration<double>(clock::now() - segment_start).count();
    segment_start = clock::now();
    if (solve_seconds > policy.max_seconds) {
      out.status = CgStatus::kTimeBudget;
      break;
    }
    if (it == max_it) {
      out.status = CgStatus::kMaxIterations;
      break;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }

  solve_seconds += std::chrono::duration<double>(clock::now() - segment_start).count();
  out.seconds = solve_seconds;
  // The final iterate always closes the trace, whatever the cadence.
  if (trace != nullptr &&
      (out.trace.empty() || out.trace.back().iteration != out.iterations)) {
    TracePoint point;
    point.iteration = out.iterations;
    point.rel_residual = out.rel_residual;
    point.seconds = out.seconds;
    if (trace->evaluate) {
      point.smse = trace->evaluate(out.solution);
    }
    out.trace.push_back(point);
  }
  return out;
}

Eigen::VectorXd mean_from_alpha(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xstar,
                                const Hyperparameters& hp, const Eigen::VectorXd& alpha) {
  if (alpha.size() != X.rows()) {
    throw std::invalid_argument("mean_from_alpha: weight length != training size");
  }
  return kernel_matrix(Xstar, X, hp) * alpha;
}

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("trace: cannot open " + path);
  }
  out << "iteration,rel_residual,seconds,smse\n";
  char buf[96];
  for (const TracePoint& p : trace) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,", static_cast<long long>(p.iteration),
                  p.rel_residual, p.seconds);
    out << buf;
    if (std::isfinite(p.smse)) {
      std::snprintf(buf, sizeof(buf), "%.17g", p.smse);
      out << buf;
    }
    out << '\n';
  }
  if (!out) {
    throw std::runtime_error("trace: write failed for " + path);
  }
}

}  // namespace gpbench
