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

#include "gpbench/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpbench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.1;  // tight enough for conjugate directions

// Internally everything minimizes phi = -objective.
struct Probe {
  double phi{kInf};
  Eigen::VectorXd grad;  // gradient of phi
  bool ok{false};
};

struct Counter {
  const Objective& objective;
  std::vector<OptPoint>& trace;
  int evals{0};

  Probe at(const Eigen::VectorXd& x) {
    Probe p;
    if (!x.allFinite()) {
      ++evals;  // a rejected trial still spends budget accounting
      return p;
    }
    try {
      auto [value, grad] = objective(x);
      ++evals;
      if (!std::isfinite(value) || grad.size() != x.size() || !grad.allFinite()) {
        return p;
      }
      trace.push_back({evals, value});
      p.phi = -value;
      p.grad = -grad;
      p.ok = true;
      return p;
    } catch (...) {
      ++evals;
      return p;
    }
  }
};

// Minimizer of the cubic Hermite interpolant through two slope samples;
// falls back to the midpoint when the interpolant has no interior
// minimum.
double cubic_step(double t1, double f1, double g1, double t2, double f2, double g2) {
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (t1 - t2);
  const double disc = d1 * d1 - g1 * g2;
  if (!(disc >= 0.0)) {
    return 0.5 * (t1 + t2);
  }
  const double d2 = std::copysign(std::sqrt(disc), t2 - t1);
  const double denom = g2 - g1 + 2.0 * d2;
  if (denom == 0.0) {
    return 0.5 * (t1 + t2);
  }
  return t2 - (t2 - t1) * (g2 + d2 - d1) / denom;
}

struct LineSample {
  double t{0.0};
  double phi{0.0};
  double dphi{0.0};
  Probe probe;
};

struct LineResult {
  bool improved{false};
  LineSample accepted;
};

/*
 * Strong-Wolfe line search (bracket then zoom) for phi along x + t d.
 * Spends at most kLineSearchMaxEvals objective calls; if the curvature
 * condition cannot be met in that budget the best sufficient-decrease
 * point seen is accepted instead.
 */
LineResult line_search(Counter& counter, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
                       double phi0, double dphi0, double t_first) {
  LineResult best;
  int spent = 0;

  auto sample = [&](double t) {
    LineSample s;
    s.t = t;
    s.probe = counter.at(x + t * d);
    ++spent;
    if (s.probe.ok) {
      s.phi = s.probe.phi;
      s.dphi = s.probe.grad.dot(d);
    } else {
      s.phi = kInf;
      s.dphi = kInf;
    }
    return s;
  };

  auto note_decrease = [&](const LineSample& s) {
    if (s.probe.ok && s.phi <= phi0 + kArmijo * s.t * dphi0 &&
        (!best.improved || s.phi < best.accepted.phi)) {
      best.improved = true;
      best.accepted = s;
    }
  };

  auto zoom = [&](LineSample lo, LineSample hi) {
    while (spent < kLineSearchMaxEvals) {
      double t = cubic_step(lo.t, lo.phi, lo.dphi, hi.t, hi.phi, hi.dphi);
      const double span = std::abs(hi.t - lo.t);
      const double lo_t = std::min(lo.t, hi.t), hi_t = std::max(lo.t, hi.t);
      if (!std::isfinite(t) || t <= lo_t + 0.1 * span || t >= hi_t - 0.1 * span) {
        t = 0.5 * (lo.t + hi.t);
      }
      LineSample s = sample(t);
      note_decrease(s);
      if (!s.probe.ok || s.phi > phi0 + kArmijo * s.t * dphi0 || s.phi >= lo.phi) {
        hi = s;
        if (!s.probe.ok) {
          // Failed trial: shrink toward the good end by bisection.
          hi.t = t;
          hi.phi = kInf;
          hi.dphi = kInf;
        }
        continue;
      }
      if (std::abs(s.dphi) <= -kCurvature * dphi0) {
        best.improved = true;
        best.accepted = s;
        return;
      }
      if (s.dphi * (hi.t - lo.t) >= 0.0) {
        hi = lo;
      }
      lo = s;
    }
  };

  LineSample prev;
  prev.t = 0.0;
  prev.phi = phi0;
  prev.dphi = dphi0;
  double t = t_first;

  while (spent < kLineSearchMaxEvals) {
    LineSample s = sample(t);
    if (!s.probe.ok) {
      // Off the feasible patch; pull back toward the last good point.
      t = 0.5 * (prev.t + t);
      if (t <= 1e-18) break;
      continue;
    }
    note_decrease(s);
    if (s.phi > phi0 + kArmijo * s.t * dphi0 || (prev.t > 0.0 && s.phi >= prev.phi)) {
      zoom(prev, s);
      return best;
    }
    if (std::abs(s.dphi) <= -kCurvature * dphi0) {
      best.improved = true;
      best.accepted = s;
      return best;
    }
    if (s.dphi >= 0.0) {
      zoom(s, prev);
      return best;
    }
    prev = s;
    t *= 2.0;
    if (t > 1e12) break;
  }
  return best;
}

}  // namespace

OptResult maximize_objective(const Objective& objective, const Eigen::VectorXd& theta0,
                             const OptBudget& budget) {
  OptResult out;
  out.theta = theta0;
  out.value = std::numeric_limits<double>::quiet_NaN();
  if (budget.max_evals <= 0) {
    out.evals = 0;
    out.status = OptStatus::kBudgetExhausted;
    return out;
  }

  Counter counter{objective, out.trace};
  Probe cur = counter.at(theta0);
  if (!cur.ok) {
    throw std::invalid_argument("maximize_objective: objective failed at the initial point");
  }

  Eigen::VectorXd x = theta0;
  Eigen::VectorXd d = -cur.grad;  // steepest descent on phi
  double t_prev = 0.0;
  int tiny_gains = 0;
  bool was_steepest = true;
  out.status = OptStatus::kBudgetExhausted;

  while (counter.evals < budget.max_evals) {
    if (cur.grad.lpNorm<Eigen::Infinity>() <= budget.grad_tol) {
      out.status = OptStatus::kGradConverged;
      break;
    }
    double dphi0 = cur.grad.dot(d);
    if (dphi0 >= 0.0) {
      d = -cur.grad;
      was_steepest = true;
      dphi0 = -cur.grad.squaredNorm();
      if (dphi0 == 0.0) {
        out.status = OptStatus::kGradConverged;
        break;
      }
    }

    const double t_first =
        (t_prev > 0.0) ? t_prev : std::min(1.0, 1.0 / (1.0 + cur.grad.norm()));
    const LineResult line = line_search(counter, x, d, cur.phi, dphi0, t_first);

    if (!line.improved) {
      if (was_steepest) {
        out.status = OptStatus::kStalled;
        break;
      }
      d = -cur.grad;  // conjugate direction failed; restart and retry
      was_steepest = true;
      continue;
    }

    const double gain = cur.phi - line.accepted.phi;
    const Eigen::VectorXd g_old = cur.grad;
    x += line.accepted.t * d;
    cur = line.accepted.probe;
    t_prev = line.accepted.t;

    if (gain <= budget.rel_improvement_tol * (1.0 + std::abs(cur.phi))) {
      if (++tiny_gains >= 2) {
        out.status = OptStatus::kStalled;
        break;
      }
    } else {
      tiny_gains = 0;
    }

    // Polak-Ribiere with the nonnegativity restart.
    const double denom = g_old.squaredNorm();
    double beta = 0.0;
    if (denom > 0.0) {
      beta = std::max(0.0, cur.grad.dot(cur.grad - g_old) / denom);
    }
    d = -cur.grad + beta * d;
    was_steepest = (beta == 0.0);
  }

  out.theta = x;
  out.value = -cur.phi;
  out.grad = -cur.grad;
  out.evals = counter.evals;
  return out;
}

Hyperparameters default_initial_hyperparameters(const Eigen::VectorXd& y,
                                                Eigen::Index input_dim, bool ard) {
  if (y.size() == 0) {
    throw std::invalid_argument("default_initial_hyperparameters: empty targets");
  }
  double sd = std::sqrt((y.array() - y.mean()).square().mean());
  if (!(sd > 1e-12)) {
    sd = 1.0;
  }
  const double log_sf = std::log(sd);
  const double log_sn = std::log(sd / 10.0);
  if (ard) {
    return Hyperparameters::ard_uniform(input_dim, 0.0, log_sf, log_sn);
  }
  return Hyperparameters::isotropic(0.0, log_sf, log_sn);
}

}  // namespace gpbench
