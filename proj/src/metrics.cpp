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

#include "gpbench/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gpbench {

namespace {

void check_sizes(const Eigen::VectorXd& means, const Eigen::VectorXd& targets) {
  if (means.size() != targets.size()) {
    throw std::invalid_argument("metrics: prediction and target counts differ");
  }
  if (means.size() == 0) {
    throw std::invalid_argument("metrics: empty test set");
  }
  if (!means.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("metrics: non-finite input");
  }
}

}  // namespace

TrivialPredictor TrivialPredictor::from_targets(const Eigen::VectorXd& train_targets) {
  if (train_targets.size() == 0) {
    throw std::invalid_argument("TrivialPredictor: empty training targets");
  }
  if (!train_targets.allFinite()) {
    throw std::invalid_argument("TrivialPredictor: non-finite training targets");
  }
  TrivialPredictor out;
  out.mean = train_targets.mean();
  out.variance = (train_targets.array() - out.mean).square().mean();
  return out;
}

double smse(const Eigen::VectorXd& means, const Eigen::VectorXd& targets,
            const TrivialPredictor& trivial) {
  check_sizes(means, targets);
  const double mse = (means - targets).squaredNorm() / static_cast<double>(targets.size());
  const double base = (targets.array() - trivial.mean).square().mean();
  if (base <= 0.0) {
    throw std::invalid_argument("smse: trivial predictor has zero test error");
  }
  return mse / base;
}

double msll(const Eigen::VectorXd& means, const Eigen::VectorXd& variances,
            const Eigen::VectorXd& targets, const TrivialPredictor& trivial) {
  check_sizes(means, targets);
  if (variances.size() != targets.size()) {
    throw std::invalid_argument("msll: variance and target counts differ");
  }
  if (!variances.allFinite() || variances.minCoeff() <= 0.0) {
    throw std::invalid_argument("msll: predictive variances must be positive");
  }
  if (trivial.variance <= 0.0) {
    throw std::invalid_argument("msll: trivial predictor has zero variance");
  }
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    const double rm = targets[i] - means[i];
    const double rt = targets[i] - trivial.mean;
    const double model_loss = 0.5 * (log2pi + std::log(variances[i])) +
                              0.5 * rm * rm / variances[i];
    const double trivial_loss = 0.5 * (log2pi + std::log(trivial.variance)) +
                                0.5 * rt * rt / trivial.variance;
    total += model_loss - trivial_loss;
  }
  return total / static_cast<double>(targets.size());
}

}  // namespace gpbench
