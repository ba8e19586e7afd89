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

#include "gpbench/sod.hpp"

#include <chrono>
#include <stdexcept>

namespace gpbench {

namespace {

void check_subset(const SubsetChoice& subset, Eigen::Index n) {
  if (subset.indices.empty()) {
    throw std::invalid_argument("sod: empty subset");
  }
  for (const Eigen::Index i : subset.indices) {
    if (i < 0 || i >= n) {
      throw std::invalid_argument("sod: subset index out of range");
    }
  }
}

}  // namespace

SodModel sod_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::Index m,
                   SelectionMethod method, std::uint64_t seed, const Hyperparameters& hp) {
  const auto t0 = std::chrono::steady_clock::now();
  SubsetChoice subset;
  if (method == SelectionMethod::kRandom) {
    subset = select_random(X.rows(), m, seed);
  } else {
    subset = select_fpc(X, m, seed).centres;
  }
  const auto t1 = std::chrono::steady_clock::now();

  SodModel model = sod_train_on(X, y, subset, hp);
  model.selection_seconds = std::chrono::duration<double>(t1 - t0).count();
  return model;
}

SodModel sod_train_on(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const SubsetChoice& subset, const Hyperparameters& hp) {
  check_subset(subset, X.rows());
  SodModel model;
  model.subset = subset;
  model.inner = exact_train(gather_rows(X, subset.indices), gather(y, subset.indices), hp);
  return model;
}

PredictiveDistribution sod_predict(const SodModel& model, const Eigen::MatrixXd& Xstar) {
  return exact_predict(model.inner, Xstar);
}

LogmlResult sod_logml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const SubsetChoice& subset, const Hyperparameters& hp) {
  check_subset(subset, X.rows());
  return exact_logml(gather_rows(X, subset.indices), gather(y, subset.indices), hp);
}

}  // namespace gpbench
