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
#include <vector>

#include <Eigen/Dense>

#include "gpbench/gpr_exact.hpp"
#include "gpbench/selection.hpp"

namespace gpbench {

// How leaf hyperparameters are treated: one shared vector across all
// leaves, or an independent vector per leaf.
enum class LocalMode { kJoint, kSeparate };

/*
 * Piecewise GP: training inputs are partitioned by recursive projection,
 * one exact GP is fit per leaf, and every query is answered by the GP of
 * the leaf it descends to. Training cost per leaf is cubic in the leaf
 * size only, so the partition cap bounds the whole fit.
 */
struct LocalModel {
  RpcTree tree;
  std::vector<ExactModel> leaf_models;  // aligned with tree.leaves()
  LocalMode mode{LocalMode::kJoint};
  double selection_seconds{0.0};  // partition construction
};

// Partition with leaves of at most max_leaf_size points, then fit every
// leaf with the shared hyperparameters.
LocalModel local_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       Eigen::Index max_leaf_size, std::uint64_t seed,
                       const Hyperparameters& hp);

// Fit the leaves of an existing partition. leaf_hp holds either a single
// shared element (joint) or exactly one element per leaf (separate).
LocalModel local_train_on(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const RpcTree& tree,
                          const std::vector<Hyperparameters>& leaf_hp);

// Each row of Xstar is answered by the leaf it is assigned to.
PredictiveDistribution local_predict(const LocalModel& model,
                                     const Eigen::MatrixXd& Xstar);

// Factored likelihood with shared hyperparameters: the sum of the leaf
// GPs' log marginal likelihoods, with the matching summed gradient.
LogmlResult local_logml_joint(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const RpcTree& tree, const Hyperparameters& hp);

// Per-leaf likelihoods for independently parameterized leaves, aligned
// with tree.leaves(). leaf_hp must hold one element per leaf.
std::vector<LogmlResult> local_logml_separate(const Eigen::MatrixXd& X,
                                              const Eigen::VectorXd& y,
                                              const RpcTree& tree,
                                              const std::vector<Hyperparameters>& leaf_hp);

}  // namespace gpbench
