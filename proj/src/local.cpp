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

#include "gpbench/local.hpp"

#include <chrono>
#include <stdexcept>
#include <string>
#include <utility>

namespace gpbench {

namespace {

void check_training_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0) {
    throw std::invalid_argument("local: empty training set");
  }
  if (y.size() != X.rows()) {
    throw std::invalid_argument("local: target count != input count");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("local: non-finite training data");
  }
}

const Hyperparameters& leaf_hp_for(const std::vector<Hyperparameters>& leaf_hp,
                                   std::size_t leaf, std::size_t n_leaves) {
  if (leaf_hp.size() != 1 && leaf_hp.size() != n_leaves) {
    throw std::invalid_argument(
        "local: expected one shared hyperparameter set or one per leaf");
  }
  return leaf_hp.size() == 1 ? leaf_hp.front() : leaf_hp[leaf];
}

std::vector<ExactModel> fit_leaves(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const RpcTree& tree,
                                   const std::vector<Hyperparameters>& leaf_hp) {
  const auto& leaves = tree.leaves();
  std::vector<ExactModel> models;
  models.reserve(leaves.size());
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const Hyperparameters& hp = leaf_hp_for(leaf_hp, k, leaves.size());
    try {
      models.push_back(exact_train(gather_rows(X, leaves[k]), gather(y, leaves[k]), hp));
    } catch (const FactorizationError& e) {
      throw FactorizationError("local: leaf " + std::to_string(k) + ": " + e.what());
    }
  }
  return models;
}

}  // namespace

LocalModel local_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       Eigen::Index max_leaf_size, std::uint64_t seed,
                       const Hyperparameters& hp) {
  check_training_data(X, y);

  const auto t0 = std::chrono::steady_clock::now();
  RpcTree tree = build_rpc(X, max_leaf_size, seed);
  const auto t1 = std::chrono::steady_clock::now();

  LocalModel model;
  model.leaf_models = fit_leaves(X, y, tree, {hp});
  model.tree = std::move(tree);
  model.mode = LocalMode::kJoint;
  model.selection_seconds = std::chrono::duration<double>(t1 - t0).count();
  return model;
}

LocalModel local_train_on(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const RpcTree& tree,
                          const std::vector<Hyperparameters>& leaf_hp) {
  check_training_data(X, y);
  if (tree.leaves().empty()) {
    throw std::invalid_argument("local: partition has no leaves");
  }

  LocalModel model;
  model.leaf_models = fit_leaves(X, y, tree, leaf_hp);
  model.tree = tree;
  model.mode = leaf_hp.size() == 1 ? LocalMode::kJoint : LocalMode::kSeparate;
  return model;
}

PredictiveDistribution local_predict(const LocalModel& model,
                                     const Eigen::MatrixXd& Xstar) {
  if (Xstar.cols() != model.tree.input_dim()) {
    throw std::invalid_argument("local_predict: input dimension mismatch");
  }
  if (!Xstar.allFinite()) {
    throw std::invalid_argument("local_predict: non-finite test inputs");
  }

  // Group rows by leaf so each leaf answers one batched query.
  std::vector<std::vector<Eigen::Index>> members(model.leaf_models.size());
  for (Eigen::Index i = 0; i < Xstar.rows(); ++i) {
    const Eigen::VectorXd x = Xstar.row(i).transpose();
    members[static_cast<std::size_t>(model.tree.assign(x))].push_back(i);
  }

  PredictiveDistribution out;
  out.mean.resize(Xstar.rows());
  out.latent_variance.resize(Xstar.rows());
  out.observation_variance.resize(Xstar.rows());
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k].empty()) {
      continue;
    }
    const PredictiveDistribution part =
        exact_predict(model.leaf_models[k], gather_rows(Xstar, members[k]));
    for (std::size_t j = 0; j < members[k].size(); ++j) {
      const Eigen::Index row = members[k][j];
      out.mean[row] = part.mean[static_cast<Eigen::Index>(j)];
      out.latent_variance[row] = part.latent_variance[static_cast<Eigen::Index>(j)];
      out.observation_variance[row] =
          part.observation_variance[static_cast<Eigen::Index>(j)];
    }
  }
  return out;
}

LogmlResult local_logml_joint(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const RpcTree& tree, const Hyperparameters& hp) {
  check_training_data(X, y);
  LogmlResult total;
  total.value = 0.0;
  total.grad = Eigen::VectorXd::Zero(hp.n_params());
  for (std::size_t k = 0; k < tree.leaves().size(); ++k) {
    const auto& idx = tree.leaves()[k];
    try {
      const LogmlResult part = exact_logml(gather_rows(X, idx), gather(y, idx), hp);
      total.value += part.value;
      total.grad += part.grad;
    } catch (const FactorizationError& e) {
      throw FactorizationError("local: leaf " + std::to_string(k) + ": " + e.what());
    }
  }
  return total;
}

std::vector<LogmlResult> local_logml_separate(const Eigen::MatrixXd& X,
                                              const Eigen::VectorXd& y,
                                              const RpcTree& tree,
                                              const std::vector<Hyperparameters>& leaf_hp) {
  check_training_data(X, y);
  if (leaf_hp.size() != tree.leaves().size()) {
    throw std::invalid_argument("local: expected one hyperparameter set per leaf");
  }
  std::vector<LogmlResult> out;
  out.reserve(leaf_hp.size());
  for (std::size_t k = 0; k < tree.leaves().size(); ++k) {
    const auto& idx = tree.leaves()[k];
    try {
      out.push_back(exact_logml(gather_rows(X, idx), gather(y, idx), leaf_hp[k]));
    } catch (const FactorizationError& e) {
      throw FactorizationError("local: leaf " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace gpbench
