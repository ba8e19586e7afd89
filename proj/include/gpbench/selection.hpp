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

namespace gpbench {

enum class SelectionMethod { kRandom, kFpc };

struct SubsetChoice {
  std::vector<Eigen::Index> indices;  // strictly increasing for kRandom
  SelectionMethod method{SelectionMethod::kRandom};
  std::uint64_t seed{0};
};

// Uniform subset of m distinct indices from [0, n), returned sorted so a
// full-size subset reproduces the original ordering exactly.
SubsetChoice select_random(Eigen::Index n, Eigen::Index m, std::uint64_t seed);

struct FpcResult {
  SubsetChoice centres;             // in selection order, first is random
  std::vector<Eigen::Index> assignment;  // nearest centre per input row
};

// Greedy farthest-point clustering: each new centre is the point furthest
// from all existing centres. O(m n) distance work with running
// nearest-centre distances.
FpcResult select_fpc(const Eigen::MatrixXd& X, Eigen::Index m, std::uint64_t seed);

// Deterministic entry point with the first centre supplied by the caller.
FpcResult select_fpc_from(const Eigen::MatrixXd& X, Eigen::Index m,
                          Eigen::Index first_centre);

/*
 * Recursive projection partitioning. A cluster larger than the cap is
 * split through the hyperplane orthogonal to the line between two random
 * member points: members are ordered by their projection onto that line
 * (ties by ascending index) and the lower half, ceil(c/2) of c points,
 * goes left. Splitting recurses until every leaf holds at most
 * max_leaf_size points, so sibling leaf sizes differ by at most one
 * point at each split.
 */
struct RpcNode {
  bool is_leaf{true};
  int left{-1};
  int right{-1};
  int leaf_id{-1};
  Eigen::VectorXd direction;  // pivot_b - pivot_a (internal nodes)
  double threshold{0.0};      // projection <= threshold descends left
};

class RpcTree {
 public:
  RpcTree() = default;
  RpcTree(std::vector<RpcNode> nodes, std::vector<std::vector<Eigen::Index>> leaves,
          Eigen::Index input_dim);

  // Leaf id for a query point, by descending the stored split planes.
  int assign(const Eigen::VectorXd& x) const;

  const std::vector<std::vector<Eigen::Index>>& leaves() const { return leaves_; }
  const std::vector<RpcNode>& nodes() const { return nodes_; }
  Eigen::Index input_dim() const { return input_dim_; }
  int depth() const;

 private:
  std::vector<RpcNode> nodes_;
  std::vector<std::vector<Eigen::Index>> leaves_;
  Eigen::Index input_dim_{0};
};

RpcTree build_rpc(const Eigen::MatrixXd& X, Eigen::Index max_leaf_size,
                  std::uint64_t seed);

// Convenience free function mirroring RpcTree::assign.
int rpc_assign(const RpcTree& tree, const Eigen::VectorXd& x);

// Row / entry gathers used wherever a subset of the training set is fit.
Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X,
                            const std::vector<Eigen::Index>& indices);
Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& indices);

}  // namespace gpbench
