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

#include "gpbench/selection.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace gpbench {

namespace {

void check_subset_args(Eigen::Index n, Eigen::Index m) {
  if (n < 1) {
    throw std::invalid_argument("selection: empty input set");
  }
  if (m < 1 || m > n) {
    throw std::invalid_argument("selection: subset size must satisfy 1 <= m <= n");
  }
}

Eigen::Index uniform_index(std::mt19937_64& rng, Eigen::Index n) {
  return static_cast<Eigen::Index>(
      std::uniform_int_distribution<std::uint64_t>(0, static_cast<std::uint64_t>(n) - 1)(rng));
}

// Scalar-loop projection shared by tree building and descent. Both sides
// must round identically, otherwise a boundary point can land one ulp
// past its own split threshold and be routed into the wrong subtree.
double project_onto(const Eigen::VectorXd& direction, const Eigen::VectorXd& x) {
  double t = 0.0;
  for (Eigen::Index d = 0; d < direction.size(); ++d) {
    t += direction[d] * x[d];
  }
  return t;
}

}  // namespace

SubsetChoice select_random(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  check_subset_args(n, m);
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  // Partial Fisher-Yates: only the first m slots are ever needed.
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = i + uniform_index(rng, n - i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  SubsetChoice out;
  out.indices.assign(pool.begin(), pool.begin() + m);
  std::sort(out.indices.begin(), out.indices.end());
  out.method = SelectionMethod::kRandom;
  out.seed = seed;
  return out;
}

FpcResult select_fpc(const Eigen::MatrixXd& X, Eigen::Index m, std::uint64_t seed) {
  check_subset_args(X.rows(), m);
  std::mt19937_64 rng(seed);
  FpcResult out = select_fpc_from(X, m, uniform_index(rng, X.rows()));
  out.centres.seed = seed;
  return out;
}

FpcResult select_fpc_from(const Eigen::MatrixXd& X, Eigen::Index m,
                          Eigen::Index first_centre) {
  const Eigen::Index n = X.rows();
  check_subset_args(n, m);
  if (first_centre < 0 || first_centre >= n) {
    throw std::invalid_argument("select_fpc_from: first centre out of range");
  }

  FpcResult out;
  out.centres.method = SelectionMethod::kFpc;
  out.centres.indices.reserve(static_cast<std::size_t>(m));
  out.assignment.assign(static_cast<std::size_t>(n), 0);

  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  out.centres.indices.push_back(first_centre);
  chosen[static_cast<std::size_t>(first_centre)] = 1;

  const Eigen::RowVectorXd c0 = X.row(first_centre);
  Eigen::VectorXd dist2 = (X.rowwise() - c0).rowwise().squaredNorm();

  for (Eigen::Index k = 1; k < m; ++k) {
    // Farthest unchosen point; ties resolve to the smallest index.
    Eigen::Index next = -1;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!chosen[static_cast<std::size_t>(i)] && dist2[i] > best) {
        best = dist2[i];
        next = i;
      }
    }
    out.centres.indices.push_back(next);
    chosen[static_cast<std::size_t>(next)] = 1;

    const Eigen::RowVectorXd c = X.row(next);
    const Eigen::VectorXd d2 = (X.rowwise() - c).rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d2[i] < dist2[i]) {
        dist2[i] = d2[i];
        out.assignment[static_cast<std::size_t>(i)] = k;
      }
    }
    dist2[next] = 0.0;
    out.assignment[static_cast<std::size_t>(next)] = k;
  }
  return out;
}

RpcTree::RpcTree(std::vector<RpcNode> nodes, std::vector<std::vector<Eigen::Index>> leaves,
                 Eigen::Index input_dim)
    : nodes_(std::move(nodes)), leaves_(std::move(leaves)), input_dim_(input_dim) {}

int RpcTree::assign(const Eigen::VectorXd& x) const {
  if (nodes_.empty()) {
    throw std::logic_error("RpcTree::assign: empty tree");
  }
  if (x.size() != input_dim_) {
    throw std::invalid_argument("RpcTree::assign: input dimension mismatch");
  }
  int node = 0;
  while (!nodes_[static_cast<std::size_t>(node)].is_leaf) {
    const RpcNode& nd = nodes_[static_cast<std::size_t>(node)];
    node = (project_onto(nd.direction, x) <= nd.threshold) ? nd.left : nd.right;
  }
  return nodes_[static_cast<std::size_t>(node)].leaf_id;
}

int RpcTree::depth() const {
  if (nodes_.empty()) return 0;
  // Depth by traversal; the node vector is small (2 * leaves - 1).
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 1;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].is_leaf) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
      deepest = std::max(deepest, level[i] + 2);
    }
  }
  return deepest;
}

namespace {

struct RpcBuilder {
  const Eigen::MatrixXd& X;
  std::mt19937_64 rng;
  Eigen::Index cap;
  std::vector<RpcNode> nodes;
  std::vector<std::vector<Eigen::Index>> leaves;

  int build(std::vector<Eigen::Index> idx) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const Eigen::Index c = static_cast<Eigen::Index>(idx.size());
    if (c <= cap) {
      std::sort(idx.begin(), idx.end());
      nodes[static_cast<std::size_t>(id)].is_leaf = true;
      nodes[static_cast<std::size_t>(id)].leaf_id = static_cast<int>(leaves.size());
      leaves.push_back(std::move(idx));
      return id;
    }

    // Two distinct member points define the projection line. Exactly
    // coincident pivots are re-drawn a bounded number of times; if every
    // draw coincides the cluster is split by index order instead, with a
    // zero direction so queries descend left.
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(X.cols());
    bool have_line = false;
    for (int attempt = 0; attempt < 10 && !have_line; ++attempt) {
      const Eigen::Index p = static_cast<Eigen::Index>(
          std::uniform_int_distribution<std::uint64_t>(0, static_cast<std::uint64_t>(c) - 1)(rng));
      const Eigen::Index q = static_cast<Eigen::Index>(
          std::uniform_int_distribution<std::uint64_t>(0, static_cast<std::uint64_t>(c) - 1)(rng));
      if (p == q) continue;
      if (X.row(idx[static_cast<std::size_t>(p)]) == X.row(idx[static_cast<std::size_t>(q)])) {
        continue;
      }
      dir = (X.row(idx[static_cast<std::size_t>(q)]) - X.row(idx[static_cast<std::size_t>(p)]))
                .transpose();
      have_line = true;
    }

    std::vector<std::pair<double, Eigen::Index>> order;
    order.reserve(static_cast<std::size_t>(c));
    Eigen::VectorXd xi(X.cols());
    for (const Eigen::Index i : idx) {
      xi = X.row(i).transpose();
      order.emplace_back(have_line ? project_onto(dir, xi) : 0.0, i);
    }
    std::sort(order.begin(), order.end());

    const Eigen::Index n_left = (c + 1) / 2;  // odd sizes put the extra point left
    double threshold = 0.0;
    if (have_line) {
      const double last_left = order[static_cast<std::size_t>(n_left - 1)].first;
      threshold = (c % 2 == 0)
                      ? 0.5 * (last_left + order[static_cast<std::size_t>(n_left)].first)
                      : last_left;
    }

    std::vector<Eigen::Index> left_idx, right_idx;
    left_idx.reserve(static_cast<std::size_t>(n_left));
    right_idx.reserve(static_cast<std::size_t>(c - n_left));
    for (Eigen::Index i = 0; i < c; ++i) {
      (i < n_left ? left_idx : right_idx).push_back(order[static_cast<std::size_t>(i)].second);
    }

    const int left = build(std::move(left_idx));
    const int right = build(std::move(right_idx));
    RpcNode& nd = nodes[static_cast<std::size_t>(id)];
    nd.is_leaf = false;
    nd.left = left;
    nd.right = right;
    nd.direction = dir;
    nd.threshold = threshold;
    return id;
  }
};

}  // namespace

RpcTree build_rpc(const Eigen::MatrixXd& X, Eigen::Index max_leaf_size,
                  std::uint64_t seed) {
  if (X.rows() < 1) {
    throw std::invalid_argument("build_rpc: empty input set");
  }
  if (max_leaf_size < 1) {
    throw std::invalid_argument("build_rpc: leaf cap must be positive");
  }
  RpcBuilder builder{X, std::mt19937_64(seed), max_leaf_size, {}, {}};
  std::vector<Eigen::Index> all(static_cast<std::size_t>(X.rows()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  builder.build(std::move(all));
  return RpcTree(std::move(builder.nodes), std::move(builder.leaves), X.cols());
}

int rpc_assign(const RpcTree& tree, const Eigen::VectorXd& x) { return tree.assign(x); }

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X,
                            const std::vector<Eigen::Index>& indices) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), X.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(indices[i]);
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& indices) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[indices[i]];
  }
  return out;
}

}  // namespace gpbench
