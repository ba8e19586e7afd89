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

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include <doctest.h>

#include "gpbench/selection.hpp"
#include "test_util.hpp"

using namespace gpbench;
using namespace gpbench::testutil;

namespace {

// Brute-force farthest-point clustering: every step recomputes all
// centre distances from scratch. Quadratic and independent of the
// incremental implementation.
std::vector<Eigen::Index> fpc_oracle(const Eigen::MatrixXd& X, Eigen::Index m,
                                     Eigen::Index first) {
  std::vector<Eigen::Index> centres{first};
  while (static_cast<Eigen::Index>(centres.size()) < m) {
    Eigen::Index best_i = -1;
    double best_d = -1.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      if (std::find(centres.begin(), centres.end(), i) != centres.end()) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (const Eigen::Index c : centres) {
        nearest = std::min(nearest, (X.row(i) - X.row(c)).squaredNorm());
      }
      if (nearest > best_d) {
        best_d = nearest;
        best_i = i;
      }
    }
    centres.push_back(best_i);
  }
  return centres;
}

// Subtree sizes from the stored node structure.
int subtree_size(const RpcTree& tree, int node) {
  const RpcNode& nd = tree.nodes()[static_cast<std::size_t>(node)];
  if (nd.is_leaf) {
    return static_cast<int>(tree.leaves()[static_cast<std::size_t>(nd.leaf_id)].size());
  }
  return subtree_size(tree, nd.left) + subtree_size(tree, nd.right);
}

}  // namespace

TEST_CASE("random subset of full size is the identity ordering") {
  const SubsetChoice sub = select_random(37, 37, 123);
  for (Eigen::Index i = 0; i < 37; ++i) {
    CHECK(sub.indices[static_cast<std::size_t>(i)] == i);
  }
}

TEST_CASE("random subsets are sorted, unique, in range, and seeded") {
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    const SubsetChoice sub = select_random(100, 10, seed);
    CHECK(sub.indices.size() == 10);
    CHECK(std::is_sorted(sub.indices.begin(), sub.indices.end()));
    const std::set<Eigen::Index> uniq(sub.indices.begin(), sub.indices.end());
    CHECK(uniq.size() == 10);
    CHECK(*uniq.begin() >= 0);
    CHECK(*uniq.rbegin() < 100);
    const SubsetChoice again = select_random(100, 10, seed);
    CHECK(again.indices == sub.indices);
  }
  CHECK(select_random(100, 10, 1).indices != select_random(100, 10, 2).indices);
}

TEST_CASE("subset size bounds are enforced") {
  CHECK_THROWS_AS(select_random(10, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(select_random(10, 11, 1), std::invalid_argument);
  CHECK_THROWS_AS(select_random(0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(select_fpc(Eigen::MatrixXd::Zero(5, 2), 6, 1), std::invalid_argument);
}

TEST_CASE("farthest-point clustering on a line picks the known sequence") {
  Eigen::MatrixXd X(10, 1);
  for (int i = 0; i < 10; ++i) X(i, 0) = i;
  const FpcResult res = select_fpc_from(X, 3, 0);
  CHECK(res.centres.indices[0] == 0);
  CHECK(res.centres.indices[1] == 9);
  CHECK(res.centres.indices[2] == 4);  // tie between 4 and 5 resolves low
}

TEST_CASE("farthest-point clustering matches the brute-force oracle") {
  auto rng = make_rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng() % 280);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 8);
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 15);
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const Eigen::Index first = static_cast<Eigen::Index>(rng() % n);
    const FpcResult res = select_fpc_from(X, m, first);
    CHECK(res.centres.indices == fpc_oracle(X, m, first));
  }
}

TEST_CASE("farthest-point assignment is the nearest centre") {
  auto rng = make_rng(32);
  const Eigen::MatrixXd X = random_matrix(rng, 150, 3);
  const FpcResult res = select_fpc(X, 12, 7);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::Index got = res.assignment[static_cast<std::size_t>(i)];
    double nearest = std::numeric_limits<double>::infinity();
    for (const Eigen::Index c : res.centres.indices) {
      nearest = std::min(nearest, (X.row(i) - X.row(c)).squaredNorm());
    }
    const Eigen::Index gc = res.centres.indices[static_cast<std::size_t>(got)];
    CHECK((X.row(i) - X.row(gc)).squaredNorm() == doctest::Approx(nearest).epsilon(1e-12));
  }
}

TEST_CASE("small inputs become a single sorted leaf") {
  auto rng = make_rng(33);
  const Eigen::MatrixXd X = random_matrix(rng, 6, 2);
  const RpcTree tree = build_rpc(X, 10, 5);
  REQUIRE(tree.leaves().size() == 1);
  std::vector<Eigen::Index> want(6);
  std::iota(want.begin(), want.end(), 0);
  CHECK(tree.leaves()[0] == want);
  CHECK(tree.depth() == 1);
}

TEST_CASE("projection partitioning yields a balanced partition") {
  auto rng = make_rng(34);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 30 + static_cast<Eigen::Index>(rng() % 800);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 6);
    const Eigen::Index cap = 5 + static_cast<Eigen::Index>(rng() % 60);
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const RpcTree tree = build_rpc(X, cap, rng());

    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const auto& leaf : tree.leaves()) {
      CHECK(static_cast<Eigen::Index>(leaf.size()) <= cap);
      CHECK(!leaf.empty());
      for (const Eigen::Index i : leaf) {
        CHECK(i >= 0);
        CHECK(i < n);
        CHECK(!seen[static_cast<std::size_t>(i)]);
        seen[static_cast<std::size_t>(i)] = 1;
      }
    }
    CHECK(std::count(seen.begin(), seen.end(), 1) == n);

    for (std::size_t k = 0; k < tree.nodes().size(); ++k) {
      const RpcNode& nd = tree.nodes()[k];
      if (!nd.is_leaf) {
        CHECK(std::abs(subtree_size(tree, nd.left) - subtree_size(tree, nd.right)) <= 1);
      }
    }
  }
}

TEST_CASE("descent routes every training point to its own leaf") {
  auto rng = make_rng(35);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index n = 50 + static_cast<Eigen::Index>(rng() % 500);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 5);
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const RpcTree tree = build_rpc(X, 40, rng());
    for (Eigen::Index i = 0; i < n; ++i) {
      const int leaf = rpc_assign(tree, X.row(i).transpose());
      const auto& members = tree.leaves()[static_cast<std::size_t>(leaf)];
      CHECK(std::find(members.begin(), members.end(), i) != members.end());
    }
  }
}

TEST_CASE("queries away from the training set still land in a valid leaf") {
  auto rng = make_rng(36);
  const Eigen::MatrixXd X = random_matrix(rng, 300, 4);
  const RpcTree tree = build_rpc(X, 25, 9);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::VectorXd q = random_vector(rng, 4, 3.0);
    const int leaf = tree.assign(q);
    CHECK(leaf >= 0);
    CHECK(leaf < static_cast<int>(tree.leaves().size()));
  }
}

TEST_CASE("identical points split by index order without failure") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(40, 3);
  const RpcTree tree = build_rpc(X, 8, 4);
  std::size_t total = 0;
  for (const auto& leaf : tree.leaves()) {
    CHECK(leaf.size() <= 8);
    total += leaf.size();
  }
  CHECK(total == 40);
  CHECK(tree.assign(Eigen::VectorXd::Ones(3)) >= 0);
}

TEST_CASE("power-of-two splits give the expected depth") {
  auto rng = make_rng(37);
  const Eigen::MatrixXd X = random_matrix(rng, 1024, 2);
  const RpcTree tree = build_rpc(X, 128, 11);
  CHECK(tree.leaves().size() == 8);
  CHECK(tree.depth() == 4);
}

TEST_CASE("tree building is deterministic in the seed") {
  auto rng = make_rng(38);
  const Eigen::MatrixXd X = random_matrix(rng, 200, 3);
  const RpcTree a = build_rpc(X, 20, 77);
  const RpcTree b = build_rpc(X, 20, 77);
  REQUIRE(a.leaves().size() == b.leaves().size());
  for (std::size_t k = 0; k < a.leaves().size(); ++k) {
    CHECK(a.leaves()[k] == b.leaves()[k]);
  }
}

TEST_CASE("gather helpers pick the requested rows") {
  auto rng = make_rng(39);
  const Eigen::MatrixXd X = random_matrix(rng, 10, 2);
  const Eigen::VectorXd y = random_vector(rng, 10);
  const std::vector<Eigen::Index> idx{7, 0, 3};
  const Eigen::MatrixXd Xs = gather_rows(X, idx);
  const Eigen::VectorXd ys = gather(y, idx);
  CHECK(Xs.row(0) == X.row(7));
  CHECK(Xs.row(1) == X.row(0));
  CHECK(Xs.row(2) == X.row(3));
  CHECK(ys[0] == y[7]);
  CHECK(ys[2] == y[3]);
}
