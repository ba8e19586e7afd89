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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpbench/kernel.hpp"

namespace gpbench {

/*
 * Recipe for a sampled regression problem: inputs drawn from a standard
 * normal, targets drawn from a zero-mean GP with an isotropic SE kernel
 * plus independent observation noise on train and test targets alike.
 */
struct SyntheticSpec {
  Eigen::Index input_dim{2};
  Eigen::Index n_train{0};
  Eigen::Index n_test{0};
  double lengthscale{1.0};
  double signal_std{1.0};
  double noise_variance{1e-6};
  std::uint64_t seed{0};

  void validate() const;

  // The kernel parameters the targets were actually drawn with.
  // Requires positive noise since parameters live on a log scale.
  Hyperparameters generative_hp() const;
};

struct StandardizationRecord {
  Eigen::VectorXd input_mean;   // per input dimension, from training rows
  Eigen::VectorXd input_scale;  // per input dimension, 1 for constant dims
  std::vector<Eigen::Index> constant_dims;
  double target_mean{0.0};
  bool targets_centered{false};
};

struct Dataset {
  std::string name;
  Eigen::MatrixXd train_inputs;
  Eigen::VectorXd train_targets;
  Eigen::MatrixXd test_inputs;
  Eigen::VectorXd test_targets;
  std::optional<StandardizationRecord> standardization;
  std::optional<SyntheticSpec> synthetic;

  Eigen::Index input_dim() const { return train_inputs.cols(); }
  Eigen::Index n_train() const { return train_inputs.rows(); }
  Eigen::Index n_test() const { return test_inputs.rows(); }
};

// Joint draws stay exact at any size: up to kJointSampleLimit points the
// whole Gram matrix is factorized at once, larger sets are extended one
// block at a time, each block conditioned on everything sampled before.
inline constexpr Eigen::Index kJointSampleLimit = 8192;
inline constexpr Eigen::Index kSampleBlock = 4096;

// One zero-mean GP draw over the rows of X (noise excluded). The second
// form consumes a caller-supplied standard-normal vector, one entry per
// row, so the draw is a pure function of X and z.
Eigen::VectorXd sample_gp_prior(const Eigen::MatrixXd& X, const Hyperparameters& hp,
                                std::mt19937_64& rng);
Eigen::VectorXd sample_gp_prior(const Eigen::MatrixXd& X, const Hyperparameters& hp,
                                const Eigen::VectorXd& z);

namespace detail {
// The block-conditional path with a caller-chosen block width. Block
// Cholesky computes the same (unique) lower factor as a joint
// factorization, so for a well-conditioned Gram matrix this agrees with
// the one-shot draw to round-off for any block size.
Eigen::VectorXd sample_gp_prior_blocked(const Eigen::MatrixXd& X,
                                        const Hyperparameters& hp,
                                        const Eigen::VectorXd& z, Eigen::Index block);
}  // namespace detail

// Deterministic per seed. Draw order: train inputs row-major, test
// inputs row-major, latent vector, train noise, test noise.
Dataset generate_synthetic(const SyntheticSpec& spec);

/*
 * Comma-separated numeric table, last column the target, one optional
 * header line (auto-detected). Ragged rows, non-numeric or non-finite
 * cells, and empty files are reported with their line number.
 */
Dataset load_csv(const std::string& train_path, const std::string& test_path,
                 const std::string& name = "");

// Writes inputs plus a final target column, round-trip exact.
void save_csv(const std::string& path, const Eigen::MatrixXd& X,
              const Eigen::VectorXd& y);

/*
 * Per-dimension affine transform fitted on the training inputs only and
 * applied to both input blocks; targets are centered by the training
 * mean unless center_targets is false. A training dimension whose spread
 * is below 1e-12 * (1 + |mean|) keeps scale 1 and is flagged.
 */
Dataset standardize(const Dataset& dataset, bool center_targets = true);

// JSON sidecar describing a dataset: name, shape, standardization, and
// the generation recipe when one exists.
void write_manifest(const std::string& path, const Dataset& dataset);

}  // namespace gpbench
