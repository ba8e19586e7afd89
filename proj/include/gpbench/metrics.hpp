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

#include <Eigen/Dense>

namespace gpbench {

// The do-nothing baseline both scores are measured against: predict the
// training mean everywhere, with the training variance as spread.
struct TrivialPredictor {
  double mean{0.0};
  double variance{0.0};  // population variance (1/n)

  static TrivialPredictor from_targets(const Eigen::VectorXd& train_targets);
};

// Standardized mean squared error: test MSE divided by the MSE of the
// trivial mean predictor. 1 means no better than the baseline, 0 is a
// perfect fit. Throws when the baseline MSE vanishes.
double smse(const Eigen::VectorXd& means, const Eigen::VectorXd& targets,
            const TrivialPredictor& trivial);

// Mean standardized log loss in nats: average negative predictive log
// density minus the same score for the trivial Gaussian. Negative is
// better than the baseline. Variances are observation variances (latent
// plus noise); nonpositive entries throw.
double msll(const Eigen::VectorXd& means, const Eigen::VectorXd& variances,
            const Eigen::VectorXd& targets, const TrivialPredictor& trivial);

}  // namespace gpbench
