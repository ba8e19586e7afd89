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

#include "gpbench/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gpbench/gpr_exact.hpp"

namespace gpbench {

void SyntheticSpec::validate() const {
  if (input_dim < 1 || n_train < 1 || n_test < 1) {
    throw std::invalid_argument("synthetic: dimensions and counts must be positive");
  }
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale) || !(signal_std > 0.0) ||
      !std::isfinite(signal_std)) {
    throw std::invalid_argument("synthetic: lengthscale and signal must be positive");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("synthetic: noise variance must be non-negative");
  }
}

Hyperparameters SyntheticSpec::generative_hp() const {
  validate();
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("synthetic: generative parameters need positive noise");
  }
  return Hyperparameters::isotropic(std::log(lengthscale), std::log(signal_std),
                                    0.5 * std::log(noise_variance));
}

Eigen::VectorXd sample_gp_prior(const Eigen::MatrixXd& X, const Hyperparameters& hp,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(X.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = gauss(rng);
  }
  return sample_gp_prior(X, hp, z);
}

Eigen::VectorXd sample_gp_prior(const Eigen::MatrixXd& X, const Hyperparameters& hp,
                                const Eigen::VectorXd& z) {
  const Eigen::Index n = X.rows();
  if (n == 0) {
    throw std::invalid_argument("sample: no input rows");
  }
  if (z.size() != n) {
    throw std::invalid_argument("sample: normal vector length != row count");
  }
  if (!X.allFinite() || !z.allFinite()) {
    throw std::invalid_argument("sample: non-finite inputs");
  }
  hp.validate();
  hp.check_dim(X.cols());

  if (n <= kJointSampleLimit) {
    const CholeskyResult chol = cholesky_with_jitter(kernel_matrix(X, hp));
    return chol.lower.triangularView<Eigen::Lower>() * z;
  }
  return detail::sample_gp_prior_blocked(X, hp, z, kSampleBlock);
}

namespace detail {

Eigen::VectorXd sample_gp_prior_blocked(const Eigen::MatrixXd& X,
                                        const Hyperparameters& hp,
                                        const Eigen::VectorXd& z, Eigen::Index block) {
  if (block < 1) {
    throw std::invalid_argument("sample: block width must be positive");
  }
  const Eigen::Index n = X.rows();
  // Blockwise lower factor of the full Gram matrix: each block row is
  // conditioned on every previously factorized block, so the draw stays
  // exact while no single factorization exceeds the block size.
  Eigen::MatrixXd L(n, n);
  Eigen::VectorXd f(n);
  for (Eigen::Index s = 0; s < n; s += block) {
    const Eigen::Index w = std::min(block, n - s);
    const Eigen::MatrixXd Xb = X.middleRows(s, w);
    Eigen::MatrixXd Kbb = kernel_matrix(Xb, hp);
    if (s > 0) {
      Eigen::MatrixXd cross = kernel_matrix(X.topRows(s), Xb, hp);  // s x w
      L.topLeftCorner(s, s).triangularView<Eigen::Lower>().solveInPlace(cross);
      L.block(s, 0, w, s) = cross.transpose();
      Kbb.noalias() -= cross.transpose() * cross;
    }
    const CholeskyResult chol = cholesky_with_jitter(Kbb);
    L.block(s, s, w, w) = chol.lower;
    f.segment(s, w) = chol.lower.triangularView<Eigen::Lower>() * z.segment(s, w);
    if (s > 0) {
      f.segment(s, w).noalias() += L.block(s, 0, w, s) * z.head(s);
    }
  }
  return f;
}

}  // namespace detail

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Eigen::Index n = spec.n_train;
  const Eigen::Index t = spec.n_test;
  const Eigen::Index d = spec.input_dim;

  Eigen::MatrixXd all_inputs(n + t, d);
  for (Eigen::Index i = 0; i < n + t; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      all_inputs(i, j) = gauss(rng);
    }
  }

  Eigen::VectorXd z(n + t);
  for (Eigen::Index i = 0; i < n + t; ++i) {
    z[i] = gauss(rng);
  }

  // Only the kernel part matters for the draw; the noise slot of the
  // parameter vector is irrelevant here and set to a neutral value.
  const Hyperparameters hp = Hyperparameters::isotropic(
      std::log(spec.lengthscale), std::log(spec.signal_std), 0.0);
  Eigen::VectorXd latent = sample_gp_prior(all_inputs, hp, z);

  if (spec.noise_variance > 0.0) {
    const double noise_std = std::sqrt(spec.noise_variance);
    for (Eigen::Index i = 0; i < n + t; ++i) {
      latent[i] += noise_std * gauss(rng);  // train noise first, then test
    }
  }

  Dataset out;
  out.name = "gp" + std::to_string(d) + "d-" + std::to_string(n) + "x" +
             std::to_string(t) + "-s" + std::to_string(spec.seed);
  out.train_inputs = all_inputs.topRows(n);
  out.train_targets = latent.head(n);
  out.test_inputs = all_inputs.bottomRows(t);
  out.test_targets = latent.tail(t);
  out.synthetic = spec;
  return out;
}

namespace {

bool parse_cell(const std::string& text, std::size_t begin, std::size_t end, double& out) {
  while (begin < end && (text[begin] == ' ' || text[begin] == '\t')) ++begin;
  while (end > begin && (text[end - 1] == ' ' || text[end - 1] == '\t' ||
                         text[end - 1] == '\r')) {
    --end;
  }
  if (begin < end && text[begin] == '+') {
    ++begin;  // from_chars rejects an explicit plus sign
  }
  if (begin == end) {
    return false;
  }
  const char* first = text.data() + begin;
  const char* last = text.data() + end;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_row(const std::string& line, std::vector<double>& row) {
  row.clear();
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    const std::size_t end = comma == std::string::npos ? line.size() : comma;
    double value = 0.0;
    if (!parse_cell(line, begin, end, value)) {
      return false;
    }
    row.push_back(value);
    if (comma == std::string::npos) {
      return true;
    }
    begin = comma + 1;
  }
}

bool blank_line(const std::string& line) {
  for (const char c : line) {
    if (c != ' ' && c != '\t' && c != '\r') {
      return false;
    }
  }
  return true;
}

// One file -> inputs plus final target column.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("csv: cannot open " + path);
  }

  std::vector<std::vector<double>> rows;
  std::string line;
  std::vector<double> row;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool saw_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_line(line)) {
      continue;
    }
    const bool ok = parse_row(line, row);
    if (!ok && !saw_content) {
      saw_content = true;  // one leading header line is allowed
      continue;
    }
    saw_content = true;
    if (!ok) {
      throw std::runtime_error("csv: non-numeric cell at line " +
                               std::to_string(line_no) + " of " + path);
    }
    for (const double v : row) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("csv: non-finite value at line " +
                                 std::to_string(line_no) + " of " + path);
      }
    }
    if (rows.empty()) {
      width = row.size();
      if (width < 2) {
        throw std::runtime_error("csv: need at least one feature and a target, line " +
                                 std::to_string(line_no) + " of " + path);
      }
    } else if (row.size() != width) {
      throw std::runtime_error("csv: ragged row at line " + std::to_string(line_no) +
                               " of " + path + " (expected " + std::to_string(width) +
                               " cells, got " + std::to_string(row.size()) + ")");
    }
    rows.push_back(row);
  }
  if (rows.empty()) {
    throw std::runtime_error("csv: no data rows in " + path);
  }

  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(width - 1));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    y[static_cast<Eigen::Index>(i)] = rows[i][width - 1];
  }
  return {std::move(X), std::move(y)};
}

}  // namespace

Dataset load_csv(const std::string& train_path, const std::string& test_path,
                 const std::string& name) {
  auto [train_X, train_y] = load_table(train_path);
  auto [test_X, test_y] = load_table(test_path);
  if (train_X.cols() != test_X.cols()) {
    throw std::runtime_error("csv: train file has " + std::to_string(train_X.cols()) +
                             " features but test file has " +
                             std::to_string(test_X.cols()));
  }
  Dataset out;
  out.name = name.empty() ? train_path : name;
  out.train_inputs = std::move(train_X);
  out.train_targets = std::move(train_y);
  out.test_inputs = std::move(test_X);
  out.test_targets = std::move(test_y);
  return out;
}

void save_csv(const std::string& path, const Eigen::MatrixXd& X,
              const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("csv: row count != target count");
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("csv: cannot open " + path + " for writing");
  }
  char buf[40];
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g,", X(i, j));
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", y[i]);
    out << buf << '\n';
  }
  if (!out) {
    throw std::runtime_error("csv: write failed for " + path);
  }
}

Dataset standardize(const Dataset& dataset, bool center_targets) {
  const Eigen::Index n = dataset.train_inputs.rows();
  const Eigen::Index d = dataset.train_inputs.cols();
  if (n == 0) {
    throw std::invalid_argument("standardize: no training rows");
  }

  StandardizationRecord record;
  record.input_mean = dataset.train_inputs.colwise().mean().transpose();
  record.input_scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double spread = std::sqrt(
        (dataset.train_inputs.col(j).array() - record.input_mean[j]).square().mean());
    if (spread <= 1e-12 * (1.0 + std::abs(record.input_mean[j]))) {
      record.input_scale[j] = 1.0;  // constant dimension: shift only
      record.constant_dims.push_back(j);
    } else {
      record.input_scale[j] = spread;
    }
  }

  Dataset out = dataset;
  const auto transform = [&](Eigen::MatrixXd& M) {
    M.rowwise() -= record.input_mean.transpose();
    M = M * record.input_scale.cwiseInverse().asDiagonal();
  };
  transform(out.train_inputs);
  transform(out.test_inputs);

  if (center_targets) {
    record.target_mean = dataset.train_targets.mean();
    record.targets_centered = true;
    out.train_targets.array() -= record.target_mean;
    out.test_targets.array() -= record.target_mean;
  }
  out.standardization = record;
  return out;
}

void write_manifest(const std::string& path, const Dataset& dataset) {
  nlohmann::json j;
  j["name"] = dataset.name;
  j["input_dim"] = dataset.input_dim();
  j["n_train"] = dataset.n_train();
  j["n_test"] = dataset.n_test();
  j["standardized"] = dataset.standardization.has_value();
  if (dataset.standardization) {
    const StandardizationRecord& r = *dataset.standardization;
    j["standardization"] = {
        {"input_mean",
         std::vector<double>(r.input_mean.data(), r.input_mean.data() + r.input_mean.size())},
        {"input_scale",
         std::vector<double>(r.input_scale.data(),
                             r.input_scale.data() + r.input_scale.size())},
        {"constant_dims", r.constant_dims},
        {"target_mean", r.target_mean},
        {"targets_centered", r.targets_centered},
    };
  }
  if (dataset.synthetic) {
    const SyntheticSpec& s = *dataset.synthetic;
    j["synthetic"] = {
        {"lengthscale", s.lengthscale},
        {"signal_std", s.signal_std},
        {"noise_variance", s.noise_variance},
        {"seed", s.seed},
        {"test_targets_include_noise", true},
    };
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("manifest: cannot open " + path + " for writing");
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("manifest: write failed for " + path);
  }
}

}  // namespace gpbench
