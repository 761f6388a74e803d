// include/pocr/tensor.hpp

// Copyright 2026  The pocr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POCR_TENSOR_HPP_
#define POCR_TENSOR_HPP_

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "pocr/common.hpp"

namespace pocr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A named parameter: 64-bit values plus a same-shape gradient accumulator.
struct Tensor {
  std::string name;
  Matrix v;
  Matrix g;

  Tensor() = default;
  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), v(Matrix::Zero(rows, cols)),
        g(Matrix::Zero(rows, cols)) {}

  Eigen::Index rows() const { return v.rows(); }
  Eigen::Index cols() const { return v.cols(); }
  Eigen::Index size() const { return v.size(); }

  void zero_grad() { g.setZero(); }

  void init_uniform(std::mt19937_64& rng, double limit) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = dist(rng);
  }

  // NaN/Inf rejection at checkpoint boundaries.
  void check_finite(const std::string& where) const {
    if (!v.allFinite())
      throw Error("non-finite values in tensor '" + name + "' (" + where +
                  ")");
  }
};

class AdamOptimizer {
 public:
  AdamOptimizer(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  // Applies one update from the accumulated gradients; `params` must be the
  // same list (same order) on every call.
  void step(const std::vector<Tensor*>& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

// Scales gradients so their global L2 norm is at most `max_norm`;
// returns the pre-clip norm.
double clip_gradients(const std::vector<Tensor*>& params, double max_norm);

struct GradCheckReport {
  double max_rel_error = 0;
  std::string worst_tensor;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0;
  double worst_numeric = 0;
  size_t coords_checked = 0;
  bool passed = false;
};

// Central-difference comparison of the gradients already accumulated in
// `params[i]->g` against `loss_fn` (a pure forward recomputation). Relative
// error per coordinate is |a - n| / max(|a|, |n|, floor); the floor absorbs
// finite-difference noise on near-zero coordinates. When a tensor has more
// than `max_coords_per_tensor` entries (0 = check all), a deterministic
// sample is checked.
GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::vector<Tensor*>& params,
                           double epsilon = 1e-5, double tolerance = 1e-4,
                           size_t max_coords_per_tensor = 0,
                           uint64_t seed = 13, double floor = 1e-5);

}  // namespace pocr

#endif  // POCR_TENSOR_HPP_
