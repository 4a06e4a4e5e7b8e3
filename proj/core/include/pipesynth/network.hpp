// Copyright 2026 The pipesynth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PIPESYNTH_NETWORK_H_
#define PIPESYNTH_NETWORK_H_

// Recurrent policy/value network (p, v) = f(s).
//
// The encoded state's tokens are embedded and fed through a single-layer
// gated recurrent unit. The meta-feature vector is projected into the
// initial hidden state:
//
//   h0 = tanh(Wm m + bm)
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   n  = tanh(Wn x + Un (r * h) + bn)
//   h' = (1 - z) * n + z * h
//
// Tokens are consumed up to the first <pad>. The final hidden state feeds a
// linear policy head over the whole action vocabulary (masked softmax over
// the legal entries) and a logistic value head.
//
// Everything is double precision so finite differences can check the
// analytic gradient.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pipesynth/game.hpp"

namespace pipesynth {

struct NetworkShape {
  int vocab = 0;
  int embed = 32;
  int hidden = 64;
  int meta = static_cast<int>(kNumMetaFeatures);
  int actions = 0;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

using RowMatrixMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMatrixMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// Parameter groups in storage (and checkpoint) order.
enum class ParamGroup : int {
  kEmbedding,   // vocab x embed
  kInputZ,      // hidden x embed
  kInputR,
  kInputN,
  kRecurrentZ,  // hidden x hidden
  kRecurrentR,
  kRecurrentN,
  kBiasZ,       // hidden
  kBiasR,
  kBiasN,
  kMetaWeight,  // hidden x meta
  kMetaBias,    // hidden
  kPolicyWeight,  // actions x hidden
  kPolicyBias,    // actions
  kValueWeight,   // hidden
  kValueBias,     // 1
  kCount
};

const char* ParamGroupName(ParamGroup group);

// All parameters in one flat buffer; group views are Eigen maps into it.
// Gradients use the same type.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const NetworkShape& shape);

  static ModelParams Zeros(const NetworkShape& shape) { return ModelParams(shape); }
  // Uniform in [-scale, scale] from a seeded generator.
  static ModelParams Random(const NetworkShape& shape, std::uint64_t seed,
                            double scale = 0.08);
  // Random with the policy and value heads zeroed: uniform priors and
  // v = 0.5 until the first update. Starting point for self-play.
  static ModelParams Initial(const NetworkShape& shape, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::size_t offset(ParamGroup group) const {
    return offsets_[static_cast<int>(group)];
  }
  std::size_t group_size(ParamGroup group) const;
  int rows(ParamGroup group) const;
  int cols(ParamGroup group) const;

  RowMatrixMap matrix(ParamGroup group);
  ConstRowMatrixMap matrix(ParamGroup group) const;
  VectorMap vector(ParamGroup group);
  ConstVectorMap vector(ParamGroup group) const;

  double SquaredNorm() const;
  bool AllFinite() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  NetworkShape shape_;
  std::vector<double> values_;
  std::size_t offsets_[static_cast<int>(ParamGroup::kCount) + 1] = {};
};

struct PolicyValue {
  // Probabilities over all actions; exactly zero on illegal ones.
  std::vector<double> p;
  double v = 0.5;
};

// Throws std::invalid_argument when the state or mask does not match the
// parameter shapes.
PolicyValue Forward(const ModelParams& params, const EncodedState& state,
                    std::span<const std::uint8_t> legal_mask);

struct TrainingExample {
  EncodedState encoded;
  std::vector<std::uint8_t> legal;
  // Search probabilities: nonnegative, sum 1, zero on illegal actions.
  std::vector<double> pi;
  // Actual evaluation of the episode's realized pipeline.
  double e = 0.0;
};

// Mean over the batch of  -sum_a pi_a log max(p_a, 1e-12) + (v - e)^2,
// plus alpha * ||theta||^2. Throws std::invalid_argument on an empty batch
// or an example whose pi sums to zero.
double Loss(const ModelParams& params, std::span<const TrainingExample> batch,
            double alpha);

struct LossAndGradient {
  double loss = 0.0;
  ModelParams gradient;
};

// Exact gradient of Loss by backpropagation through time.
LossAndGradient ComputeGradient(const ModelParams& params,
                                std::span<const TrainingExample> batch,
                                double alpha);

// theta - lr * gradient, as a new parameter set. Throws
// std::invalid_argument if lr is negative, the shapes differ, or the
// gradient is not finite.
ModelParams SgdStep(const ModelParams& params, const ModelParams& gradient,
                    double lr);

}  // namespace pipesynth

#endif  // PIPESYNTH_NETWORK_H_
