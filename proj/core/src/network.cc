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

#include "pipesynth/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace pipesynth {
namespace {

constexpr double kProbabilityFloor = 1e-12;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Activations kept for backpropagation.
struct Trace {
  std::vector<int> tokens;
  std::vector<Eigen::VectorXd> h;  // h[0] .. h[T]
  std::vector<Eigen::VectorXd> z, r, n;
  Eigen::VectorXd logits;
  double y = 0.0;
};

void CheckShapes(const ModelParams& params, const EncodedState& state,
                 std::span<const std::uint8_t> legal_mask) {
  const auto& shape = params.shape();
  if (legal_mask.size() != static_cast<std::size_t>(shape.actions)) {
    throw std::invalid_argument(
        "legal mask has " + std::to_string(legal_mask.size()) +
        " entries, network expects " + std::to_string(shape.actions));
  }
  if (state.meta.size() != static_cast<std::size_t>(shape.meta)) {
    throw std::invalid_argument("meta-feature width mismatch");
  }
  for (int token : state.tokens) {
    if (token < 0 || token >= shape.vocab) {
      throw std::invalid_argument("token id " + std::to_string(token) +
                                  " outside vocabulary of size " +
                                  std::to_string(shape.vocab));
    }
  }
}

void RunForward(const ModelParams& params, const EncodedState& state,
                Trace& trace) {
  const auto embedding = params.matrix(ParamGroup::kEmbedding);
  const auto wz = params.matrix(ParamGroup::kInputZ);
  const auto wr = params.matrix(ParamGroup::kInputR);
  const auto wn = params.matrix(ParamGroup::kInputN);
  const auto uz = params.matrix(ParamGroup::kRecurrentZ);
  const auto ur = params.matrix(ParamGroup::kRecurrentR);
  const auto un = params.matrix(ParamGroup::kRecurrentN);
  const auto bz = params.vector(ParamGroup::kBiasZ);
  const auto br = params.vector(ParamGroup::kBiasR);
  const auto bn = params.vector(ParamGroup::kBiasN);

  const ConstVectorMap meta(state.meta.data(),
                            static_cast<Eigen::Index>(state.meta.size()));
  Eigen::VectorXd h = (params.matrix(ParamGroup::kMetaWeight) * meta +
                       params.vector(ParamGroup::kMetaBias))
                          .array()
                          .tanh()
                          .matrix();
  trace.tokens.clear();
  trace.h.assign(1, h);
  trace.z.clear();
  trace.r.clear();
  trace.n.clear();

  for (int token : state.tokens) {
    if (token == Vocabulary::kPad) break;
    trace.tokens.push_back(token);
    const Eigen::VectorXd x = embedding.row(token).transpose();
    const Eigen::VectorXd z =
        (wz * x + uz * h + bz).unaryExpr([](double a) { return Sigmoid(a); });
    const Eigen::VectorXd r =
        (wr * x + ur * h + br).unaryExpr([](double a) { return Sigmoid(a); });
    const Eigen::VectorXd n =
        (wn * x + un * r.cwiseProduct(h) + bn).array().tanh().matrix();
    h = (Eigen::VectorXd::Ones(h.size()) - z).cwiseProduct(n) + z.cwiseProduct(h);
    trace.z.push_back(z);
    trace.r.push_back(r);
    trace.n.push_back(n);
    trace.h.push_back(h);
  }

  trace.logits = params.matrix(ParamGroup::kPolicyWeight) * h +
                 params.vector(ParamGroup::kPolicyBias);
  trace.y = params.vector(ParamGroup::kValueWeight).dot(h) +
            params.vector(ParamGroup::kValueBias)(0);
}

std::vector<double> MaskedSoftmax(const Eigen::VectorXd& logits,
                                  std::span<const std::uint8_t> mask) {
  std::vector<double> p(mask.size(), 0.0);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask[a]) max_logit = std::max(max_logit, logits(static_cast<Eigen::Index>(a)));
  }
  if (!std::isfinite(max_logit)) return p;
  double total = 0.0;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask[a]) {
      p[a] = std::exp(logits(static_cast<Eigen::Index>(a)) - max_logit);
      total += p[a];
    }
  }
  for (double& value : p) value /= total;
  return p;
}

double PolicySum(const TrainingExample& example) {
  double total = 0.0;
  for (double value : example.pi) total += value;
  return total;
}

void ValidateBatch(const ModelParams& params,
                   std::span<const TrainingExample> batch, double alpha) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  for (const auto& example : batch) {
    if (example.pi.size() != static_cast<std::size_t>(params.shape().actions)) {
      throw std::invalid_argument("search-probability vector has wrong size");
    }
    if (!(PolicySum(example) > 0.0)) {
      throw std::invalid_argument("training example with sum(pi) = 0");
    }
  }
}

double ExampleLoss(const std::vector<double>& p, double v,
                   const TrainingExample& example) {
  double cross_entropy = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (example.pi[a] != 0.0) {
      cross_entropy -= example.pi[a] * std::log(std::max(p[a], kProbabilityFloor));
    }
  }
  return cross_entropy + (v - example.e) * (v - example.e);
}

}  // namespace

const char* ParamGroupName(ParamGroup group) {
  static constexpr const char* kNames[] = {
      "embedding",   "input_z",     "input_r",     "input_n",
      "recurrent_z", "recurrent_r", "recurrent_n", "bias_z",
      "bias_r",      "bias_n",      "meta_weight", "meta_bias",
      "policy_weight", "policy_bias", "value_weight", "value_bias"};
  return kNames[static_cast<int>(group)];
}

ModelParams::ModelParams(const NetworkShape& shape) : shape_(shape) {
  if (shape.vocab < 1 || shape.embed < 1 || shape.hidden < 1 || shape.meta < 1 ||
      shape.actions < 1) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  std::size_t offset = 0;
  for (int g = 0; g < static_cast<int>(ParamGroup::kCount); ++g) {
    offsets_[g] = offset;
    offset += static_cast<std::size_t>(rows(static_cast<ParamGroup>(g))) *
              static_cast<std::size_t>(cols(static_cast<ParamGroup>(g)));
  }
  offsets_[static_cast<int>(ParamGroup::kCount)] = offset;
  values_.assign(offset, 0.0);
}

ModelParams ModelParams::Random(const NetworkShape& shape, std::uint64_t seed,
                                double scale) {
  ModelParams params(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& value : params.values_) value = dist(rng);
  return params;
}

ModelParams ModelParams::Initial(const NetworkShape& shape, std::uint64_t seed) {
  ModelParams params = Random(shape, seed);
  for (auto group : {ParamGroup::kPolicyWeight, ParamGroup::kPolicyBias,
                     ParamGroup::kValueWeight, ParamGroup::kValueBias}) {
    const auto begin = params.values_.begin() + static_cast<std::ptrdiff_t>(params.offset(group));
    std::fill(begin, begin + static_cast<std::ptrdiff_t>(params.group_size(group)), 0.0);
  }
  return params;
}

int ModelParams::rows(ParamGroup group) const {
  switch (group) {
    case ParamGroup::kEmbedding:
      return shape_.vocab;
    case ParamGroup::kPolicyWeight:
    case ParamGroup::kPolicyBias:
      return shape_.actions;
    case ParamGroup::kValueBias:
      return 1;
    default:
      return shape_.hidden;
  }
}

int ModelParams::cols(ParamGroup group) const {
  switch (group) {
    case ParamGroup::kEmbedding:
    case ParamGroup::kInputZ:
    case ParamGroup::kInputR:
    case ParamGroup::kInputN:
      return shape_.embed;
    case ParamGroup::kRecurrentZ:
    case ParamGroup::kRecurrentR:
    case ParamGroup::kRecurrentN:
    case ParamGroup::kPolicyWeight:
      return shape_.hidden;
    case ParamGroup::kMetaWeight:
      return shape_.meta;
    default:
      return 1;
  }
}

std::size_t ModelParams::group_size(ParamGroup group) const {
  const int g = static_cast<int>(group);
  return offsets_[g + 1] - offsets_[g];
}

RowMatrixMap ModelParams::matrix(ParamGroup group) {
  return RowMatrixMap(values_.data() + offset(group), rows(group), cols(group));
}

ConstRowMatrixMap ModelParams::matrix(ParamGroup group) const {
  return ConstRowMatrixMap(values_.data() + offset(group), rows(group),
                           cols(group));
}

VectorMap ModelParams::vector(ParamGroup group) {
  return VectorMap(values_.data() + offset(group),
                   static_cast<Eigen::Index>(group_size(group)));
}

ConstVectorMap ModelParams::vector(ParamGroup group) const {
  return ConstVectorMap(values_.data() + offset(group),
                        static_cast<Eigen::Index>(group_size(group)));
}

double ModelParams::SquaredNorm() const {
  double total = 0.0;
  for (double value : values_) total += value * value;
  return total;
}

bool ModelParams::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double value) { return std::isfinite(value); });
}

PolicyValue Forward(const ModelParams& params, const EncodedState& state,
                    std::span<const std::uint8_t> legal_mask) {
  CheckShapes(params, state, legal_mask);
  Trace trace;
  RunForward(params, state, trace);
  return {MaskedSoftmax(trace.logits, legal_mask), Sigmoid(trace.y)};
}

double Loss(const ModelParams& params, std::span<const TrainingExample> batch,
            double alpha) {
  ValidateBatch(params, batch, alpha);
  double total = 0.0;
  Trace trace;
  for (const auto& example : batch) {
    CheckShapes(params, example.encoded, example.legal);
    RunForward(params, example.encoded, trace);
    total += ExampleLoss(MaskedSoftmax(trace.logits, example.legal),
                         Sigmoid(trace.y), example);
  }
  return total / static_cast<double>(batch.size()) + alpha * params.SquaredNorm();
}

LossAndGradient ComputeGradient(const ModelParams& params,
                                std::span<const TrainingExample> batch,
                                double alpha) {
  ValidateBatch(params, batch, alpha);
  const auto& shape = params.shape();
  LossAndGradient out{0.0, ModelParams::Zeros(shape)};
  ModelParams& grad = out.gradient;
  const double scale = 1.0 / static_cast<double>(batch.size());

  const auto wz = params.matrix(ParamGroup::kInputZ);
  const auto wr = params.matrix(ParamGroup::kInputR);
  const auto wn = params.matrix(ParamGroup::kInputN);
  const auto uz = params.matrix(ParamGroup::kRecurrentZ);
  const auto ur = params.matrix(ParamGroup::kRecurrentR);
  const auto un = params.matrix(ParamGroup::kRecurrentN);
  const auto wp = params.matrix(ParamGroup::kPolicyWeight);
  const auto wv = params.vector(ParamGroup::kValueWeight);

  auto g_embedding = grad.matrix(ParamGroup::kEmbedding);
  auto g_wz = grad.matrix(ParamGroup::kInputZ);
  auto g_wr = grad.matrix(ParamGroup::kInputR);
  auto g_wn = grad.matrix(ParamGroup::kInputN);
  auto g_uz = grad.matrix(ParamGroup::kRecurrentZ);
  auto g_ur = grad.matrix(ParamGroup::kRecurrentR);
  auto g_un = grad.matrix(ParamGroup::kRecurrentN);
  auto g_bz = grad.vector(ParamGroup::kBiasZ);
  auto g_br = grad.vector(ParamGroup::kBiasR);
  auto g_bn = grad.vector(ParamGroup::kBiasN);
  auto g_wm = grad.matrix(ParamGroup::kMetaWeight);
  auto g_bm = grad.vector(ParamGroup::kMetaBias);
  auto g_wp = grad.matrix(ParamGroup::kPolicyWeight);
  auto g_bp = grad.vector(ParamGroup::kPolicyBias);
  auto g_wv = grad.vector(ParamGroup::kValueWeight);
  auto g_bv = grad.vector(ParamGroup::kValueBias);
  const auto embedding = params.matrix(ParamGroup::kEmbedding);

  Trace trace;
  double total_loss = 0.0;
  for (const auto& example : batch) {
    CheckShapes(params, example.encoded, example.legal);
    RunForward(params, example.encoded, trace);
    const std::vector<double> p = MaskedSoftmax(trace.logits, example.legal);
    const double v = Sigmoid(trace.y);
    total_loss += ExampleLoss(p, v, example);

    // d loss / d p on the unclamped entries, then through the softmax.
    double weighted = 0.0;
    std::vector<double> dp(p.size(), 0.0);
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (example.legal[a] && example.pi[a] != 0.0 && p[a] > kProbabilityFloor) {
        dp[a] = -example.pi[a] / p[a];
        weighted += p[a] * dp[a];
      }
    }
    Eigen::VectorXd d_logits = Eigen::VectorXd::Zero(shape.actions);
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (example.legal[a]) {
        d_logits(static_cast<Eigen::Index>(a)) = scale * p[a] * (dp[a] - weighted);
      }
    }
    const double d_y = scale * 2.0 * (v - example.e) * v * (1.0 - v);

    const Eigen::VectorXd& h_final = trace.h.back();
    g_wp.noalias() += d_logits * h_final.transpose();
    g_bp += d_logits;
    g_wv += d_y * h_final;
    g_bv(0) += d_y;
    Eigen::VectorXd dh = wp.transpose() * d_logits + d_y * wv;

    for (std::size_t t = trace.tokens.size(); t-- > 0;) {
      const Eigen::VectorXd& h_prev = trace.h[t];
      const Eigen::VectorXd& z = trace.z[t];
      const Eigen::VectorXd& r = trace.r[t];
      const Eigen::VectorXd& n = trace.n[t];
      const Eigen::VectorXd x = embedding.row(trace.tokens[t]).transpose();
      const Eigen::VectorXd rh = r.cwiseProduct(h_prev);

      const Eigen::VectorXd dn = dh.cwiseProduct(Eigen::VectorXd::Ones(z.size()) - z);
      const Eigen::VectorXd dz = dh.cwiseProduct(h_prev - n);
      Eigen::VectorXd dh_prev = dh.cwiseProduct(z);

      const Eigen::VectorXd da_n =
          dn.cwiseProduct((1.0 - n.array().square()).matrix());
      g_wn.noalias() += da_n * x.transpose();
      g_un.noalias() += da_n * rh.transpose();
      g_bn += da_n;
      const Eigen::VectorXd d_rh = un.transpose() * da_n;
      Eigen::VectorXd dx = wn.transpose() * da_n;
      dh_prev += d_rh.cwiseProduct(r);

      const Eigen::VectorXd da_r =
          d_rh.cwiseProduct(h_prev).cwiseProduct((r.array() * (1.0 - r.array())).matrix());
      g_wr.noalias() += da_r * x.transpose();
      g_ur.noalias() += da_r * h_prev.transpose();
      g_br += da_r;
      dh_prev.noalias() += ur.transpose() * da_r;
      dx.noalias() += wr.transpose() * da_r;

      const Eigen::VectorXd da_z =
          dz.cwiseProduct((z.array() * (1.0 - z.array())).matrix());
      g_wz.noalias() += da_z * x.transpose();
      g_uz.noalias() += da_z * h_prev.transpose();
      g_bz += da_z;
      dh_prev.noalias() += uz.transpose() * da_z;
      dx.noalias() += wz.transpose() * da_z;

      g_embedding.row(trace.tokens[t]) += dx.transpose();
      dh = dh_prev;
    }

    const Eigen::VectorXd& h0 = trace.h.front();
    const Eigen::VectorXd da_m = dh.cwiseProduct((1.0 - h0.array().square()).matrix());
    const ConstVectorMap meta(example.encoded.meta.data(),
                              static_cast<Eigen::Index>(example.encoded.meta.size()));
    g_wm.noalias() += da_m * meta.transpose();
    g_bm += da_m;
  }

  auto g_all = grad.values();
  const auto theta = params.values();
  for (std::size_t i = 0; i < g_all.size(); ++i) g_all[i] += 2.0 * alpha * theta[i];
  out.loss = total_loss * scale + alpha * params.SquaredNorm();
  return out;
}

ModelParams SgdStep(const ModelParams& params, const ModelParams& gradient,
                    double lr) {
  if (lr < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  if (!(params.shape() == gradient.shape())) {
    throw std::invalid_argument("gradient shape does not match parameters");
  }
  if (!gradient.AllFinite()) {
    throw std::invalid_argument("non-finite gradient; step rejected");
  }
  ModelParams next = params;
  auto values = next.values();
  const auto g = gradient.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * g[i];
  return next;
}

}  // namespace pipesynth
