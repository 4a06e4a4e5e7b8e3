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


// Writes a seeded small network, a random batch, and the library's loss,
// gradient and SGD trajectory as JSON for tests/oracles/network_oracle.py.
//
//   network_case_dump SEED INIT_SCALE ONE_HOT(0|1) STEPS LR > case.json

#include <iostream>
#include <random>
#include <string>

#include "json.hpp"
#include "pipesynth/network.hpp"

using nlohmann::json;
using pipesynth::ModelParams;
using pipesynth::NetworkShape;
using pipesynth::TrainingExample;

int main(int argc, char** argv) {
  if (argc != 6) {
    std::cerr << "usage: network_case_dump SEED INIT_SCALE ONE_HOT STEPS LR\n";
    return 2;
  }
  const std::uint64_t seed = std::stoull(argv[1]);
  const double init_scale = std::stod(argv[2]);
  const bool one_hot = std::string(argv[3]) == "1";
  const int steps = std::stoi(argv[4]);
  const double lr = std::stod(argv[5]);
  const double alpha = 1e-4;

  const NetworkShape shape{10, 8, 12, 8, 9};
  ModelParams params = ModelParams::Random(shape, seed, init_scale);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TrainingExample> batch;
  for (int i = 0; i < 8; ++i) {
    TrainingExample ex;
    for (int t = 0; t < 6; ++t) ex.encoded.tokens.push_back(1 + static_cast<int>(rng() % 9));
    for (auto& m : ex.encoded.meta) m = unit(rng);
    ex.legal.assign(9, 0);
    ex.pi.assign(9, 0.0);
    for (auto& l : ex.legal) l = unit(rng) < 0.6;
    ex.legal[rng() % 9] = 1;
    std::vector<int> legal;
    for (int a = 0; a < 9; ++a) {
      if (ex.legal[a]) legal.push_back(a);
    }
    if (one_hot) {
      ex.pi[legal[rng() % legal.size()]] = 1.0;
    } else {
      double total = 0.0;
      for (int a : legal) total += ex.pi[a] = unit(rng);
      for (int a : legal) ex.pi[a] /= total;
    }
    ex.e = unit(rng);
    batch.push_back(std::move(ex));
  }

  json out;
  out["shape"] = {{"vocab", shape.vocab}, {"embed", shape.embed}, {"hidden", shape.hidden},
                  {"meta", shape.meta}, {"actions", shape.actions}};
  out["alpha"] = alpha;
  out["lr"] = lr;
  out["steps"] = steps;
  json groups = json::array();
  for (int g = 0; g < static_cast<int>(pipesynth::ParamGroup::kCount); ++g) {
    const auto group = static_cast<pipesynth::ParamGroup>(g);
    groups.push_back({{"name", pipesynth::ParamGroupName(group)},
                      {"offset", params.offset(group)},
                      {"rows", params.rows(group)},
                      {"cols", params.cols(group)}});
  }
  out["groups"] = groups;
  out["params"] = std::vector<double>(params.values().begin(), params.values().end());
  json examples = json::array();
  for (const auto& ex : batch) {
    examples.push_back({{"tokens", ex.encoded.tokens},
                        {"meta", ex.encoded.meta},
                        {"legal", ex.legal},
                        {"pi", ex.pi},
                        {"e", ex.e}});
  }
  out["batch"] = examples;
  const auto lg = pipesynth::ComputeGradient(params, batch, alpha);
  out["loss"] = lg.loss;
  out["gradient"] = std::vector<double>(lg.gradient.values().begin(), lg.gradient.values().end());
  std::vector<double> trajectory{pipesynth::Loss(params, batch, alpha)};
  for (int s = 0; s < steps; ++s) {
    params = pipesynth::SgdStep(params, pipesynth::ComputeGradient(params, batch, alpha).gradient, lr);
    trajectory.push_back(pipesynth::Loss(params, batch, alpha));
  }
  out["trajectory"] = trajectory;
  std::cout << out.dump() << "\n";
  return 0;
}
