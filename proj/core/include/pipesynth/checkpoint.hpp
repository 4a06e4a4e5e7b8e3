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

#ifndef PIPESYNTH_CHECKPOINT_H_
#define PIPESYNTH_CHECKPOINT_H_

// Binary checkpoint files.
//
// Layout (all integers and reals little-endian):
//
//   char[8]  magic "PSYNCKPT"
//   u32      format version (1)
//   u64 x 5  vocab size, embed d, hidden H, meta m, actions A
//   u64      vocabulary token count, then per token: u32 length + bytes
//   u64      grammar fingerprint
//   u64      meta-feature slot count, then per slot: u32 length + bytes
//   u64      training iteration counter
//   f64[]    parameter groups in ParamGroup order, each row-major

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pipesynth/game.hpp"
#include "pipesynth/network.hpp"

namespace pipesynth {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
  std::uint64_t grammar_fingerprint = 0;
  std::vector<std::string> meta_slots;
  std::uint64_t iteration = 0;
};

// Default network shape for a game's vocabulary and action space.
NetworkShape ShapeFor(const Game& game, int embed = 32, int hidden = 64);

// Checkpoint wrapping `params` for `game`, with the current slot list.
Checkpoint MakeCheckpoint(const Game& game, ModelParams params,
                          std::uint64_t iteration);

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path);

// Throws ConfigError on unreadable, truncated or malformed files.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Throws ConfigError naming the mismatch when the checkpoint was built for a
// different grammar, vocabulary, action space or meta-feature slot list.
void ValidateCheckpoint(const Checkpoint& checkpoint, const Game& game);

}  // namespace pipesynth

#endif  // PIPESYNTH_CHECKPOINT_H_
