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

#ifndef PIPESYNTH_HASHING_H_
#define PIPESYNTH_HASHING_H_

#include <cstdint>
#include <string_view>

namespace pipesynth {

// 64-bit FNV-1a over the UTF-8 bytes of `text`.
std::uint64_t Fnv1a64(std::string_view text);

// One output of the splitmix64 generator seeded with `x`.
std::uint64_t SplitMix64(std::uint64_t x);

// Maps (seed, name) to a reproducible value in [0, 1) with a resolution of
// 1e-6. Pure integer arithmetic followed by a single division.
double HashToUnit(std::uint64_t seed, std::string_view name);

}  // namespace pipesynth

#endif  // PIPESYNTH_HASHING_H_
