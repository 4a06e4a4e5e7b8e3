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

#include "pipesynth/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pipesynth/errors.hpp"

namespace pipesynth {
namespace {

constexpr std::array<char, 8> kMagic = {'P', 'S', 'Y', 'N', 'C', 'K', 'P', 'T'};

template <typename T>
T ToLittleEndian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void Put(T value) {
    value = ToLittleEndian(value);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void PutString(const std::string& s) {
    Put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void PutStrings(const std::vector<std::string>& strings) {
    Put<std::uint64_t>(strings.size());
    for (const auto& s : strings) PutString(s);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  template <typename T>
  T Get() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) Fail("truncated");
    return ToLittleEndian(value);
  }
  std::string GetString() {
    const auto size = Get<std::uint32_t>();
    if (size > (1u << 20)) Fail("string too long");
    std::string s(size, '\0');
    in_.read(s.data(), size);
    if (!in_) Fail("truncated");
    return s;
  }
  std::vector<std::string> GetStrings() {
    const auto count = Get<std::uint64_t>();
    if (count > (1u << 20)) Fail("table too large");
    std::vector<std::string> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) out.push_back(GetString());
    return out;
  }
  [[noreturn]] void Fail(const std::string& what) {
    throw ConfigError("checkpoint " + source_ + ": " + what);
  }

 private:
  std::istream& in_;
  std::string source_;
};

std::string Hex(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << value;
  return out.str();
}

}  // namespace

NetworkShape ShapeFor(const Game& game, int embed, int hidden) {
  NetworkShape shape;
  shape.vocab = game.vocab().size();
  shape.embed = embed;
  shape.hidden = hidden;
  shape.meta = static_cast<int>(kNumMetaFeatures);
  shape.actions = game.num_actions();
  return shape;
}

Checkpoint MakeCheckpoint(const Game& game, ModelParams params,
                          std::uint64_t iteration) {
  Checkpoint checkpoint;
  checkpoint.params = std::move(params);
  checkpoint.vocab = game.vocab();
  checkpoint.grammar_fingerprint = game.grammar().Fingerprint();
  for (auto slot : MetaFeatureSlots()) checkpoint.meta_slots.emplace_back(slot);
  checkpoint.iteration = iteration;
  return checkpoint;
}

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.Put<std::uint32_t>(kCheckpointVersion);
  const auto& shape = checkpoint.params.shape();
  for (int dim : {shape.vocab, shape.embed, shape.hidden, shape.meta, shape.actions}) {
    w.Put<std::uint64_t>(static_cast<std::uint64_t>(dim));
  }
  w.PutStrings(checkpoint.vocab.tokens());
  w.Put<std::uint64_t>(checkpoint.grammar_fingerprint);
  w.PutStrings(checkpoint.meta_slots);
  w.Put<std::uint64_t>(checkpoint.iteration);
  for (double value : checkpoint.params.values()) w.Put<double>(value);
  out.flush();
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  Reader r(in, path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) r.Fail("bad magic");
  const auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    r.Fail("unsupported version " + std::to_string(version));
  }
  NetworkShape shape;
  int* dims[] = {&shape.vocab, &shape.embed, &shape.hidden, &shape.meta,
                 &shape.actions};
  for (int* dim : dims) {
    const auto value = r.Get<std::uint64_t>();
    if (value == 0 || value > (1u << 20)) r.Fail("implausible dimension");
    *dim = static_cast<int>(value);
  }
  Checkpoint checkpoint;
  checkpoint.vocab = Vocabulary(r.GetStrings());
  checkpoint.grammar_fingerprint = r.Get<std::uint64_t>();
  checkpoint.meta_slots = r.GetStrings();
  checkpoint.iteration = r.Get<std::uint64_t>();
  if (checkpoint.vocab.size() != shape.vocab) {
    r.Fail("vocabulary table size disagrees with header");
  }
  checkpoint.params = ModelParams(shape);
  for (double& value : checkpoint.params.values()) value = r.Get<double>();
  if (in.peek() != std::char_traits<char>::eof()) r.Fail("trailing bytes");
  if (!checkpoint.params.AllFinite()) r.Fail("non-finite parameters");
  return checkpoint;
}

void ValidateCheckpoint(const Checkpoint& checkpoint, const Game& game) {
  const auto expected = game.grammar().Fingerprint();
  if (checkpoint.grammar_fingerprint != expected) {
    throw ConfigError("grammar fingerprint mismatch: checkpoint has " +
                      Hex(checkpoint.grammar_fingerprint) + ", grammar has " +
                      Hex(expected));
  }
  if (!(checkpoint.vocab == game.vocab())) {
    throw ConfigError("checkpoint vocabulary does not match the grammar");
  }
  if (checkpoint.params.shape().actions != game.num_actions()) {
    throw ConfigError("checkpoint action space has " +
                      std::to_string(checkpoint.params.shape().actions) +
                      " actions, game has " + std::to_string(game.num_actions()) +
                      " (different action space mode or max_terminals?)");
  }
  std::vector<std::string> slots;
  for (auto slot : MetaFeatureSlots()) slots.emplace_back(slot);
  if (checkpoint.meta_slots != slots) {
    throw ConfigError("checkpoint meta-feature slots do not match");
  }
}

}  // namespace pipesynth
