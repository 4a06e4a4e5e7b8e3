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


#include "pipesynth/trainer.hpp"

#include <filesystem>
#include <fstream>

#include "gtest/gtest.h"
#include "pipesynth/checkpoint.hpp"
#include "pipesynth/errors.hpp"
#include "test_util.hpp"

namespace pipesynth {
namespace {

using testing::ClassificationGrammar;
using testing::ParseShared;
using testing::ToyGrammar;

TrainingExample Example(double e) {
  TrainingExample ex;
  ex.encoded.tokens = {1, 2};
  ex.legal = {1, 1};
  ex.pi = {0.5, 0.5};
  ex.e = e;
  return ex;
}

TEST(ReplayBufferTest, FifoEviction) {
  ReplayBuffer buffer(3);
  for (int i = 0; i < 4; ++i) buffer.Add(Example(i));
  ASSERT_EQ(buffer.size(), 3u);
  EXPECT_EQ(buffer.at(0).e, 1.0);
  EXPECT_EQ(buffer.at(2).e, 3.0);
  EXPECT_THROW(ReplayBuffer(0), ConfigError);
}

TEST(ReplayBufferTest, SampleWithReplacement) {
  ReplayBuffer buffer(10);
  buffer.Add(Example(0.25));
  std::mt19937_64 rng(1);
  const auto batch = buffer.Sample(5, rng);
  ASSERT_EQ(batch.size(), 5u);
  for (const auto& ex : batch) EXPECT_EQ(ex.e, 0.25);
}

TrainerConfig SmallConfig() {
  TrainerConfig config;
  config.episodes_per_iteration = 2;
  config.gradient_steps = 4;
  config.batch_size = 8;
  config.search.simulations = 8;
  return config;
}

TEST(SynthesizeTest, SingleDerivationOneEpisode) {
  auto grammar = ParseShared("<S> ::= <E>\n<E> ::= GaussianNB\n");
  const Game game(grammar, GameConfig{});
  Dataset dataset = MakeSurrogateDataset(*grammar, 7, TaskSpec::Classification());
  Budget budget;
  budget.episodes = 1;
  const auto result = Synthesize(game, dataset, ModelParams::Random(ShapeFor(game), 1), budget,
                                 SmallConfig(), 3);
  EXPECT_EQ(result.episodes, 1);
  ASSERT_EQ(result.provenance.size(), 1u);
  EXPECT_EQ(result.provenance[0].moves.size(), 2u);
  EXPECT_EQ(result.best_pipeline, Pipeline{"GaussianNB"});
  EXPECT_EQ(result.best_e, 0.5 * 0.478198);
  EXPECT_EQ(result.evaluations, 1);
  EXPECT_EQ(result.evaluations_to_best, 1);
}

TEST(SynthesizeTest, ProvenanceReplays) {
  const Game game(ClassificationGrammar(), GameConfig{});
  Dataset dataset = MakeSurrogateDataset(game.grammar(), 7, TaskSpec::Classification());
  Budget budget;
  budget.episodes = 6;
  const auto result = Synthesize(game, dataset, ModelParams::Random(ShapeFor(game), 2), budget,
                                 SmallConfig(), 5);
  ASSERT_EQ(result.provenance.size(), 6u);
  std::int64_t last_evaluations = 0;
  for (const auto& log : result.provenance) {
    GameState state = game.InitialState(dataset.meta, dataset.task);
    for (const auto& move : log.moves) {
      EXPECT_EQ(game.ActionName(move.action), move.action_name);
      EXPECT_GT(move.pi[move.action], 0.0);
      state = game.Step(state, move.action);
    }
    ASSERT_TRUE(game.IsTerminal(state));
    const auto realized = game.Realize(state);
    ASSERT_TRUE(realized.has_value());
    EXPECT_EQ(*realized, log.pipeline);
    EXPECT_EQ(dataset.evaluator->Evaluate(log.pipeline).score, log.e);
    EXPECT_GE(log.evaluations, last_evaluations);
    last_evaluations = log.evaluations;
  }
}

TEST(SynthesizeTest, BestSeriesMonotone) {
  const Game game(ClassificationGrammar(), GameConfig{});
  Dataset dataset = MakeSurrogateDataset(game.grammar(), 4, TaskSpec::Classification());
  Budget budget;
  budget.evaluations = 15;
  const auto result = Synthesize(game, dataset, ModelParams::Random(ShapeFor(game), 2), budget,
                                 SmallConfig(), 5);
  ASSERT_FALSE(result.best_series.empty());
  for (std::size_t i = 1; i < result.best_series.size(); ++i) {
    EXPECT_GT(result.best_series[i].score, result.best_series[i - 1].score);
    EXPECT_GT(result.best_series[i].evaluations, result.best_series[i - 1].evaluations);
  }
  EXPECT_EQ(result.best_series.back().score, result.best_e);
  EXPECT_GE(result.evaluations, 15);
}

TEST(SynthesizeTest, TargetStopsEarly) {
  const Game game(ToyGrammar(), GameConfig{});
  Dataset dataset = MakeSurrogateDataset(game.grammar(), 7, TaskSpec::Classification());
  Budget budget;
  budget.episodes = 500;
  budget.target_score = 0.4673365 - 1e-9;
  const auto result = Synthesize(game, dataset, ModelParams::Zeros(ShapeFor(game)), budget,
                                 SmallConfig(), 1);
  ASSERT_TRUE(result.evaluations_to_target.has_value());
  EXPECT_LT(result.episodes, 500);
  EXPECT_EQ(result.best_pipeline, (Pipeline{"MissingIndicator", "PCA", "GaussianNB"}));
}

TEST(SynthesizeTest, BudgetErrors) {
  const Game game(ToyGrammar(), GameConfig{});
  Dataset dataset = MakeSurrogateDataset(game.grammar(), 7, TaskSpec::Classification());
  const auto params = ModelParams::Zeros(ShapeFor(game));
  EXPECT_THROW(Synthesize(game, dataset, params, Budget{}, SmallConfig(), 1), ConfigError);
  Budget zero;
  zero.episodes = 0;
  EXPECT_THROW(Synthesize(game, dataset, params, zero, SmallConfig(), 1), ConfigError);
}

TEST(SynthesizeTest, Deterministic) {
  const Game game(ClassificationGrammar(), GameConfig{});
  Budget budget;
  budget.episodes = 5;
  auto run = [&] {
    Dataset dataset = MakeSurrogateDataset(game.grammar(), 9, TaskSpec::Classification());
    return Synthesize(game, dataset, ModelParams::Random(ShapeFor(game), 2), budget, SmallConfig(),
                      11);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.best_pipeline, b.best_pipeline);
  EXPECT_EQ(a.evaluations, b.evaluations);
  ASSERT_EQ(a.provenance.size(), b.provenance.size());
  for (std::size_t i = 0; i < a.provenance.size(); ++i) {
    EXPECT_EQ(a.provenance[i].pipeline, b.provenance[i].pipeline);
  }
}

TEST(TrainerTest, IterationUpdatesParams) {
  const Game game(ToyGrammar(), GameConfig{});
  std::vector<Dataset> datasets;
  for (std::uint64_t s : {1u, 2u}) {
    datasets.push_back(MakeSurrogateDataset(game.grammar(), s, TaskSpec::Classification()));
  }
  const auto initial = ModelParams::Random(ShapeFor(game), 5);
  Trainer trainer(game, initial, SmallConfig(), 3);
  const auto report = trainer.TrainIteration(datasets);
  EXPECT_EQ(report.episodes, 2);
  EXPECT_EQ(trainer.episodes_played(), 2);
  EXPECT_EQ(trainer.iteration(), 1);
  EXPECT_FALSE(trainer.buffer().empty());
  EXPECT_FALSE(trainer.params() == initial);
  EXPECT_TRUE(trainer.params().AllFinite());
}

TEST(TrainerTest, DisabledTrainingKeepsParams) {
  const Game game(ToyGrammar(), GameConfig{});
  std::vector<Dataset> datasets{MakeSurrogateDataset(game.grammar(), 1, TaskSpec::Classification())};
  auto config = SmallConfig();
  config.training_enabled = false;
  const auto initial = ModelParams::Zeros(ShapeFor(game));
  Trainer trainer(game, initial, config, 3);
  trainer.TrainIteration(datasets);
  EXPECT_TRUE(trainer.params() == initial);
}

TEST(TrainerTest, ConfigValidation) {
  const Game game(ToyGrammar(), GameConfig{});
  auto config = SmallConfig();
  config.batch_size = 0;
  EXPECT_THROW(Trainer(game, ModelParams::Zeros(ShapeFor(game)), config, 1), ConfigError);
}

TEST(PretrainTest, NeedsTwoDatasets) {
  const Game game(ToyGrammar(), GameConfig{});
  std::vector<Dataset> one{MakeSurrogateDataset(game.grammar(), 1, TaskSpec::Classification())};
  EXPECT_THROW(Pretrain(game, one, ModelParams::Zeros(ShapeFor(game)), SmallConfig(), 1, {}),
               ConfigError);
}

TEST(PretrainTest, ZeroIterationsReturnsInitial) {
  const Game game(ToyGrammar(), GameConfig{});
  std::vector<Dataset> datasets;
  for (std::uint64_t s : {1u, 2u}) {
    datasets.push_back(MakeSurrogateDataset(game.grammar(), s, TaskSpec::Classification()));
  }
  const auto initial = ModelParams::Random(ShapeFor(game), 5);
  PretrainOptions options;
  options.iterations = 0;
  const auto checkpoint = Pretrain(game, datasets, initial, SmallConfig(), 1, options);
  EXPECT_TRUE(checkpoint.params == initial);
  EXPECT_EQ(checkpoint.iteration, 0u);
}

TEST(PretrainTest, ReportsEachIteration) {
  const Game game(ToyGrammar(), GameConfig{});
  std::vector<Dataset> datasets;
  for (std::uint64_t s : {1u, 2u, 3u}) {
    datasets.push_back(MakeSurrogateDataset(game.grammar(), s, TaskSpec::Classification()));
  }
  PretrainOptions options;
  options.iterations = 3;
  int reports = 0;
  const auto checkpoint =
      Pretrain(game, datasets, ModelParams::Random(ShapeFor(game), 5), SmallConfig(), 1, options,
               [&](const IterationReport& r) {
                 ++reports;
                 EXPECT_EQ(r.iteration, reports);
                 EXPECT_TRUE(std::isfinite(r.loss_after));
               });
  EXPECT_EQ(reports, 3);
  EXPECT_EQ(checkpoint.iteration, 3u);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("pipesynth_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsBitIdentical) {
  const Game game(ClassificationGrammar(), GameConfig{});
  const auto params = ModelParams::Random(ShapeFor(game), 17);
  SaveCheckpoint(MakeCheckpoint(game, params, 4), dir_ / "a.ckpt");
  const auto loaded = LoadCheckpoint(dir_ / "a.ckpt");
  EXPECT_TRUE(loaded.params == params);
  EXPECT_EQ(loaded.iteration, 4u);
  EXPECT_NO_THROW(ValidateCheckpoint(loaded, game));
  const auto state = game.InitialState(SurrogateMetaFeatures(3), TaskSpec::Classification());
  const auto a = Forward(params, game.Encode(state), game.LegalMask(state));
  const auto b = Forward(loaded.params, game.Encode(state), game.LegalMask(state));
  EXPECT_EQ(a.p, b.p);
  EXPECT_EQ(a.v, b.v);
}

TEST_F(CheckpointTest, FingerprintMismatch) {
  const Game game(ClassificationGrammar(), GameConfig{});
  const Game other(ToyGrammar(), GameConfig{});
  SaveCheckpoint(MakeCheckpoint(other, ModelParams::Zeros(ShapeFor(other)), 0), dir_ / "t.ckpt");
  try {
    ValidateCheckpoint(LoadCheckpoint(dir_ / "t.ckpt"), game);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("fingerprint mismatch"), std::string::npos);
  }
}

TEST_F(CheckpointTest, ActionSpaceMismatch) {
  GameConfig edit;
  edit.mode = ActionSpace::kEdit;
  const Game grammar_game(ClassificationGrammar(), GameConfig{});
  const Game edit_game(ClassificationGrammar(), edit);
  const auto ckpt = MakeCheckpoint(grammar_game, ModelParams::Zeros(ShapeFor(grammar_game)), 0);
  EXPECT_THROW(ValidateCheckpoint(ckpt, edit_game), ConfigError);
}

TEST_F(CheckpointTest, CorruptFiles) {
  {
    std::ofstream out(dir_ / "junk.ckpt", std::ios::binary);
    out << "not a checkpoint";
  }
  EXPECT_THROW(LoadCheckpoint(dir_ / "junk.ckpt"), ConfigError);
  EXPECT_THROW(LoadCheckpoint(dir_ / "missing.ckpt"), ConfigError);
  const Game game(ToyGrammar(), GameConfig{});
  SaveCheckpoint(MakeCheckpoint(game, ModelParams::Zeros(ShapeFor(game)), 0), dir_ / "ok.ckpt");
  const auto size = std::filesystem::file_size(dir_ / "ok.ckpt");
  std::filesystem::resize_file(dir_ / "ok.ckpt", size - 5);
  EXPECT_THROW(LoadCheckpoint(dir_ / "ok.ckpt"), ConfigError);
}

}  // namespace
}  // namespace pipesynth
