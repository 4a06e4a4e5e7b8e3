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


#include "pipesynth/executor_client.hpp"

#include <cmath>
#include <filesystem>

#include "gtest/gtest.h"
#include "pipesynth/csv.hpp"
#include "pipesynth/errors.hpp"
#include "pipesynth/metafeatures.hpp"
#include "test_util.hpp"

namespace pipesynth {
namespace {

using testing::DataPath;
using testing::GrammarPath;

ExecutorOptions Loopback(std::vector<std::string> extra) {
  ExecutorOptions options;
  options.argv = {PIPESYNTH_LOOPBACK_EXECUTOR, "--grammar",
                  GrammarPath("classification.grammar").string()};
  options.argv.insert(options.argv.end(), extra.begin(), extra.end());
  options.timeout = std::chrono::milliseconds(2000);
  return options;
}

DatasetEntry Entry() { return LoadManifest(DataPath("manifest.json")).front(); }

TEST(SplitCommandLineTest, QuotesAndSpaces) {
  EXPECT_EQ(SplitCommandLine("python3 -m  exec --x 'a b' \"c d\""),
            (std::vector<std::string>{"python3", "-m", "exec", "--x", "a b", "c d"}));
  EXPECT_TRUE(SplitCommandLine("   ").empty());
}

TEST(ExecutorClientTest, EchoReturnsPlantedScore) {
  ExecutorClient client(Loopback({"--mode", "echo"}));
  client.Start();
  EXPECT_EQ(client.primitives(), testing::ClassificationGrammar()->terminals());
  const auto r = client.Evaluate({"SkImputer", "SVC"}, Entry());
  EXPECT_EQ(r.status, EvalStatus::kOk);
  EXPECT_EQ(r.score, 0.42);
}

TEST(ExecutorClientTest, UnknownPrimitiveIsInvalid) {
  ExecutorClient client(Loopback({}));
  client.Start();
  const auto r = client.Evaluate({"NotAPrimitive", "SVC"}, Entry());
  EXPECT_EQ(r.status, EvalStatus::kInvalidPipeline);
  EXPECT_EQ(r.score, 0.0);
  EXPECT_NE(r.message.find("NotAPrimitive"), std::string::npos);
  // The session stays usable.
  EXPECT_EQ(client.Evaluate({"SVC"}, Entry()).score, 0.42);
}

TEST(ExecutorClientTest, MalformedResponseIsExecutorError) {
  ExecutorClient client(Loopback({"--mode", "malformed"}));
  client.Start();
  const auto r = client.Evaluate({"SVC"}, Entry());
  EXPECT_EQ(r.status, EvalStatus::kExecutorError);
  EXPECT_EQ(r.score, 0.0);
  EXPECT_EQ(client.Evaluate({"SVC"}, Entry()).status, EvalStatus::kExecutorError);
}

TEST(ExecutorClientTest, MismatchedIdIsExecutorError) {
  ExecutorClient client(Loopback({"--mode", "wrong-id"}));
  client.Start();
  EXPECT_EQ(client.Evaluate({"SVC"}, Entry()).status, EvalStatus::kExecutorError);
}

TEST(ExecutorClientTest, TimeoutIsExecutorError) {
  auto options = Loopback({"--mode", "hang"});
  options.timeout = std::chrono::milliseconds(200);
  ExecutorClient client(options);
  client.Start();
  const auto r = client.Evaluate({"SVC"}, Entry());
  EXPECT_EQ(r.status, EvalStatus::kExecutorError);
  EXPECT_NE(r.message.find("timed out"), std::string::npos);
}

TEST(ExecutorClientTest, CrashRetriesOnceThenThrows) {
  ExecutorClient client(Loopback({"--mode", "crash"}));
  client.Start();
  EXPECT_THROW(client.Evaluate({"SVC"}, Entry()), ExecutorError);
}

TEST(ExecutorClientTest, CrashOnceRecovers) {
  const auto state = std::filesystem::temp_directory_path() / "pipesynth_crash_once";
  std::filesystem::remove(state);
  ExecutorClient client(Loopback({"--mode", "crash-once", "--state", state.string()}));
  client.Start();
  EXPECT_EQ(client.Evaluate({"SVC"}, Entry()).score, 0.42);
  std::filesystem::remove(state);
}

TEST(ExecutorClientTest, BadHandshake) {
  ExecutorClient client(Loopback({"--mode", "bad-hello"}));
  EXPECT_THROW(client.Start(), ExecutorError);
}

TEST(ExecutorClientTest, MissingBinary) {
  ExecutorOptions options;
  options.argv = {"/nonexistent/executor"};
  ExecutorClient client(options);
  EXPECT_THROW(client.Start(), ExecutorError);
}

TEST(ExecutorClientTest, MissingPrimitivesListed) {
  ExecutorClient client(Loopback({"--primitives", "SVC,PCA"}));
  client.Start();
  try {
    client.ValidatePrimitives(*testing::ClassificationGrammar());
    FAIL() << "expected ExecutorError";
  } catch (const ExecutorError& e) {
    EXPECT_NE(std::string(e.what()).find("GaussianNB"), std::string::npos);
  }
}

TEST(ExecutorClientTest, SurrogateModeMatchesInProcess) {
  auto client = std::make_shared<ExecutorClient>(Loopback({"--mode", "surrogate"}));
  client->Start();
  ExternalEvaluator external(client, Entry());
  EXPECT_EQ(external.identity(), "external:surrogate_7");
  const auto r = external.Evaluate({"MissingIndicator", "RobustScaler", "SVC"});
  EXPECT_EQ(r.status, EvalStatus::kOk);
  EXPECT_DOUBLE_EQ(r.score, 0.7969256999999998);
  EXPECT_EQ(external.Evaluate({"PCA", "SkImputer", "SVC"}).status, EvalStatus::kInvalidPipeline);
}

TEST(BundledData, MetaFeatures) {
  const auto entry = Entry();
  const auto f = ComputeMetaFeatures(ReadCsv(entry.path), entry.target_column, entry.task);
  EXPECT_DOUBLE_EQ(f[0], std::log1p(150.0));
  EXPECT_DOUBLE_EQ(f[1], std::log1p(5.0));
  EXPECT_DOUBLE_EQ(f[2], 9.0 / 750.0);
  EXPECT_DOUBLE_EQ(f[3], 0.2);
  EXPECT_EQ(f[4], 3.0);
  EXPECT_NEAR(f[5], std::log(3.0), 1e-12);
  EXPECT_EQ(f[6], 30.0);
}

}  // namespace
}  // namespace pipesynth
