#include "acpf/evaluation.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_support.hpp"

namespace {

using namespace acpf;
using acpf::testing::cfg_s2;
using acpf::testing::make_instance;
using acpf::testing::make_s2;
using acpf::testing::make_scond;

TEST(SyntheticTargets, QuadraticValleyClosedForm) {
  const auto space = make_s2();
  const auto target = synthetic_target("quadratic_valley");

  auto rec = evaluate(space, target, make_instance("i", {0.5}), cfg_s2(0.5, "b"), 0);
  EXPECT_EQ(rec.status, RunStatus::ok);
  EXPECT_DOUBLE_EQ(rec.performance, 1.0);

  rec = evaluate(space, target, make_instance("i", {0.2}), cfg_s2(0.2, "a"), 0);
  EXPECT_DOUBLE_EQ(rec.performance, 1.0);

  rec = evaluate(space, target, make_instance("i", {0.2}), cfg_s2(0.7, "b"), 0);
  EXPECT_DOUBLE_EQ(rec.performance, 0.5);
}

TEST(SyntheticTargets, CliffClosedForm) {
  const auto space = make_s2();
  const auto target = synthetic_target("cliff");
  EXPECT_DOUBLE_EQ(evaluate(space, target, make_instance("i", {0.9}), cfg_s2(0.3, "a"), 0).performance, 0.0);
  EXPECT_DOUBLE_EQ(evaluate(space, target, make_instance("i", {0.9}), cfg_s2(0.3, "b"), 0).performance, 1.0);
  EXPECT_DOUBLE_EQ(evaluate(space, target, make_instance("i", {0.1}), cfg_s2(0.3, "a"), 0).performance, 1.0);
}

TEST(SyntheticTargets, UnknownNameThrows) {
  EXPECT_THROW(synthetic_target("nope"), ScenarioError);
}

Instance instance_with_payload(const std::filesystem::path& dir, const std::string& id,
                               const std::string& content) {
  const auto p = dir / (id + ".txt");
  std::ofstream out(p);
  out << content;
  Instance inst;
  inst.id = id;
  inst.path = p.string();
  inst.features = {0.5};
  return inst;
}

class ExternalTargetTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("acpf-ext-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(ExternalTargetTest, ParsesLastResultLine) {
  const auto space = make_s2();
  TargetSpec t;
  t.kind = TargetKind::external;
  t.command_template = "printf 'noise\\nACPF_RESULT status=ok perf=0.25\\nACPF_RESULT status=ok perf=0.75\\n'";
  t.cutoff_seconds = 5.0;
  t.penalized_value = -1.0;
  const auto inst = instance_with_payload(dir_, "e1", "payload");
  const auto rec = evaluate(space, t, inst, cfg_s2(0.5, "a"), 3);
  EXPECT_EQ(rec.status, RunStatus::ok);
  EXPECT_DOUBLE_EQ(rec.performance, 0.75);
}

TEST_F(ExternalTargetTest, SubstitutesPlaceholdersAndActiveParams) {
  // The wrapper sees one --name=value argument per active parameter; the
  // inner shell reports how many arguments arrived plus the payload value.
  const auto space = make_scond();
  TargetSpec t;
  t.kind = TargetKind::external;
  t.command_template =
      "sh -c 'v=$(cat \"$1\"); shift; echo \"ACPF_RESULT status=ok perf=$(($# * 100 + v))\"' w {instance}";
  t.cutoff_seconds = 5.0;
  t.penalized_value = -1.0;
  const auto inst = instance_with_payload(dir_, "e2", "7");

  Configuration off;
  off.assignments["use_heur"] = false;
  off.assignments["w"] = 1.0; // inactive: must not be passed
  auto rec = evaluate(space, t, inst, off, 0);
  EXPECT_EQ(rec.status, RunStatus::ok);
  EXPECT_DOUBLE_EQ(rec.performance, 107.0);

  Configuration on;
  on.assignments["use_heur"] = true;
  on.assignments["w"] = 2.0;
  rec = evaluate(space, t, inst, on, 0);
  EXPECT_DOUBLE_EQ(rec.performance, 207.0);
}

TEST_F(ExternalTargetTest, SilentTargetBecomesCrashed) {
  const auto space = make_s2();
  TargetSpec t;
  t.kind = TargetKind::external;
  t.command_template = "true";
  t.cutoff_seconds = 5.0;
  t.penalized_value = -9.0;
  const auto rec = evaluate(space, t, instance_with_payload(dir_, "e3", ""), cfg_s2(0.5, "a"), 0);
  EXPECT_EQ(rec.status, RunStatus::crashed);
  EXPECT_DOUBLE_EQ(rec.performance, -9.0);
}

TEST_F(ExternalTargetTest, CutoffKillsAndPenalizes) {
  const auto space = make_s2();
  TargetSpec t;
  t.kind = TargetKind::external;
  t.command_template = "sleep 30 #"; // '#' swallows the appended parameter args
  t.cutoff_seconds = 0.3;
  t.penalized_value = -2.0;
  const auto rec = evaluate(space, t, instance_with_payload(dir_, "e4", ""), cfg_s2(0.5, "a"), 0);
  EXPECT_EQ(rec.status, RunStatus::timeout);
  EXPECT_DOUBLE_EQ(rec.performance, -2.0);
  EXPECT_GE(rec.wall_seconds, 0.3);
  EXPECT_LT(rec.wall_seconds, 5.0);
}

TEST_F(ExternalTargetTest, SelfReportedTimeoutIsPenalized) {
  const auto space = make_s2();
  TargetSpec t;
  t.kind = TargetKind::external;
  t.command_template = "echo 'ACPF_RESULT status=timeout perf=0.9'";
  t.cutoff_seconds = 5.0;
  t.penalized_value = -4.0;
  const auto rec = evaluate(space, t, instance_with_payload(dir_, "e5", ""), cfg_s2(0.5, "a"), 0);
  EXPECT_EQ(rec.status, RunStatus::timeout);
  EXPECT_DOUBLE_EQ(rec.performance, -4.0);
}

TEST_F(ExternalTargetTest, SpawnFailureSurfacesAsError) {
  const auto space = make_s2();
  TargetSpec t;
  t.kind = TargetKind::external;
  t.command_template = "definitely-not-a-command-9b1f";
  t.cutoff_seconds = 5.0;
  EXPECT_THROW(evaluate(space, t, instance_with_payload(dir_, "e6", ""), cfg_s2(0.5, "a"), 0),
               TargetError);
}

TEST(EvaluateBatch, MatchesSequentialOrderAndValues) {
  const auto space = make_s2();
  const auto target = synthetic_target("quadratic_valley");
  std::vector<EvalPoint> points;
  for (int i = 0; i < 4; ++i)
    points.push_back({make_instance("i" + std::to_string(i), {0.25 * i}), cfg_s2(0.1 * i, "a"), 0});

  const auto sequential = evaluate_batch(space, target, points, 1);
  const auto parallel = evaluate_batch(space, target, points, 2);
  ASSERT_EQ(sequential.size(), 4u);
  ASSERT_EQ(parallel.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(parallel[i].instance_id, points[i].instance.id);
    EXPECT_EQ(sequential[i].performance, parallel[i].performance); // bitwise
  }
}

TEST(EvaluateBatch, EmptyBatchAndDuplicatePoints) {
  const auto space = make_s2();
  const auto target = synthetic_target("quadratic_valley");
  EXPECT_TRUE(evaluate_batch(space, target, {}, 4).empty());

  std::vector<EvalPoint> twice(2, {make_instance("dup", {0.3}), cfg_s2(0.4, "b"), 7});
  const auto recs = evaluate_batch(space, target, twice, 2);
  EXPECT_EQ(recs[0].performance, recs[1].performance);
}

TEST(Archive, InsertContainsAndDuplicates) {
  const auto space = make_s2();
  EvalArchive archive;
  EvalRecord rec;
  rec.instance_id = "i1";
  rec.configuration = cfg_s2(0.5, "a");
  rec.seed = 1;
  rec.performance = 0.9;

  EXPECT_FALSE(archive.contains(space, "i1", rec.configuration, 1));
  EXPECT_TRUE(archive.insert(space, rec));
  EXPECT_TRUE(archive.contains(space, "i1", rec.configuration, 1));
  EXPECT_FALSE(archive.insert(space, rec));
  EXPECT_EQ(archive.size(), 1u);
  EXPECT_FALSE(archive.contains(space, "i1", rec.configuration, 2)); // seed in the key
}

TEST(Archive, NdjsonReplayReconstructsIdentically) {
  const auto space = make_s2();
  const auto target = synthetic_target("quadratic_valley");
  EvalArchive archive;
  for (int i = 0; i < 10; ++i) {
    auto rec = evaluate(space, target, make_instance("i" + std::to_string(i), {0.1 * i}),
                        cfg_s2(0.07 * i, i % 2 ? "a" : "b"), 0);
    archive.insert(space, rec);
  }
  const auto path = std::filesystem::temp_directory_path() / "acpf-archive-test.ndjson";
  save_archive(path, space, archive);
  const auto replayed = load_archive(path, space);
  ASSERT_EQ(replayed.size(), archive.size());
  for (std::size_t i = 0; i < archive.size(); ++i) {
    EXPECT_EQ(replayed.records()[i].instance_id, archive.records()[i].instance_id);
    EXPECT_EQ(replayed.records()[i].performance, archive.records()[i].performance); // bitwise
    EXPECT_TRUE(replayed.records()[i].configuration == archive.records()[i].configuration);
  }
  std::filesystem::remove(path);
}

} // namespace
