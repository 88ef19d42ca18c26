#include "acpf/kep.hpp"

#include <gtest/gtest.h>

#include <set>

#include "acpf/fixtures.hpp"
#include "test_support.hpp"

namespace {

using namespace acpf;
using acpf::testing::cfg_s2;
using acpf::testing::make_instance;

KepState fresh_state(const Scenario& scenario, SampleStrategy strategy = SampleStrategy::uniform) {
  KepState state;
  state.scenario = scenario;
  state.working_set = scenario_instances(scenario);
  state.strategy.name = strategy;
  state.budget = scenario.budget;
  state.seed = 1;
  return state;
}

TEST(SampleT, UniformBatchAvoidsArchive) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  auto state = fresh_state(scenario);
  const auto batch = sample_t(state, state.strategy, 5);
  ASSERT_EQ(batch.size(), 5u);
  std::set<std::string> keys;
  for (const auto& p : batch.points) {
    EXPECT_FALSE(state.archive.contains(scenario.space, p.instance_id, p.configuration, p.seed));
    EXPECT_TRUE(validate(scenario.space, p.configuration).ok());
    keys.insert(EvalArchive::key_of(scenario.space, p.instance_id, p.configuration, p.seed));
  }
  EXPECT_EQ(keys.size(), 5u);
}

TEST(SampleT, ExhaustedSpaceYieldsEmptyBatch) {
  // Single-boolean space: once both configurations are archived for the only
  // instance, nothing unsampled remains.
  nlohmann::ordered_json j;
  j["name"] = "bool";
  j["parameters"] = nlohmann::ordered_json::array(
      {{{"name", "flag"}, {"kind", "boolean"}, {"default", false}}});
  j["target"] = {{"kind", "synthetic"}, {"name", "cliff"}};
  j["instances"] = {{"family", "cliff"}, {"count", 1}, {"seed", 0}, {"scheme", "grid"}};
  j["budget"] = {{"max_evaluations", 10}};
  const auto scenario = parse_scenario(j, std::filesystem::current_path());

  auto state = fresh_state(scenario);
  const auto& inst = state.working_set[0];
  for (bool v : {false, true}) {
    EvalRecord rec;
    rec.instance_id = inst.id;
    rec.configuration.assignments["flag"] = v;
    rec.seed = scenario.eval_seed;
    state.archive.insert(scenario.space, rec);
  }
  EXPECT_TRUE(sample_t(state, state.strategy, 5).empty());
}

TEST(SampleT, EpsilonZeroIntensifiesAroundBest) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  auto state = fresh_state(scenario, SampleStrategy::epsilon_greedy);
  state.strategy.epsilon = 0.0;

  const auto best = cfg_s2(0.4, "a");
  EvalRecord rec;
  rec.instance_id = state.working_set[0].id;
  rec.configuration = best;
  rec.seed = scenario.eval_seed;
  rec.performance = 0.99;
  state.archive.insert(scenario.space, rec);

  const auto batch = sample_t(state, state.strategy, 6);
  ASSERT_EQ(batch.size(), 6u);
  for (const auto& p : batch.points) {
    // One-parameter neighbor of the incumbent: exactly one coordinate moved.
    const bool x_same = std::get<double>(p.configuration.at("x")) == 0.4;
    const bool m_same = std::get<std::string>(p.configuration.at("m")) == "a";
    EXPECT_TRUE(x_same != m_same) << "not a one-move neighbor of the incumbent";
  }
}

TEST(RunKep, BudgetArithmetic) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 40);
  Budget budget;
  budget.max_evaluations = 40;
  const auto result = run_kep(scenario, scenario.strategy, parse_model_spec("surrogate"), budget, 7);
  EXPECT_EQ(result.state.used.evaluations, 40u);
  EXPECT_EQ(result.state.t, 5u);
  EXPECT_EQ(result.state.archive.size(), 40u);
}

TEST(RunKep, PartialFinalBatch) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 20);
  Budget budget;
  budget.max_evaluations = 20; // 8 + 8 + 4
  const auto result = run_kep(scenario, scenario.strategy, parse_model_spec("surrogate"), budget, 7);
  EXPECT_EQ(result.state.used.evaluations, 20u);
  EXPECT_EQ(result.state.t, 3u);
}

TEST(RunKep, MaxIterationsCap) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  Budget budget;
  budget.max_evaluations = 600;
  budget.max_iterations = 4;
  const auto result = run_kep(scenario, scenario.strategy, parse_model_spec("surrogate"), budget, 7);
  EXPECT_EQ(result.state.t, 4u);
  EXPECT_EQ(result.state.archive.size(), 32u);
}

TEST(RunKep, DisjointKeysAcrossIterations) {
  const auto scenario = make_synthetic_scenario("quadratic", 30, 3, 160);
  Budget budget;
  budget.max_evaluations = 160;
  budget.max_iterations = 20;
  const auto result = run_kep(scenario, scenario.strategy, parse_model_spec("surrogate"), budget, 7);
  std::set<std::string> keys;
  for (const auto& rec : result.state.archive.records())
    keys.insert(EvalArchive::key_of(scenario.space, rec.instance_id, rec.configuration, rec.seed));
  EXPECT_EQ(keys.size(), result.state.archive.size());
}

TEST(RunKep, PerProblemPartitionQualityOnQuadratic) {
  const auto scenario = make_synthetic_scenario("quadratic", 30, 3, 600);
  const auto result =
      run_kep(scenario, scenario.strategy, parse_model_spec("partition:1"), scenario.budget, 7);
  ASSERT_EQ(result.model.kind, ModelKind::partition);
  const auto& pm = std::get<PartitionModel>(result.model.payload);
  ASSERT_EQ(pm.clusters.size(), 1u);

  const auto set = scenario_instances(scenario);
  double mean = 0.0;
  for (const auto& inst : set.instances())
    mean += evaluate(scenario.space, scenario.target, inst, pm.clusters[0].config, 0).performance;
  mean /= static_cast<double>(set.size());
  EXPECT_GE(mean, 0.75); // closed-form best single configuration is ~0.79
}

TEST(RunKep, DeterministicModelsAndLogs) {
  const auto scenario = make_synthetic_scenario("quadratic", 20, 3, 200);
  for (const char* spec : {"surrogate", "mapping", "partition:2", "composite"}) {
    const auto a = run_kep(scenario, scenario.strategy, parse_model_spec(spec), scenario.budget, 11);
    const auto b = run_kep(scenario, scenario.strategy, parse_model_spec(spec), scenario.budget, 11);
    EXPECT_EQ(model_to_json(a.model).dump(), model_to_json(b.model).dump()) << spec;
    ASSERT_EQ(a.state.log.size(), b.state.log.size()) << spec;
    for (std::size_t i = 0; i < a.state.log.size(); ++i)
      EXPECT_EQ(a.state.log[i].dump(), b.state.log[i].dump()) << spec;
  }
}

TEST(RunKep, MappingModelWaitsForCoverage) {
  const auto scenario = make_synthetic_scenario("quadratic", 30, 3, 600);
  Budget tiny;
  tiny.max_evaluations = 16; // two batches; 30 instances cannot be covered
  EXPECT_THROW(run_kep(scenario, scenario.strategy, parse_model_spec("mapping"), tiny, 7), Error);

  Budget enough;
  enough.max_evaluations = 64;
  const auto result = run_kep(scenario, scenario.strategy, parse_model_spec("mapping"), enough, 7);
  EXPECT_EQ(result.model.kind, ModelKind::mapping);
}

TEST(MetaSampling, ConsumesExactlyOneUnit) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  auto result = run_kep(scenario, scenario.strategy, parse_model_spec("surrogate"),
                        Budget{600, 10, 0.0}, 7);
  const auto before = result.state.used.evaluations;
  const auto archive_before = result.state.archive.size();
  auto state = meta_sampling_step(std::move(result.state), make_instance("meta-0", {0.33}));
  EXPECT_EQ(state.used.evaluations, before + 1);
  EXPECT_EQ(state.archive.size(), archive_before + 1);
  EXPECT_TRUE(state.working_set.contains("meta-0"));
}

TEST(MetaSampling, MappingModelEvaluatesItsLabel) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  auto result = run_kep(scenario, scenario.strategy, parse_model_spec("mapping"),
                        Budget{600, 10, 0.0}, 7);
  const auto& mm = std::get<MappingModel>(result.model.payload);
  const auto& inst = result.state.working_set[4];
  const auto label = predict(mm, scenario.space, inst.features).label;

  Instance clone = inst; // identical features, fresh id
  clone.id = "meta-clone";
  auto state = meta_sampling_step(std::move(result.state), clone);
  const auto& last = state.archive.records().back();
  EXPECT_EQ(last.instance_id, "meta-clone");
  EXPECT_TRUE(last.configuration == label);
}

TEST(MetaSampling, FiftyFreshInstancesGrowArchiveByFifty) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  auto result = run_kep(scenario, scenario.strategy, parse_model_spec("surrogate"),
                        Budget{600, 10, 0.0}, 7);
  auto state = std::move(result.state);
  const auto base = state.archive.size();
  Rng rng(55);
  for (int i = 0; i < 50; ++i)
    state = meta_sampling_step(std::move(state),
                               make_instance("meta-" + std::to_string(i), {rng.unit()}));
  EXPECT_EQ(state.archive.size(), base + 50);
  EXPECT_EQ(state.working_set.size(), 60u);
}

std::vector<Instance> stream_from(const InstanceSet& set, std::size_t n, const std::string& prefix,
                                  std::uint64_t seed) {
  std::vector<Instance> stream;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Instance inst = set[rng.index(set.size())];
    inst.id = prefix + std::to_string(i);
    stream.push_back(std::move(inst));
  }
  return stream;
}

TEST(RunOnline, StreamOfOneEvaluatesDefaults) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  const auto stream = std::vector<Instance>{make_instance("s0", {0.4})};
  const auto result = run_online(scenario, stream, OnlineVariant::reactive, Budget{10, 0, 0.0}, 3);
  ASSERT_EQ(result.trace.size(), 1u);
  EXPECT_EQ(result.trace[0].config_digest,
            config_digest(scenario.space, scenario.space.defaults()));
}

TEST(RunOnline, ReactiveLocksOntoDominantArm) {
  // Homogeneous cliff stream (all f < 0.5): the m=a arm always scores 1, the
  // m=b arm always 0. Once both are tried, every exploitation step picks m=a.
  nlohmann::ordered_json j = synthetic_scenario_json("cliff", 10, 3, 600);
  j["pool"] = {{"kind", "explicit"},
               {"configs", nlohmann::ordered_json::array(
                               {{{"x", 0.5}, {"m", "a"}}, {{"x", 0.5}, {"m", "b"}}})}};
  const auto scenario = parse_scenario(j, std::filesystem::current_path());

  std::vector<Instance> stream;
  Rng rng(9);
  for (int i = 0; i < 60; ++i)
    stream.push_back(make_instance("s" + std::to_string(i), {0.49 * rng.unit()}));

  const auto result = run_online(scenario, stream, OnlineVariant::reactive, Budget{100, 0, 0.0}, 3);
  const std::string dominant = config_digest(scenario.space, cfg_s2(0.5, "a"));
  std::set<std::string> seen;
  for (const auto& row : result.trace) {
    const bool both_tried = seen.size() >= 2; // both arms seen in prior arrivals
    if (both_tried && !row.explored) EXPECT_EQ(row.config_digest, dominant) << row.arrival;
    seen.insert(row.config_digest);
  }
  const auto& pm = std::get<PartitionModel>(result.model.payload);
  EXPECT_EQ(config_digest(scenario.space, pm.clusters[0].config), dominant);
}

TEST(RunOnline, SurrogateOnlineBeatsUniformBaseline) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  const auto stream = stream_from(scenario_instances(scenario), 120, "arr", 21);
  const auto result =
      run_online(scenario, stream, OnlineVariant::surrogate_online, Budget{200, 0, 0.0}, 3);
  ASSERT_EQ(result.trace.size(), 120u);

  double online_tail = 0.0;
  for (std::size_t i = 60; i < 120; ++i) online_tail += result.trace[i].performance;
  online_tail /= 60.0;

  double baseline = 0.0;
  const auto uniform_cfgs = sample_uniform(scenario.space, 77, 60);
  for (std::size_t i = 60; i < 120; ++i)
    baseline += evaluate(scenario.space, scenario.target, stream[i], uniform_cfgs[i - 60], 0)
                    .performance;
  baseline /= 60.0;
  EXPECT_GE(online_tail, baseline + 0.1);
}

TEST(RunOnline, CausalityViaPrefixReplay) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  const auto stream = stream_from(scenario_instances(scenario), 30, "arr", 5);
  const auto full =
      run_online(scenario, stream, OnlineVariant::surrogate_online, Budget{100, 0, 0.0}, 3);
  for (std::size_t n : {5u, 17u, 29u}) {
    const std::vector<Instance> prefix(stream.begin(), stream.begin() + n);
    const auto partial =
        run_online(scenario, prefix, OnlineVariant::surrogate_online, Budget{100, 0, 0.0}, 3);
    ASSERT_EQ(partial.trace.size(), n);
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_EQ(partial.trace[i].config_digest, full.trace[i].config_digest);
  }
}

TEST(RunOnline, BudgetTruncatesStream) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  const auto stream = stream_from(scenario_instances(scenario), 50, "arr", 5);
  const auto result = run_online(scenario, stream, OnlineVariant::reactive, Budget{20, 0, 0.0}, 3);
  EXPECT_EQ(result.trace.size(), 20u);
  EXPECT_EQ(result.used.evaluations, 20u);
}

TEST(Bootstrap, ArchiveModeKeepsKeysDisjoint) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  const auto stream = stream_from(scenario_instances(scenario), 25, "arr", 5);
  const auto online =
      run_online(scenario, stream, OnlineVariant::surrogate_online, Budget{50, 0, 0.0}, 3);

  auto initial = bootstrap_from_online(scenario, online, BootstrapMode::archive);
  const std::size_t online_records = online.archive.size();
  const auto result = run_kep(scenario, scenario.strategy, parse_model_spec("surrogate"),
                              Budget{40, 0, 0.0}, 7, initial);
  std::set<std::string> keys;
  for (const auto& rec : result.state.archive.records())
    keys.insert(EvalArchive::key_of(scenario.space, rec.instance_id, rec.configuration, rec.seed));
  EXPECT_EQ(keys.size(), online_records + 40u);
}

TEST(Bootstrap, ModelModeCarriesOnlineConfiguration) {
  nlohmann::ordered_json j = synthetic_scenario_json("cliff", 10, 3, 600);
  j["pool"] = {{"kind", "explicit"},
               {"configs", nlohmann::ordered_json::array(
                               {{{"x", 0.5}, {"m", "a"}}, {{"x", 0.5}, {"m", "b"}}})}};
  const auto scenario = parse_scenario(j, std::filesystem::current_path());
  std::vector<Instance> stream;
  for (int i = 0; i < 20; ++i) stream.push_back(make_instance("s" + std::to_string(i), {0.02 * i}));
  const auto online = run_online(scenario, stream, OnlineVariant::reactive, Budget{30, 0, 0.0}, 3);

  const auto state = bootstrap_from_online(scenario, online, BootstrapMode::model);
  ASSERT_TRUE(state.model.has_value());
  const auto rec = recommend(*state.model, make_instance("q", {0.3}), std::nullopt, state.model->scaler);
  const auto& pm = std::get<PartitionModel>(online.model.payload);
  EXPECT_TRUE(rec.configuration == pm.clusters[0].config);
}

TEST(Bootstrap, EmptyOnlineResultEqualsFreshRun) {
  const auto scenario = make_synthetic_scenario("quadratic", 10, 3, 600);
  OnlineResult empty;
  auto initial = bootstrap_from_online(scenario, empty, BootstrapMode::archive);
  const auto boot = run_kep(scenario, scenario.strategy, parse_model_spec("surrogate"),
                            Budget{40, 0, 0.0}, 7, initial);
  const auto fresh = run_kep(scenario, scenario.strategy, parse_model_spec("surrogate"),
                             Budget{40, 0, 0.0}, 7);
  EXPECT_EQ(model_to_json(boot.model).dump(), model_to_json(fresh.model).dump());
}

} // namespace
