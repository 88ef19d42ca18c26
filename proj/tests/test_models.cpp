#include "acpf/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "acpf/fixtures.hpp"
#include "test_support.hpp"

namespace {

using namespace acpf;
using acpf::testing::cfg_s2;
using acpf::testing::make_instance;
using acpf::testing::make_s2;

// Every pool configuration evaluated on every instance, seed 0.
EvalArchive full_coverage_archive(const ConfigurationSpace& space, const TargetSpec& target,
                                  const InstanceSet& set, const std::vector<Configuration>& pool) {
  EvalArchive archive;
  for (const auto& inst : set.instances())
    for (const auto& cfg : pool) archive.insert(space, evaluate(space, target, inst, cfg, 0));
  return archive;
}

Configuration brute_force_best(const ConfigurationSpace& space, const TargetSpec& target,
                               const Instance& inst, const std::vector<Configuration>& pool) {
  std::vector<std::pair<Configuration, double>> scored;
  for (const auto& cfg : pool)
    scored.emplace_back(cfg, oriented(evaluate(space, target, inst, cfg, 0).performance, target.sense));
  return argmax_enumerated(space, scored);
}

TEST(FitMapping, NearestTrainingInstanceLabel) {
  const auto space = make_s2();
  InstanceSet set;
  set.add(make_instance("A", {0.1}));
  set.add(make_instance("B", {0.9}));
  EvalArchive archive;
  const auto c1 = cfg_s2(0.1, "a");
  const auto c2 = cfg_s2(0.9, "b");
  EvalRecord r;
  r.instance_id = "A";
  r.configuration = c1;
  r.performance = 1.0;
  archive.insert(space, r);
  r.configuration = c2;
  r.performance = 0.2;
  r.seed = 1;
  archive.insert(space, r);
  r.instance_id = "B";
  r.configuration = c2;
  r.performance = 0.8;
  r.seed = 0;
  archive.insert(space, r);

  const auto model = fit_mapping(space, archive, set, 1, Sense::maximize);
  EXPECT_TRUE(predict(model, space, {0.1}).label == c1);
  EXPECT_TRUE(predict(model, space, {0.9}).label == c2);
  EXPECT_EQ(predict(model, space, {0.12}).nearest_id, "A");
}

TEST(FitMapping, SingleTrainingInstanceAnswersEverything) {
  const auto space = make_s2();
  InstanceSet set;
  set.add(make_instance("only", {0.4}));
  EvalArchive archive;
  EvalRecord r;
  r.instance_id = "only";
  r.configuration = cfg_s2(0.4, "a");
  r.performance = 1.0;
  archive.insert(space, r);
  const auto model = fit_mapping(space, archive, set, 1, Sense::maximize);
  for (double f : {0.0, 0.3, 0.99}) EXPECT_TRUE(predict(model, space, {f}).label == cfg_s2(0.4, "a"));
}

TEST(FitMapping, UncoveredInstanceThrows) {
  const auto space = make_s2();
  InstanceSet set;
  set.add(make_instance("A", {0.1}));
  set.add(make_instance("B", {0.9}));
  EvalArchive archive;
  EvalRecord r;
  r.instance_id = "A";
  r.configuration = cfg_s2(0.1, "a");
  archive.insert(space, r);
  try {
    fit_mapping(space, archive, set, 1, Sense::maximize);
    FAIL() << "expected an error for the uncovered instance";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("B"), std::string::npos);
  }
}

TEST(FitMapping, MatchesBruteForceOnFullGrid) {
  const auto suite = make_suite("quadratic", 30, 1, 3);
  const auto pool = grid(suite.space, 11);
  const auto archive = full_coverage_archive(suite.space, suite.target, suite.train, pool);
  const auto model = fit_mapping(suite.space, archive, suite.train, 1, Sense::maximize);
  for (const auto& inst : suite.train.instances()) {
    const auto expected = brute_force_best(suite.space, suite.target, inst, pool);
    EXPECT_TRUE(predict(model, suite.space, inst.features).label == expected)
        << "instance " << inst.id;
  }
}

TEST(FitSurrogate, ExactInterpolationAtTrainingPoint) {
  const auto suite = make_suite("quadratic", 10, 1, 3);
  const auto pool = grid(suite.space, 5);
  const auto archive = full_coverage_archive(suite.space, suite.target, suite.train, pool);
  const auto model = fit_surrogate(suite.space, archive, suite.train, 1, Sense::maximize);
  for (const auto& rec : archive.records()) {
    const auto& inst = suite.train.at(rec.instance_id);
    EXPECT_DOUBLE_EQ(predict(model, suite.space, inst.features, rec.configuration), rec.performance);
  }
}

TEST(FitSurrogate, EquidistantNeighborsAverage) {
  const auto space = make_s2();
  InstanceSet set;
  set.add(make_instance("L", {0.0}));
  set.add(make_instance("R", {1.0}));
  EvalArchive archive;
  EvalRecord r;
  r.instance_id = "L";
  r.configuration = cfg_s2(0.5, "a");
  r.performance = 0.2;
  archive.insert(space, r);
  r.instance_id = "R";
  r.performance = 0.8;
  archive.insert(space, r);
  const auto model = fit_surrogate(space, archive, set, 2, Sense::maximize);
  // Query midway: both training points at equal joint distance.
  EXPECT_NEAR(predict(model, space, {0.5}, cfg_s2(0.5, "a")), 0.5, 1e-9);
}

TEST(FitSurrogate, HeldOutRmseUnderTenth) {
  const auto suite = make_suite("quadratic", 100, 1, 3);
  EvalArchive archive;
  const auto configs = sample_uniform(suite.space, 11, 500);
  for (std::size_t i = 0; i < 500; ++i) {
    const auto& inst = suite.train[i % suite.train.size()];
    archive.insert(suite.space, evaluate(suite.space, suite.target, inst, configs[i], 0));
  }
  const auto model = fit_surrogate(suite.space, archive, suite.train, 5, Sense::maximize);

  Rng rng(77);
  const auto fresh_cfgs = sample_uniform(suite.space, 13, 200);
  double sq = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const auto inst = make_instance("fresh", {rng.unit()});
    const double truth = evaluate(suite.space, suite.target, inst, fresh_cfgs[i], 0).performance;
    const double pred = predict(model, suite.space, inst.features, fresh_cfgs[i]);
    sq += (pred - truth) * (pred - truth);
  }
  EXPECT_LE(std::sqrt(sq / 200.0), 0.1);
}

TEST(FitSurrogate, PredictionInvariantUnderTrainingReorder) {
  const auto suite = make_suite("quadratic", 12, 1, 3);
  const auto pool = grid(suite.space, 4);
  EvalArchive forward;
  EvalArchive backward;
  std::vector<EvalRecord> records;
  for (const auto& inst : suite.train.instances())
    for (const auto& cfg : pool) records.push_back(evaluate(suite.space, suite.target, inst, cfg, 0));
  for (const auto& r : records) forward.insert(suite.space, r);
  for (auto it = records.rbegin(); it != records.rend(); ++it) backward.insert(suite.space, *it);

  const auto m1 = fit_surrogate(suite.space, forward, suite.train, 5, Sense::maximize);
  const auto m2 = fit_surrogate(suite.space, backward, suite.train, 5, Sense::maximize);
  Rng rng(5);
  for (int q = 0; q < 50; ++q) {
    const std::vector<double> f{rng.unit()};
    const auto cfg = sample_uniform(suite.space, 100 + q, 1)[0];
    EXPECT_EQ(predict(m1, suite.space, f, cfg), predict(m2, suite.space, f, cfg));
  }
}

TEST(Aggregate, MeanAndMedian) {
  const auto space = make_s2();
  InstanceSet set;
  set.add(make_instance("A", {0.0}));
  set.add(make_instance("B", {1.0}));
  const auto cfg = cfg_s2(0.5, "a");
  EvalArchive archive;
  EvalRecord r;
  r.instance_id = "A";
  r.configuration = cfg;
  r.performance = 0.2;
  archive.insert(space, r);
  r.instance_id = "B";
  r.performance = 0.4;
  archive.insert(space, r);
  const auto model = aggregate(space, archive, {cfg}, set, AggKind::mean, Sense::maximize);
  EXPECT_DOUBLE_EQ(model.scores[0].second, 0.3);

  InstanceSet three;
  three.add(make_instance("A", {0.0}));
  three.add(make_instance("B", {0.5}));
  three.add(make_instance("C", {1.0}));
  EvalArchive arch3;
  for (const auto& [id, perf] : std::vector<std::pair<std::string, double>>{
           {"A", 0.0}, {"B", 0.0}, {"C", 1.0}}) {
    EvalRecord rec;
    rec.instance_id = id;
    rec.configuration = cfg;
    rec.performance = perf;
    arch3.insert(space, rec);
  }
  const auto median_model = aggregate(space, arch3, {cfg}, three, AggKind::median, Sense::maximize);
  EXPECT_DOUBLE_EQ(median_model.scores[0].second, 0.0);
}

TEST(Aggregate, IncompleteCoverageThrows) {
  const auto space = make_s2();
  InstanceSet set;
  set.add(make_instance("A", {0.0}));
  set.add(make_instance("B", {1.0}));
  EvalArchive archive;
  EvalRecord r;
  r.instance_id = "A";
  r.configuration = cfg_s2(0.5, "a");
  archive.insert(space, r);
  EXPECT_THROW(aggregate(space, archive, {cfg_s2(0.5, "a")}, set, AggKind::mean, Sense::maximize),
               Error);
}

TEST(Aggregate, ArgmaxMatchesBruteForceMean) {
  const auto suite = make_suite("quadratic", 30, 1, 3);
  const auto pool = grid(suite.space, 11);
  const auto archive = full_coverage_archive(suite.space, suite.target, suite.train, pool);
  const auto model = aggregate(suite.space, archive, pool, suite.train, AggKind::mean, Sense::maximize);
  const auto best = argmax_enumerated(suite.space, model.scores);

  // Brute force over all (config, instance) outcomes.
  std::vector<std::pair<Configuration, double>> brute;
  for (const auto& cfg : pool) {
    double sum = 0.0;
    for (const auto& inst : suite.train.instances())
      sum += evaluate(suite.space, suite.target, inst, cfg, 0).performance;
    brute.emplace_back(cfg, sum / static_cast<double>(suite.train.size()));
  }
  EXPECT_TRUE(best == argmax_enumerated(suite.space, brute));
}

TEST(FitPartition, SingleClusterIsWholeSet) {
  const auto suite = make_suite("quadratic", 10, 1, 3);
  const auto pool = grid(suite.space, 11);
  const auto archive = full_coverage_archive(suite.space, suite.target, suite.train, pool);
  const auto tuner = archive_enumeration_tuner(suite.space, archive, pool, 0, Sense::maximize);
  const auto scaler = suite.train.scaler();
  const auto model = fit_partition(suite.space, suite.train, scaler, 1, tuner, 7);
  ASSERT_EQ(model.clusters.size(), 1u);
  EXPECT_EQ(model.clusters[0].member_ids.size(), 10u);
  EXPECT_EQ(model.clusters[0].representative_id,
            medoid(suite.train, model.clusters[0].member_ids, scaler).id);
}

TEST(FitPartition, SingletonClustersAtFullC) {
  const auto suite = make_suite("quadratic", 8, 1, 3);
  const auto pool = grid(suite.space, 5);
  const auto archive = full_coverage_archive(suite.space, suite.target, suite.train, pool);
  const auto tuner = archive_enumeration_tuner(suite.space, archive, pool, 0, Sense::maximize);
  const auto model = fit_partition(suite.space, suite.train, suite.train.scaler(), 8, tuner, 7);
  ASSERT_EQ(model.clusters.size(), 8u);
  for (const auto& cluster : model.clusters) {
    ASSERT_EQ(cluster.member_ids.size(), 1u);
    EXPECT_EQ(cluster.representative_id, cluster.member_ids[0]);
  }
}

TEST(FitPartition, QuadraticSplitsAtHalf) {
  const auto suite = make_suite("quadratic", 30, 1, 3);
  const auto pool = grid(suite.space, 11);
  const auto archive = full_coverage_archive(suite.space, suite.target, suite.train, pool);
  const auto tuner = archive_enumeration_tuner(suite.space, archive, pool, 0, Sense::maximize);
  const auto model = fit_partition(suite.space, suite.train, suite.train.scaler(), 2, tuner, 7);
  ASSERT_EQ(model.clusters.size(), 2u);
  for (const auto& cluster : model.clusters) {
    // Members must lie entirely on one side of f = 0.5 and the tuned m must
    // match that side.
    bool low = suite.train.at(cluster.member_ids[0]).features[0] < 0.5;
    for (const auto& id : cluster.member_ids)
      EXPECT_EQ(suite.train.at(id).features[0] < 0.5, low);
    EXPECT_EQ(std::get<std::string>(cluster.config.at("m")), low ? "a" : "b");
  }
}

TEST(FitPartition, InvalidClusterCountThrows) {
  const auto suite = make_suite("quadratic", 5, 1, 3);
  const auto tuner = archive_enumeration_tuner(suite.space, EvalArchive{}, {}, 0, Sense::maximize);
  EXPECT_THROW(fit_partition(suite.space, suite.train, suite.train.scaler(), 0, tuner, 7), Error);
  EXPECT_THROW(fit_partition(suite.space, suite.train, suite.train.scaler(), 6, tuner, 7), Error);
}

TEST(FitPartition, PerProblemConsistencyWithAggregateArgmax) {
  const auto suite = make_suite("quadratic", 20, 1, 3);
  const auto pool = grid(suite.space, 11);
  const auto archive = full_coverage_archive(suite.space, suite.target, suite.train, pool);
  const auto tuner = archive_enumeration_tuner(suite.space, archive, pool, 0, Sense::maximize);
  const auto partition = fit_partition(suite.space, suite.train, suite.train.scaler(), 1, tuner, 7);
  const auto agg = aggregate(suite.space, archive, pool, suite.train, AggKind::mean, Sense::maximize);
  EXPECT_TRUE(partition.clusters[0].config == argmax_enumerated(suite.space, agg.scores));
}

TEST(SeedPartition, SingleMemberPopulation) {
  const auto suite = make_suite("quadratic", 6, 1, 3);
  PopulationMember only{cfg_s2(0.5, "a"), std::vector<double>(6, 0.7)};
  const auto model =
      seed_partition_from_population(suite.space, suite.train, suite.train.scaler(), {only});
  ASSERT_EQ(model.clusters.size(), 1u);
  EXPECT_EQ(model.clusters[0].member_ids.size(), 6u);
  EXPECT_TRUE(model.clusters[0].config == only.config);
}

TEST(SeedPartition, DominantMemberAbsorbsEverything) {
  const auto suite = make_suite("quadratic", 5, 1, 3);
  PopulationMember weak{cfg_s2(0.2, "a"), std::vector<double>(5, 0.2)};
  PopulationMember strong{cfg_s2(0.8, "b"), std::vector<double>(5, 0.9)};
  const auto model = seed_partition_from_population(suite.space, suite.train, suite.train.scaler(),
                                                    {weak, strong});
  ASSERT_EQ(model.clusters.size(), 1u);
  EXPECT_TRUE(model.clusters[0].config == strong.config);
}

TEST(SeedPartition, EvolutionaryPopulationDefinesClusters) {
  // End to end: evolve a population against the mean cliff objective, score
  // each survivor per instance, and let the survivors define the clusters.
  const auto suite = make_suite("cliff", 20, 1, 3);
  Objective obj(
      [&](const Configuration& c) {
        double sum = 0.0;
        for (const auto& inst : suite.train.instances())
          sum += evaluate(suite.space, suite.target, inst, c, 0).performance;
        return sum / static_cast<double>(suite.train.size());
      },
      400);
  const auto search = evolutionary_search(obj, suite.space, 19, 6);

  std::vector<PopulationMember> population;
  for (const auto& [cfg, score] : search.population) {
    PopulationMember member{cfg, {}};
    for (const auto& inst : suite.train.instances())
      member.per_instance_scores.push_back(
          evaluate(suite.space, suite.target, inst, cfg, 0).performance);
    population.push_back(std::move(member));
  }
  const auto model =
      seed_partition_from_population(suite.space, suite.train, suite.train.scaler(), population);

  std::size_t covered = 0;
  double model_mean = 0.0;
  for (const auto& cluster : model.clusters) {
    covered += cluster.member_ids.size();
    for (const auto& id : cluster.member_ids)
      model_mean +=
          evaluate(suite.space, suite.target, suite.train.at(id), cluster.config, 0).performance;
  }
  model_mean /= static_cast<double>(suite.train.size());
  EXPECT_EQ(covered, suite.train.size());

  // Assigning each instance to the member that scores best on it can never
  // fall below the best single member's mean.
  double best_member_mean = 0.0;
  for (const auto& member : population) {
    double mean = 0.0;
    for (double s : member.per_instance_scores) mean += s;
    best_member_mean = std::max(best_member_mean, mean / static_cast<double>(suite.train.size()));
  }
  EXPECT_GE(model_mean, best_member_mean);
}

TEST(SeedPartition, CliffPopulationSplitsByClass) {
  const auto suite = make_suite("cliff", 20, 1, 3);
  const auto arm_a = cfg_s2(0.5, "a");
  const auto arm_b = cfg_s2(0.5, "b");
  PopulationMember pa{arm_a, {}};
  PopulationMember pb{arm_b, {}};
  for (const auto& inst : suite.train.instances()) {
    pa.per_instance_scores.push_back(
        evaluate(suite.space, suite.target, inst, arm_a, 0).performance);
    pb.per_instance_scores.push_back(
        evaluate(suite.space, suite.target, inst, arm_b, 0).performance);
  }
  const auto model =
      seed_partition_from_population(suite.space, suite.train, suite.train.scaler(), {pa, pb});
  ASSERT_EQ(model.clusters.size(), 2u);
  for (const auto& id : model.clusters[0].member_ids)
    EXPECT_LT(suite.train.at(id).features[0], 0.5);
  for (const auto& id : model.clusters[1].member_ids)
    EXPECT_GE(suite.train.at(id).features[0], 0.5);
  EXPECT_THROW(
      seed_partition_from_population(suite.space, suite.train, suite.train.scaler(), {}), Error);
}

} // namespace
