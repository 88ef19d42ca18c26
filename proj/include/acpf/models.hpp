#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "acpf/config_space.hpp"
#include "acpf/errors.hpp"
#include "acpf/evaluation.hpp"
#include "acpf/instances.hpp"
#include "acpf/search.hpp"

namespace acpf {

// Instance-to-configuration lookup: each training instance is labeled with
// its archive-best configuration, queries return the label of the nearest
// stored instance (k = 1) or the majority label among the k nearest.
struct MappingModel {
  struct Entry {
    std::string id;
    std::vector<double> features; // raw; normalized through the scaler on use
    Configuration label;
  };
  FeatureScaler scaler;
  std::vector<Entry> entries;
  std::size_t k = 1;
};

// k-NN regression of the performance function over the joint
// (normalized instance features ++ encoded configuration) space.
struct SurrogateModel {
  struct Point {
    std::vector<double> joint;
    double value = 0.0; // oriented performance
  };
  FeatureScaler scaler;
  std::size_t feature_dim = 0;
  std::size_t k = 5;
  std::vector<double> weights; // per joint dimension, applied to squared diffs
  std::vector<Point> points;
};

enum class AggKind { mean, median };

inline std::string agg_to_string(AggKind k) { return k == AggKind::mean ? "mean" : "median"; }
inline AggKind agg_from_string(const std::string& s) {
  if (s == "mean") return AggKind::mean;
  if (s == "median") return AggKind::median;
  throw ScenarioError("unknown aggregation kind '" + s + "'");
}

// Per-configuration score aggregated over the training instances.
struct AggregateModel {
  AggKind agg = AggKind::mean;
  std::vector<std::pair<Configuration, double>> scores; // oriented
};

// Partition of the training set into clusters, each carrying a representative
// instance and a tuned configuration.
struct PartitionModel {
  struct Cluster {
    std::vector<std::string> member_ids;
    std::vector<std::vector<double>> member_features; // raw, aligned with ids
    std::string representative_id;
    std::vector<double> representative_features;
    Configuration config;
    double score = 0.0; // aggregated oriented score from tuning
  };
  std::vector<Cluster> clusters;
};

enum class ModelKind { mapping, surrogate, aggregate, partition, composite };

inline std::string model_kind_to_string(ModelKind k) {
  switch (k) {
    case ModelKind::mapping: return "mapping";
    case ModelKind::surrogate: return "surrogate";
    case ModelKind::aggregate: return "aggregate";
    case ModelKind::partition: return "partition";
    case ModelKind::composite: return "composite";
  }
  return "mapping";
}
inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "mapping") return ModelKind::mapping;
  if (s == "surrogate") return ModelKind::surrogate;
  if (s == "aggregate") return ModelKind::aggregate;
  if (s == "partition") return ModelKind::partition;
  if (s == "composite") return ModelKind::composite;
  throw ScenarioError("unknown model kind '" + s + "'");
}

// Self-contained persisted model: the space makes stored configurations
// interpretable, the scaler reproduces the training normalization. A
// composite model recommends through a partition payload tuned by a
// surrogate/aggregate pathway.
struct Model {
  ModelKind kind = ModelKind::mapping;
  std::variant<MappingModel, SurrogateModel, AggregateModel, PartitionModel> payload;
  FeatureScaler scaler;
  std::string scenario_hash;
  ConfigurationSpace space;
};

// --- fitting ---

namespace detail {

struct InstanceBest {
  Configuration config;
  double oriented_score;
};

// Archive-best configuration per instance id, ties by smallest canonical
// encoding.
inline std::map<std::string, InstanceBest> best_per_instance(const ConfigurationSpace& space,
                                                             const EvalArchive& archive,
                                                             Sense sense) {
  std::map<std::string, std::vector<std::pair<Configuration, double>>> by_instance;
  for (const auto& rec : archive.records())
    by_instance[rec.instance_id].emplace_back(rec.configuration, oriented(rec.performance, sense));
  std::map<std::string, InstanceBest> out;
  for (auto& [id, scored] : by_instance) {
    Configuration best = argmax_enumerated(space, scored);
    double best_score = scored.front().second;
    for (const auto& [cfg, s] : scored)
      if (s > best_score) best_score = s;
    out.emplace(id, InstanceBest{std::move(best), best_score});
  }
  return out;
}

} // namespace detail

inline MappingModel fit_mapping(const ConfigurationSpace& space, const EvalArchive& archive,
                                const InstanceSet& instance_set, std::size_t k, Sense sense) {
  if (k < 1) throw Error("fit_mapping requires k >= 1");
  MappingModel model;
  model.scaler = instance_set.scaler();
  model.k = k;
  const auto best = detail::best_per_instance(space, archive, sense);
  for (const auto& inst : instance_set.instances()) {
    auto it = best.find(inst.id);
    if (it == best.end())
      throw Error("instance '" + inst.id + "' has no archive records to label");
    model.entries.push_back({inst.id, inst.features, it->second.config});
  }
  return model;
}

struct MappingPrediction {
  Configuration label;
  std::string nearest_id;
};

inline MappingPrediction predict(const MappingModel& model, const ConfigurationSpace& space,
                                 const std::vector<double>& features) {
  if (model.entries.empty()) throw Error("mapping model has no training entries");
  const auto query = model.scaler.normalize(features);
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(model.entries.size());
  for (std::size_t i = 0; i < model.entries.size(); ++i)
    order.emplace_back(dist_normalized(query, model.scaler.normalize(model.entries[i].features)), i);
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return model.entries[a.second].id < model.entries[b.second].id;
  });

  const std::size_t take = std::min(model.k, order.size());
  if (take == 1)
    return {model.entries[order[0].second].label, model.entries[order[0].second].id};

  // Majority vote on canonical encodings; ties resolved toward the smallest.
  std::map<std::string, std::pair<std::size_t, const Configuration*>> votes;
  for (std::size_t i = 0; i < take; ++i) {
    const auto& label = model.entries[order[i].second].label;
    auto& slot = votes[config_digest(space, label)];
    ++slot.first;
    slot.second = &label;
  }
  const Configuration* winner = nullptr;
  std::size_t winner_count = 0;
  for (const auto& [digest, slot] : votes) {
    if (slot.first > winner_count ||
        (slot.first == winner_count && canonical_less(space, *slot.second, *winner))) {
      winner = slot.second;
      winner_count = slot.first;
    }
  }
  return {*winner, model.entries[order[0].second].id};
}

inline std::vector<double> joint_vector(const ConfigurationSpace& space,
                                        const FeatureScaler& scaler,
                                        const std::vector<double>& features,
                                        const Configuration& cfg) {
  auto joint = scaler.normalize(features);
  const auto enc = encode(space, cfg);
  joint.insert(joint.end(), enc.values.begin(), enc.values.end());
  return joint;
}

inline SurrogateModel fit_surrogate(const ConfigurationSpace& space, const EvalArchive& archive,
                                    const InstanceSet& instance_set, std::size_t k, Sense sense) {
  if (k < 1) throw Error("fit_surrogate requires k >= 1");
  if (archive.empty()) throw Error("fit_surrogate requires a non-empty archive");
  SurrogateModel model;
  model.scaler = instance_set.scaler();
  model.feature_dim = instance_set.feature_dimension();
  model.k = k;
  model.weights.assign(model.feature_dim + space.layout().dimension, 1.0);
  for (const auto& rec : archive.records()) {
    if (!instance_set.contains(rec.instance_id)) continue; // foreign record, no features
    const auto& inst = instance_set.at(rec.instance_id);
    model.points.push_back(
        {joint_vector(space, model.scaler, inst.features, rec.configuration),
         oriented(rec.performance, sense)});
  }
  if (model.points.empty()) throw Error("fit_surrogate: no archive record matches the instance set");
  return model;
}

// Inverse-distance-weighted mean of the k nearest training values. Exact
// interpolation at training points when k = 1.
inline double predict(const SurrogateModel& model, const std::vector<double>& joint) {
  if (model.points.empty()) throw Error("surrogate model has no training points");
  if (joint.size() != model.points.front().joint.size())
    throw Error("surrogate query dimension mismatch");
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(model.points.size());
  for (std::size_t i = 0; i < model.points.size(); ++i) {
    const auto& p = model.points[i].joint;
    double sum = 0.0;
    for (std::size_t d = 0; d < joint.size(); ++d) {
      const double diff = joint[d] - p[d];
      sum += model.weights[d] * diff * diff;
    }
    order.emplace_back(std::sqrt(sum), i);
  }
  // Total order, so the selected k-nearest set does not depend on the
  // training-data insertion order.
  const auto closer = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    const auto& pa = model.points[a.second];
    const auto& pb = model.points[b.second];
    if (pa.joint != pb.joint) return pa.joint < pb.joint;
    return pa.value < pb.value;
  };
  const std::size_t take = std::min(model.k, order.size());
  if (take < order.size())
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take) - 1,
                     order.end(), closer);
  // Canonical accumulation order, so predictions are bitwise independent of
  // the training-data insertion order.
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), closer);
  constexpr double eps = 1e-9;
  double weight_sum = 0.0;
  double value_sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    const double w = 1.0 / (eps + order[i].first);
    weight_sum += w;
    value_sum += w * model.points[order[i].second].value;
  }
  return value_sum / weight_sum;
}

inline double predict(const SurrogateModel& model, const ConfigurationSpace& space,
                      const std::vector<double>& features, const Configuration& cfg) {
  return predict(model, joint_vector(space, model.scaler, features, cfg));
}

namespace detail {

inline double aggregate_values(std::vector<double> values, AggKind kind) {
  if (values.empty()) throw Error("aggregation over an empty value set");
  if (kind == AggKind::mean) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace detail

// Archive-backed aggregation; every configuration must have records on every
// instance of the set.
inline AggregateModel aggregate(const ConfigurationSpace& space, const EvalArchive& archive,
                                const std::vector<Configuration>& configurations,
                                const InstanceSet& instance_set, AggKind kind, Sense sense) {
  std::map<std::string, std::vector<double>> by_key; // instance_id \x1f digest -> perfs
  for (const auto& rec : archive.records())
    by_key[rec.instance_id + '\x1f' + config_digest(space, rec.configuration)].push_back(
        oriented(rec.performance, sense));

  AggregateModel model;
  model.agg = kind;
  for (const auto& cfg : configurations) {
    const std::string digest = config_digest(space, cfg);
    std::vector<double> per_instance;
    for (const auto& inst : instance_set.instances()) {
      auto it = by_key.find(inst.id + '\x1f' + digest);
      if (it == by_key.end())
        throw Error("aggregate: no archive record for instance '" + inst.id +
                    "' under configuration " + digest);
      per_instance.push_back(detail::aggregate_values(it->second, AggKind::mean));
    }
    model.scores.emplace_back(cfg, detail::aggregate_values(std::move(per_instance), kind));
  }
  return model;
}

// Surrogate-backed aggregation; no coverage requirement.
inline AggregateModel aggregate(const ConfigurationSpace& space, const SurrogateModel& surrogate,
                                const std::vector<Configuration>& configurations,
                                const InstanceSet& instance_set, AggKind kind) {
  AggregateModel model;
  model.agg = kind;
  for (const auto& cfg : configurations) {
    std::vector<double> per_instance;
    for (const auto& inst : instance_set.instances())
      per_instance.push_back(predict(surrogate, space, inst.features, cfg));
    model.scores.emplace_back(cfg, detail::aggregate_values(std::move(per_instance), kind));
  }
  return model;
}

// --- clustering ---

namespace detail {

// Seeded k-means on normalized features: greedy farthest-point init, at most
// 50 Lloyd iterations, empty clusters repaired by stealing the farthest point
// of the largest cluster.
inline std::vector<std::vector<std::size_t>> kmeans_clusters(const InstanceSet& set,
                                                             const FeatureScaler& scaler,
                                                             std::size_t C, std::uint64_t seed) {
  const std::size_t n = set.size();
  std::vector<std::vector<double>> points;
  points.reserve(n);
  for (const auto& inst : set.instances()) points.push_back(scaler.normalize(inst.features));
  const std::size_t dim = points.empty() ? 0 : points.front().size();

  Rng rng(derive_seed(seed, 0x6b6d));
  std::vector<std::vector<double>> centers;
  std::vector<bool> chosen(n, false);
  const std::size_t first = rng.index(n);
  centers.push_back(points[first]);
  chosen[first] = true;
  while (centers.size() < C) {
    std::size_t best_idx = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) nearest = std::min(nearest, dist_normalized(points[i], c));
      if (nearest > best_dist) {
        best_dist = nearest;
        best_idx = i;
      }
    }
    centers.push_back(points[best_idx]);
    chosen[best_idx] = true;
  }

  std::vector<std::size_t> assignment(n, 0);
  std::vector<std::size_t> previous;
  for (int iter = 0; iter < 50; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = dist_normalized(points[i], centers[0]);
      for (std::size_t c = 1; c < C; ++c) {
        const double d = dist_normalized(points[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assignment[i] = best;
    }

    // Empty-cluster repair.
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<std::size_t> counts(C, 0);
      for (std::size_t a : assignment) ++counts[a];
      if (counts[c] != 0) continue;
      std::size_t largest = 0;
      for (std::size_t d = 1; d < C; ++d)
        if (counts[d] > counts[largest]) largest = d;
      std::size_t steal = n;
      double steal_dist = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assignment[i] != largest) continue;
        const double d = dist_normalized(points[i], centers[largest]);
        if (d > steal_dist) {
          steal_dist = d;
          steal = i;
        }
      }
      assignment[steal] = c;
    }

    if (assignment == previous) break;
    previous = assignment;

    for (std::size_t c = 0; c < C; ++c) {
      std::vector<double> mean(dim, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assignment[i] != c) continue;
        for (std::size_t d = 0; d < dim; ++d) mean[d] += points[i][d];
        ++count;
      }
      if (count > 0) {
        for (double& v : mean) v /= static_cast<double>(count);
        centers[c] = std::move(mean);
      }
    }
  }

  std::vector<std::vector<std::size_t>> clusters(C);
  for (std::size_t i = 0; i < n; ++i) clusters[assignment[i]].push_back(i);
  return clusters;
}

} // namespace detail

// Tunes one configuration for a cluster of instances; how the objective is
// built (archive lookups, live evaluation, surrogate) is the caller's choice.
struct ClusterTuner {
  std::function<SearchResult(const std::vector<const Instance*>&, std::uint64_t)> tune;
};

// Tuner for frozen archives with full candidate coverage: scores every
// candidate by its aggregated archived performance over the cluster members
// and picks the argmax. Costs no target runs.
inline ClusterTuner archive_enumeration_tuner(const ConfigurationSpace& space,
                                              const EvalArchive& archive,
                                              std::vector<Configuration> candidates,
                                              std::uint64_t eval_seed, Sense sense,
                                              AggKind agg = AggKind::mean) {
  ClusterTuner tuner;
  tuner.tune = [&space, &archive, candidates = std::move(candidates), eval_seed, sense,
                agg](const std::vector<const Instance*>& members, std::uint64_t) {
    std::vector<std::pair<Configuration, double>> scored;
    for (const auto& cfg : candidates) {
      std::vector<double> values;
      for (const Instance* inst : members) {
        const EvalRecord* rec = archive.find(space, inst->id, cfg, eval_seed);
        if (!rec)
          throw Error("archive has no record for instance '" + inst->id +
                      "' under a pool configuration");
        values.push_back(oriented(rec->performance, sense));
      }
      scored.emplace_back(cfg, detail::aggregate_values(std::move(values), agg));
    }
    SearchResult result;
    result.best = argmax_enumerated(space, scored);
    for (const auto& [cfg, score] : scored)
      if (cfg == result.best) result.best_score = score;
    result.evaluations_used = 0;
    result.trace.emplace_back(0, result.best_score);
    return result;
  };
  return tuner;
}

namespace detail {

inline PartitionModel::Cluster make_cluster(const InstanceSet& set, const FeatureScaler& scaler,
                                            const std::vector<std::size_t>& member_indices,
                                            Configuration config, double score) {
  PartitionModel::Cluster cluster;
  for (std::size_t idx : member_indices) {
    cluster.member_ids.push_back(set[idx].id);
    cluster.member_features.push_back(set[idx].features);
  }
  const Instance& rep = medoid(set, cluster.member_ids, scaler);
  cluster.representative_id = rep.id;
  cluster.representative_features = rep.features;
  cluster.config = std::move(config);
  cluster.score = score;
  return cluster;
}

inline void check_partition(const PartitionModel& model, const InstanceSet& set) {
  std::set<std::string> seen;
  for (const auto& cluster : model.clusters) {
    if (cluster.member_ids.empty()) throw Error("partition contains an empty cluster");
    for (const auto& id : cluster.member_ids)
      if (!seen.insert(id).second) throw Error("partition clusters overlap on instance '" + id + "'");
  }
  if (seen.size() != set.size()) throw Error("partition clusters do not cover the instance set");
}

} // namespace detail

inline PartitionModel fit_partition(const ConfigurationSpace& space, const InstanceSet& instance_set,
                                    const FeatureScaler& scaler, std::size_t C,
                                    const ClusterTuner& tuner, std::uint64_t seed) {
  const std::size_t n = instance_set.size();
  if (C < 1 || C > n) throw Error("cluster count " + std::to_string(C) + " outside [1, " + std::to_string(n) + "]");

  std::vector<std::vector<std::size_t>> groups;
  if (C == 1) {
    groups.emplace_back();
    for (std::size_t i = 0; i < n; ++i) groups[0].push_back(i);
  } else if (C == n) {
    for (std::size_t i = 0; i < n; ++i) groups.push_back({i});
  } else {
    groups = detail::kmeans_clusters(instance_set, scaler, C, seed);
  }

  PartitionModel model;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    std::vector<const Instance*> members;
    for (std::size_t idx : groups[c]) members.push_back(&instance_set[idx]);
    const SearchResult sr = tuner.tune(members, derive_seed(seed, 8, c));
    model.clusters.push_back(
        detail::make_cluster(instance_set, scaler, groups[c], sr.best, sr.best_score));
  }
  detail::check_partition(model, instance_set);
  return model;
}

struct PopulationMember {
  Configuration config;
  std::vector<double> per_instance_scores; // oriented, aligned with the set order
};

// Builds a partition from an evolutionary population: each instance joins the
// member scoring best on it (ties by member index); non-empty groups become
// clusters.
inline PartitionModel seed_partition_from_population(const ConfigurationSpace& space,
                                                     const InstanceSet& instance_set,
                                                     const FeatureScaler& scaler,
                                                     const std::vector<PopulationMember>& population) {
  (void)space;
  if (population.empty()) throw Error("cannot seed a partition from an empty population");
  const std::size_t n = instance_set.size();
  for (const auto& member : population)
    if (member.per_instance_scores.size() != n)
      throw Error("population member scores do not cover the instance set");

  std::vector<std::vector<std::size_t>> groups(population.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < population.size(); ++m)
      if (population[m].per_instance_scores[i] > population[best].per_instance_scores[i]) best = m;
    groups[best].push_back(i);
  }

  PartitionModel model;
  for (std::size_t m = 0; m < population.size(); ++m) {
    if (groups[m].empty()) continue;
    std::vector<double> scores;
    for (std::size_t idx : groups[m]) scores.push_back(population[m].per_instance_scores[idx]);
    model.clusters.push_back(detail::make_cluster(
        instance_set, scaler, groups[m], population[m].config,
        detail::aggregate_values(std::move(scores), AggKind::mean)));
  }
  detail::check_partition(model, instance_set);
  return model;
}

} // namespace acpf
