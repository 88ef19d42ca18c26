#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "acpf/config_space.hpp"
#include "acpf/errors.hpp"
#include "acpf/instances.hpp"
#include "acpf/models.hpp"
#include "acpf/search.hpp"

namespace acpf {

// The finite candidate set considered at recommendation time: an explicit
// list, a grid directive, or a local-search directive over the space.
struct CandidatePool {
  enum class Kind { explicit_list, grid, search };
  Kind kind = Kind::grid;
  std::vector<Configuration> configs; // explicit_list
  std::size_t grid_steps = 11;
  std::size_t search_budget = 200;

  // Concrete candidates for the enumerating kinds; empty for `search`.
  std::vector<Configuration> materialize(const ConfigurationSpace& space) const {
    switch (kind) {
      case Kind::explicit_list: {
        if (configs.empty()) throw Error("explicit candidate pool is empty");
        std::vector<std::string> digests;
        for (const auto& c : configs) digests.push_back(config_digest(space, c));
        std::sort(digests.begin(), digests.end());
        if (std::adjacent_find(digests.begin(), digests.end()) != digests.end())
          throw Error("explicit candidate pool contains duplicates");
        return configs;
      }
      case Kind::grid:
        return grid(space, grid_steps);
      case Kind::search:
        return {};
    }
    return {};
  }
};

struct Recommendation {
  Configuration configuration;
  std::string source; // model kind
  std::optional<std::size_t> cluster_id;
  std::optional<double> predicted_performance;
  std::optional<std::string> nearest_id;
  double elapsed_seconds = 0.0;
};

inline nlohmann::ordered_json recommendation_to_json(const ConfigurationSpace& space,
                                                     const Recommendation& rec) {
  nlohmann::ordered_json j;
  j["configuration"] = config_to_json(space, rec.configuration);
  j["source"] = rec.source;
  nlohmann::ordered_json detail;
  if (rec.cluster_id) detail["cluster"] = *rec.cluster_id;
  if (rec.predicted_performance) detail["predicted_performance"] = *rec.predicted_performance;
  if (rec.nearest_id) detail["nearest_instance"] = *rec.nearest_id;
  j["detail"] = detail;
  j["elapsed_seconds"] = rec.elapsed_seconds;
  return j;
}

namespace detail {

class StopwatchGuard {
public:
  explicit StopwatchGuard(double& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
  ~StopwatchGuard() {
    sink_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  double& sink_;
  std::chrono::steady_clock::time_point start_;
};

} // namespace detail

inline Recommendation recommend_mapping(const MappingModel& model, const ConfigurationSpace& space,
                                        const Instance& query) {
  Recommendation rec;
  detail::StopwatchGuard timer(rec.elapsed_seconds);
  const auto pred = predict(model, space, query.features);
  rec.configuration = pred.label;
  rec.source = "mapping";
  rec.nearest_id = pred.nearest_id;
  return rec;
}

// Argmax of the predicted performance over the pool; a `search` pool runs
// local search on the surrogate response surface instead of enumerating.
inline Recommendation recommend_surrogate(const SurrogateModel& model,
                                          const ConfigurationSpace& space, const Instance& query,
                                          const CandidatePool& pool, std::size_t search_budget = 0,
                                          std::uint64_t seed = 0) {
  Recommendation rec;
  detail::StopwatchGuard timer(rec.elapsed_seconds);
  rec.source = "surrogate";

  if (pool.kind == CandidatePool::Kind::search) {
    const std::size_t budget = search_budget ? search_budget : pool.search_budget;
    Objective obj([&](const Configuration& c) { return predict(model, space, query.features, c); },
                  budget);
    const auto result = local_search(obj, space, space.defaults(), seed);
    rec.configuration = result.best;
    rec.predicted_performance = result.best_score;
    return rec;
  }

  const auto candidates = pool.materialize(space);
  std::vector<std::pair<Configuration, double>> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates)
    scored.emplace_back(c, predict(model, space, query.features, c));
  rec.configuration = argmax_enumerated(space, scored);
  for (const auto& [cfg, score] : scored)
    if (cfg == rec.configuration) {
      rec.predicted_performance = score;
      break;
    }
  return rec;
}

enum class PartitionQuery { representative, average };

// Nearest-representative cluster lookup (or smallest average distance to the
// members); returns the cluster's tuned configuration.
inline Recommendation recommend_partition(const PartitionModel& model,
                                          const ConfigurationSpace& space, const Instance& query,
                                          const FeatureScaler& scaler,
                                          PartitionQuery mode = PartitionQuery::representative) {
  (void)space;
  if (model.clusters.empty()) throw Error("partition model has no clusters");
  Recommendation rec;
  detail::StopwatchGuard timer(rec.elapsed_seconds);
  const auto q = scaler.normalize(query.features);

  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < model.clusters.size(); ++i) {
    const auto& cluster = model.clusters[i];
    double d = 0.0;
    if (mode == PartitionQuery::representative) {
      d = dist_normalized(q, scaler.normalize(cluster.representative_features));
    } else {
      for (const auto& mf : cluster.member_features) d += dist_normalized(q, scaler.normalize(mf));
      d /= static_cast<double>(cluster.member_features.size());
    }
    if (d < best_d) { // strict: ties keep the smallest cluster index
      best_d = d;
      best = i;
    }
  }
  rec.configuration = model.clusters[best].config;
  rec.source = "partition";
  rec.cluster_id = best;
  return rec;
}

inline Recommendation recommend_aggregate(const AggregateModel& model,
                                          const ConfigurationSpace& space) {
  Recommendation rec;
  detail::StopwatchGuard timer(rec.elapsed_seconds);
  rec.configuration = argmax_enumerated(space, model.scores);
  rec.source = "aggregate";
  for (const auto& [cfg, score] : model.scores)
    if (cfg == rec.configuration) {
      rec.predicted_performance = score;
      break;
    }
  return rec;
}

// Kind dispatch. The pool is required for surrogate models, the scaler for
// partition-backed ones; mapping and surrogate models carry their own scaler
// from fitting.
inline Recommendation recommend(const Model& model, const Instance& query,
                                const std::optional<CandidatePool>& pool = std::nullopt,
                                const std::optional<FeatureScaler>& scaler = std::nullopt) {
  switch (model.kind) {
    case ModelKind::mapping:
      return recommend_mapping(std::get<MappingModel>(model.payload), model.space, query);
    case ModelKind::surrogate: {
      if (!pool) throw Error("surrogate recommendation requires a candidate pool");
      return recommend_surrogate(std::get<SurrogateModel>(model.payload), model.space, query, *pool);
    }
    case ModelKind::aggregate:
      return recommend_aggregate(std::get<AggregateModel>(model.payload), model.space);
    case ModelKind::partition:
    case ModelKind::composite: {
      if (!scaler) throw Error("partition recommendation requires a feature scaler");
      auto rec = recommend_partition(std::get<PartitionModel>(model.payload), model.space, query,
                                     *scaler);
      rec.source = model_kind_to_string(model.kind);
      return rec;
    }
  }
  throw Error("unknown model kind");
}

} // namespace acpf
