#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "acpf/config_space.hpp"
#include "acpf/errors.hpp"
#include "acpf/evaluation.hpp"
#include "acpf/hash.hpp"
#include "acpf/instances.hpp"
#include "acpf/model_io.hpp"
#include "acpf/models.hpp"
#include "acpf/recommend.hpp"
#include "acpf/scenario.hpp"
#include "acpf/search.hpp"

namespace acpf {

// Which knowledge model a knowledge-encoding run maintains. `composite` tunes a single
// per-problem configuration through a surrogate and recommends through the
// partition pathway.
struct ModelSpec {
  ModelKind kind = ModelKind::surrogate;
  std::size_t partition_clusters = 1;
  std::size_t mapping_k = 1;
  std::size_t surrogate_k = 5;
};

// Accepts mapping | surrogate | aggregate | partition:C |
// composite:perproblem+surrogate.
inline ModelSpec parse_model_spec(const std::string& text) {
  ModelSpec spec;
  if (text == "mapping") {
    spec.kind = ModelKind::mapping;
  } else if (text == "surrogate") {
    spec.kind = ModelKind::surrogate;
  } else if (text == "aggregate") {
    spec.kind = ModelKind::aggregate;
  } else if (text.rfind("partition:", 0) == 0) {
    spec.kind = ModelKind::partition;
    try {
      const long c = std::stol(text.substr(10));
      if (c < 1) throw std::invalid_argument("non-positive");
      spec.partition_clusters = static_cast<std::size_t>(c);
    } catch (const std::exception&) {
      throw ScenarioError("invalid partition cluster count in '" + text + "'");
    }
  } else if (text == "composite:perproblem+surrogate" || text == "composite") {
    spec.kind = ModelKind::composite;
  } else {
    throw ScenarioError("unknown model spec '" + text + "'");
  }
  return spec;
}

inline std::string model_spec_to_string(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::partition:
      return "partition:" + std::to_string(spec.partition_clusters);
    case ModelKind::composite:
      return "composite:perproblem+surrogate";
    default:
      return model_kind_to_string(spec.kind);
  }
}

struct BudgetUse {
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  double wall_seconds = 0.0;
};

struct SamplePoint {
  std::string instance_id;
  Configuration configuration;
  std::uint64_t seed = 0;
};

struct SampleBatch {
  std::vector<SamplePoint> points;
  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

struct KepState {
  Scenario scenario;
  InstanceSet working_set;
  EvalArchive archive;
  std::optional<Model> model;
  ModelSpec model_spec;
  StrategySpec strategy;
  Budget budget;
  BudgetUse used;
  std::uint64_t seed = 0;
  std::size_t t = 0;
  std::uint64_t rr_cursor = 0;     // round-robin instance cursor
  std::uint64_t sample_stream = 0; // rng stream counter
  std::vector<nlohmann::ordered_json> log;
};

namespace detail {

inline nlohmann::ordered_json budget_snapshot(const KepState& state) {
  nlohmann::ordered_json j;
  j["evaluations"] = state.used.evaluations;
  j["iterations"] = state.used.iterations;
  return j;
}

// Run-log events carry only deterministic fields so identical runs produce
// identical logs.
inline void log_event(KepState& state, const std::string& phase, const std::string& digest) {
  nlohmann::ordered_json j;
  j["iteration"] = state.t;
  j["phase"] = phase;
  j["digest"] = digest;
  j["budget"] = budget_snapshot(state);
  state.log.push_back(std::move(j));
}

inline std::string batch_digest(const ConfigurationSpace& space, const SampleBatch& batch) {
  std::string data;
  for (const auto& p : batch.points)
    data += EvalArchive::key_of(space, p.instance_id, p.configuration, p.seed) + '\n';
  return fnv1a_hex(data);
}

inline std::string records_digest(const ConfigurationSpace& space,
                                  const std::vector<EvalRecord>& records) {
  std::string data;
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.performance);
    data += EvalArchive::key_of(space, r.instance_id, r.configuration, r.seed) + '=' + buf + '\n';
  }
  return fnv1a_hex(data);
}

// Best archived configuration by oriented performance; ties by smallest
// canonical encoding.
inline std::optional<Configuration> best_known_config(const ConfigurationSpace& space,
                                                      const EvalArchive& archive, Sense sense) {
  if (archive.empty()) return std::nullopt;
  std::vector<std::pair<Configuration, double>> scored;
  scored.reserve(archive.size());
  for (const auto& rec : archive.records())
    scored.emplace_back(rec.configuration, oriented(rec.performance, sense));
  return argmax_enumerated(space, scored);
}

} // namespace detail

// Phase 1 of each knowledge-encoding iteration: picks previously unsampled
// (instance, configuration) points. Uniform pairs round-robin instances with
// uniform configurations; epsilon-greedy intensifies around the best known
// configuration. Points already archived are replaced by fresh uniform draws
// (up to 100 retries each), so a smaller batch is legal.
inline SampleBatch sample_t(KepState& state, const StrategySpec& strategy,
                            std::size_t batch_size) {
  SampleBatch batch;
  if (strategy.name == SampleStrategy::search_driven) return batch; // broker-driven
  const auto& space = state.scenario.space;
  const std::size_t n = state.working_set.size();
  if (n == 0) return batch;

  std::set<std::string> pending;
  const auto taken = [&](const SamplePoint& p) {
    const auto key = EvalArchive::key_of(space, p.instance_id, p.configuration, p.seed);
    return pending.count(key) != 0 ||
           state.archive.contains(space, p.instance_id, p.configuration, p.seed);
  };

  std::optional<Configuration> best;
  if (strategy.name == SampleStrategy::epsilon_greedy)
    best = detail::best_known_config(space, state.archive, state.scenario.target.sense);

  for (std::size_t slot = 0; slot < batch_size; ++slot) {
    const Instance& inst = state.working_set[state.rr_cursor % n];
    ++state.rr_cursor;

    SamplePoint point;
    point.instance_id = inst.id;
    point.seed = state.scenario.eval_seed;

    bool accepted = false;
    for (int attempt = 0; attempt <= 100; ++attempt) {
      const std::uint64_t stream = derive_seed(state.seed, 10, state.sample_stream++);
      bool intensify = false;
      if (attempt == 0 && strategy.name == SampleStrategy::epsilon_greedy && best) {
        Rng coin(derive_seed(stream, 12));
        intensify = coin.unit() >= strategy.epsilon;
      }
      if (intensify) {
        auto moved = neighbors(space, *best, derive_seed(stream, 13), 1);
        point.configuration = moved.empty() ? sample_uniform(space, stream, 1)[0] : moved[0];
      } else {
        point.configuration = sample_uniform(space, stream, 1)[0];
      }
      if (!taken(point)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) continue; // smaller batch
    pending.insert(EvalArchive::key_of(space, point.instance_id, point.configuration, point.seed));
    batch.points.push_back(std::move(point));
  }
  return batch;
}

namespace detail {

inline bool instance_coverage_complete(const KepState& state) {
  std::set<std::string> covered;
  for (const auto& rec : state.archive.records()) covered.insert(rec.instance_id);
  for (const auto& inst : state.working_set.instances())
    if (!covered.count(inst.id)) return false;
  return true;
}

inline std::vector<Configuration> enumerable_pool(const Scenario& scenario) {
  if (scenario.pool.kind == CandidatePool::Kind::search)
    throw ScenarioError("this model kind requires an enumerable candidate pool (grid or explicit)");
  return scenario.pool.materialize(scenario.space);
}

// update_t for the sampling-loop model kinds. Mapping needs every instance
// labeled, so it stays absent until coverage is complete.
inline void update_model(KepState& state) {
  const auto& scenario = state.scenario;
  Model model;
  model.space = scenario.space;
  model.scaler = state.working_set.scaler();
  model.scenario_hash = scenario_hash(scenario);
  model.kind = state.model_spec.kind;

  switch (state.model_spec.kind) {
    case ModelKind::mapping: {
      if (!instance_coverage_complete(state)) return;
      model.payload = fit_mapping(scenario.space, state.archive, state.working_set,
                                  state.model_spec.mapping_k, scenario.target.sense);
      break;
    }
    case ModelKind::surrogate: {
      if (state.archive.empty()) return;
      model.payload = fit_surrogate(scenario.space, state.archive, state.working_set,
                                    state.model_spec.surrogate_k, scenario.target.sense);
      break;
    }
    case ModelKind::aggregate: {
      if (state.archive.empty()) return;
      const auto surrogate = fit_surrogate(scenario.space, state.archive, state.working_set,
                                           state.model_spec.surrogate_k, scenario.target.sense);
      model.payload = aggregate(scenario.space, surrogate, enumerable_pool(scenario),
                                state.working_set, AggKind::mean);
      break;
    }
    case ModelKind::composite: {
      if (state.archive.empty()) return;
      const auto surrogate = fit_surrogate(scenario.space, state.archive, state.working_set,
                                           state.model_spec.surrogate_k, scenario.target.sense);
      const auto agg = aggregate(scenario.space, surrogate, enumerable_pool(scenario),
                                 state.working_set, AggKind::mean);
      const Configuration best = argmax_enumerated(scenario.space, agg.scores);
      double best_score = agg.scores.front().second;
      for (const auto& [cfg, score] : agg.scores)
        if (score > best_score) best_score = score;
      // One cluster holding all of the training set, tuned via the surrogate.
      std::vector<std::size_t> all;
      for (std::size_t i = 0; i < state.working_set.size(); ++i) all.push_back(i);
      PartitionModel pm;
      pm.clusters.push_back(
          make_cluster(state.working_set, model.scaler, all, best, best_score));
      model.payload = std::move(pm);
      break;
    }
    case ModelKind::partition:
      throw Error("partition models are fitted by the dedicated tuning path");
  }
  state.model = std::move(model);
}

inline bool wall_exceeded(const Budget& budget, double elapsed) {
  return budget.max_wall_seconds > 0.0 && elapsed >= budget.max_wall_seconds;
}

} // namespace detail

struct KepResult {
  Model model;
  KepState state;
};

namespace detail {

// Evaluates (instance, configuration) points on demand during partition
// tuning, memoized through the archive so disjoint sampling holds; every
// cache miss consumes one unit of the evaluation budget. This is the
// search-driven sampling pathway.
class EvalBroker {
public:
  explicit EvalBroker(KepState& state) : state_(state) {}

  double perf(const Instance& inst, const Configuration& cfg) {
    const auto& space = state_.scenario.space;
    const auto seed = state_.scenario.eval_seed;
    if (const EvalRecord* rec = state_.archive.find(space, inst.id, cfg, seed))
      return oriented(rec->performance, state_.scenario.target.sense);
    if (state_.used.evaluations >= state_.budget.max_evaluations)
      throw Error("evaluation budget exhausted during partition tuning");
    EvalRecord rec = evaluate(space, state_.scenario.target, inst, cfg, seed);
    state_.archive.insert(space, rec);
    ++state_.used.evaluations;
    fresh_.push_back(rec);
    return oriented(rec.performance, state_.scenario.target.sense);
  }

  std::vector<EvalRecord> drain_fresh() { return std::exchange(fresh_, {}); }

private:
  KepState& state_;
  std::vector<EvalRecord> fresh_;
};

// Solves the per-cluster argmax of aggregated performance by local search,
// spending at most `quota` target runs on the cluster.
inline SearchResult tune_cluster(KepState& state, EvalBroker& broker,
                                 const std::vector<const Instance*>& members, std::size_t quota,
                                 std::uint64_t seed) {
  const std::size_t calls = quota / members.size();
  if (calls == 0)
    throw ScenarioError("evaluation budget too small to tune a partition cluster of " +
                        std::to_string(members.size()) + " instances");
  Objective obj(
      [&](const Configuration& cfg) {
        double sum = 0.0;
        for (const Instance* inst : members) sum += broker.perf(*inst, cfg);
        return sum / static_cast<double>(members.size());
      },
      calls);
  return local_search(obj, state.scenario.space, state.scenario.space.defaults(), seed);
}

inline void run_partition_kep(KepState& state) {
  const auto& scenario = state.scenario;
  const std::size_t C = state.model_spec.partition_clusters;
  if (C > state.working_set.size())
    throw ScenarioError("partition cluster count " + std::to_string(C) +
                        " exceeds the training set size " + std::to_string(state.working_set.size()));
  if (state.budget.max_iterations > 0 && C > state.budget.max_iterations)
    throw ScenarioError("partition tuning needs max_iterations >= cluster count");

  const FeatureScaler scaler = state.working_set.scaler();
  EvalBroker broker(state);
  std::size_t cluster_index = 0;
  ClusterTuner tuner;
  tuner.tune = [&](const std::vector<const Instance*>& members, std::uint64_t seed) {
    // Equal split of whatever budget remains across the untuned clusters.
    const std::size_t remaining = state.budget.max_evaluations - state.used.evaluations;
    const std::size_t quota = remaining / (C - cluster_index);
    const SampleBatch placeholder; // sampling happens inside the search
    log_event(state, "sample", batch_digest(scenario.space, placeholder));
    const SearchResult sr = tune_cluster(state, broker, members, quota, seed);
    log_event(state, "evaluate", records_digest(scenario.space, broker.drain_fresh()));
    log_event(state, "update", fnv1a_hex(config_digest(scenario.space, sr.best)));
    ++cluster_index;
    ++state.t;
    ++state.used.iterations;
    return sr;
  };

  Model model;
  model.space = scenario.space;
  model.scaler = scaler;
  model.scenario_hash = scenario_hash(scenario);
  model.kind = ModelKind::partition;
  model.payload = fit_partition(scenario.space, state.working_set, scaler, C, tuner,
                                derive_seed(state.seed, 14));
  state.model = std::move(model);
}

} // namespace detail

// The knowledge-encoding process: cycles sample/evaluate/update until a
// budget dimension is exhausted or nothing unsampled remains, then returns
// the final model and the sealed state. Deterministic for synthetic targets.
inline KepResult run_kep(const Scenario& scenario, const StrategySpec& strategy,
                         const ModelSpec& model_spec, const Budget& budget, std::uint64_t seed,
                         std::optional<KepState> initial = std::nullopt,
                         std::size_t parallelism = 1) {
  if (budget.max_evaluations < 1) throw ScenarioError("budget.max_evaluations must be positive");

  KepState state;
  if (initial) state = std::move(*initial);
  state.scenario = scenario;
  state.model_spec = model_spec;
  state.strategy = strategy;
  state.budget = budget;
  state.seed = seed;
  if (state.working_set.empty()) state.working_set = scenario_instances(scenario);

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  if (model_spec.kind == ModelKind::partition) {
    (void)parallelism; // partition tuning samples through the sequential broker
    detail::run_partition_kep(state);
    state.used.wall_seconds = elapsed();
    KepResult result{*state.model, std::move(state)};
    return result;
  }

  while (true) {
    state.used.wall_seconds = elapsed();
    if (state.used.evaluations >= budget.max_evaluations) break;
    if (budget.max_iterations > 0 && state.t >= budget.max_iterations) break;
    if (detail::wall_exceeded(budget, state.used.wall_seconds)) break;

    const std::size_t room = budget.max_evaluations - state.used.evaluations;
    const SampleBatch batch = sample_t(state, strategy, std::min(strategy.batch_size, room));
    if (batch.empty()) break;
    detail::log_event(state, "sample", detail::batch_digest(scenario.space, batch));

    std::vector<EvalPoint> points;
    points.reserve(batch.size());
    for (const auto& p : batch.points)
      points.push_back({state.working_set.at(p.instance_id), p.configuration, p.seed});
    const auto records = evaluate_batch(scenario.space, scenario.target, points, parallelism);
    for (const auto& rec : records) {
      if (!state.archive.insert(scenario.space, rec))
        throw Error("sample_t emitted an already-archived point"); // disjointness breach
      ++state.used.evaluations;
    }
    detail::log_event(state, "evaluate", detail::records_digest(scenario.space, records));

    detail::update_model(state);
    detail::log_event(state, "update",
                      state.model ? fnv1a_hex(model_to_json(*state.model).dump()) : "none");
    ++state.t;
    ++state.used.iterations;
  }

  if (!state.model) detail::update_model(state);
  if (!state.model)
    throw Error("knowledge-encoding ended without a fitted model; the budget is too small for this model kind");
  state.used.wall_seconds = elapsed();
  KepResult result{*state.model, std::move(state)};
  return result;
}

// One meta-sampling step: recommend for the new instance, evaluate that
// recommendation (one budget unit), grow the working set, refit.
inline KepState meta_sampling_step(KepState state, const Instance& new_instance) {
  if (!state.model) throw Error("meta-sampling requires a fitted model");
  if (state.used.evaluations >= state.budget.max_evaluations)
    throw Error("evaluation budget exhausted");
  const auto& scenario = state.scenario;

  const Recommendation rec =
      recommend(*state.model, new_instance, scenario.pool, state.model->scaler);
  const EvalRecord record =
      evaluate(scenario.space, scenario.target, new_instance, rec.configuration, scenario.eval_seed);
  state.archive.insert(scenario.space, record);
  ++state.used.evaluations;
  if (!state.working_set.contains(new_instance.id)) state.working_set.add(new_instance);

  if (state.model_spec.kind == ModelKind::partition) {
    // Re-clustering would re-tune every cluster; meta steps only refresh the
    // distance structures, keeping the tuned configurations.
    Model model = *state.model;
    model.scaler = state.working_set.scaler();
    state.model = std::move(model);
  } else {
    detail::update_model(state);
  }
  return state;
}

enum class OnlineVariant { reactive, surrogate_online };

inline OnlineVariant online_variant_from_string(const std::string& s) {
  if (s == "reactive") return OnlineVariant::reactive;
  if (s == "surrogate_online") return OnlineVariant::surrogate_online;
  throw ScenarioError("unknown online variant '" + s + "'");
}

struct OnlineTraceRow {
  std::size_t arrival = 0; // 1-based
  std::string config_digest;
  double performance = 0.0;
  bool explored = false;
};

struct OnlineResult {
  Model model;
  std::vector<OnlineTraceRow> trace;
  EvalArchive archive;
  InstanceSet working_set;
  BudgetUse used;
};

// Online knowledge-encoding over an instance stream: recommendation and model update
// coincide, and the recommendation for arrival n depends only on arrivals
// 1..n-1. The reactive variant keeps a single per-problem configuration (the
// pool member with the best running mean, with epsilon-uniform exploration);
// surrogate_online refits the k-NN surrogate on every arrival.
inline OnlineResult run_online(const Scenario& scenario, const std::vector<Instance>& stream,
                               OnlineVariant variant, const Budget& budget, std::uint64_t seed) {
  if (stream.empty()) throw ScenarioError("online run requires a non-empty instance stream");
  if (budget.max_evaluations < 1) throw ScenarioError("budget.max_evaluations must be positive");

  const auto& space = scenario.space;
  const std::vector<Configuration> arms = detail::enumerable_pool(scenario);

  OnlineResult result;
  std::vector<double> arm_sum(arms.size(), 0.0);
  std::vector<std::size_t> arm_count(arms.size(), 0);
  std::vector<std::string> arm_digest;
  arm_digest.reserve(arms.size());
  for (const auto& arm : arms) arm_digest.push_back(config_digest(space, arm));

  auto best_arm = [&]() {
    // Unsampled arms first (optimistic start), then highest running mean;
    // ties keep the smallest index.
    std::size_t best = arms.size();
    for (std::size_t i = 0; i < arms.size(); ++i) {
      if (arm_count[i] == 0) return i;
      if (best == arms.size() ||
          arm_sum[i] / static_cast<double>(arm_count[i]) >
              arm_sum[best] / static_cast<double>(arm_count[best]))
        best = i;
    }
    return best;
  };

  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (result.used.evaluations >= budget.max_evaluations) break;
    const Instance& arrival = stream[i];

    Configuration chosen = space.defaults();
    bool explored = false;
    if (i > 0) {
      if (variant == OnlineVariant::reactive) {
        Rng coin(derive_seed(seed, 20, i));
        if (coin.unit() < scenario.online_exploration) {
          explored = true;
          chosen = arms[coin.index(arms.size())];
        } else {
          chosen = arms[best_arm()];
        }
      } else {
        if (result.archive.empty()) {
          chosen = space.defaults();
        } else {
          const auto surrogate =
              fit_surrogate(space, result.archive, result.working_set, 5, scenario.target.sense);
          chosen = recommend_surrogate(surrogate, space, arrival, scenario.pool).configuration;
        }
      }
    }

    const EvalRecord rec =
        evaluate(space, scenario.target, arrival, chosen, scenario.eval_seed);
    ++result.used.evaluations;
    result.archive.insert(space, rec);
    if (!result.working_set.contains(arrival.id)) result.working_set.add(arrival);

    const std::string digest = config_digest(space, chosen);
    if (variant == OnlineVariant::reactive) {
      for (std::size_t a = 0; a < arms.size(); ++a) {
        if (arm_digest[a] == digest) {
          arm_sum[a] += oriented(rec.performance, scenario.target.sense);
          ++arm_count[a];
          break;
        }
      }
    }
    result.trace.push_back({i + 1, digest, rec.performance, explored});
  }

  Model model;
  model.space = space;
  model.scaler = result.working_set.scaler();
  model.scenario_hash = scenario_hash(scenario);
  if (variant == OnlineVariant::reactive) {
    model.kind = ModelKind::partition;
    PartitionModel pm;
    bool any_sampled = false;
    for (std::size_t c : arm_count) any_sampled = any_sampled || c > 0;
    const std::size_t pick = any_sampled ? best_arm() : arms.size();
    std::vector<std::size_t> all;
    for (std::size_t j = 0; j < result.working_set.size(); ++j) all.push_back(j);
    const Configuration c0 = pick < arms.size() ? arms[pick] : space.defaults();
    const double score =
        pick < arms.size() && arm_count[pick] > 0
            ? arm_sum[pick] / static_cast<double>(arm_count[pick])
            : 0.0;
    pm.clusters.push_back(detail::make_cluster(result.working_set, model.scaler, all, c0, score));
    model.payload = std::move(pm);
  } else {
    model.kind = ModelKind::surrogate;
    model.payload =
        fit_surrogate(space, result.archive, result.working_set, 5, scenario.target.sense);
  }
  result.model = std::move(model);
  return result;
}

enum class BootstrapMode { model, archive };

// Reuses an online run to start a fresh knowledge-encoding run: either its model feeds the
// first update, or its sampled points count as already drawn.
inline KepState bootstrap_from_online(const Scenario& scenario, const OnlineResult& online,
                                      BootstrapMode mode) {
  KepState state;
  state.scenario = scenario;
  state.working_set = scenario_instances(scenario);
  if (mode == BootstrapMode::archive) {
    state.archive = online.archive;
  } else {
    state.model = online.model;
  }
  return state;
}

} // namespace acpf
