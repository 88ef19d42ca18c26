#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "acpf/config_space.hpp"
#include "acpf/errors.hpp"
#include "acpf/evaluation.hpp"
#include "acpf/fixtures.hpp"
#include "acpf/hash.hpp"
#include "acpf/instances.hpp"
#include "acpf/recommend.hpp"

namespace acpf {

// Computational budget for a knowledge-encoding run. Zero means unbounded for the
// iteration and wall-clock dimensions; the evaluation dimension is required.
struct Budget {
  std::size_t max_evaluations = 0;
  std::size_t max_iterations = 0;
  double max_wall_seconds = 0.0;
};

enum class SampleStrategy { uniform, epsilon_greedy, search_driven };

inline std::string strategy_to_string(SampleStrategy s) {
  switch (s) {
    case SampleStrategy::uniform: return "uniform";
    case SampleStrategy::epsilon_greedy: return "epsilon_greedy";
    case SampleStrategy::search_driven: return "search_driven";
  }
  return "uniform";
}
inline SampleStrategy strategy_from_string(const std::string& s) {
  if (s == "uniform") return SampleStrategy::uniform;
  if (s == "epsilon_greedy") return SampleStrategy::epsilon_greedy;
  if (s == "search_driven") return SampleStrategy::search_driven;
  throw ScenarioError("unknown sampling strategy '" + s + "'");
}

struct StrategySpec {
  SampleStrategy name = SampleStrategy::uniform;
  double epsilon = 0.3;
  std::size_t batch_size = 8;
};

struct SyntheticInstancesDecl {
  std::string family;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  bool grid_scheme = true;
};

// The self-contained run description: parameter space, target, instances,
// budget, sampling strategy, and candidate pool.
struct Scenario {
  std::string name;
  ConfigurationSpace space;
  TargetSpec target;
  std::optional<std::filesystem::path> manifest_path;
  std::optional<SyntheticInstancesDecl> synthetic_instances;
  Budget budget;
  StrategySpec strategy;
  CandidatePool pool;
  double online_exploration = 0.2;
  std::uint64_t eval_seed = 0;
  nlohmann::ordered_json raw;
};

inline std::string scenario_hash(const Scenario& scenario) {
  return fnv1a_hex(scenario.raw.dump());
}

inline InstanceSet scenario_instances(const Scenario& scenario) {
  if (scenario.manifest_path) return load_instance_set(*scenario.manifest_path);
  if (scenario.synthetic_instances) {
    const auto& decl = *scenario.synthetic_instances;
    return generate_instances(decl.family, decl.count, decl.seed, decl.grid_scheme,
                              decl.family + "-");
  }
  throw ScenarioError("scenario declares no instances");
}

namespace detail {

inline TargetSpec target_from_json(const nlohmann::json& j) {
  TargetSpec t;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "synthetic") {
    t = synthetic_target(j.at("name").get<std::string>());
  } else if (kind == "external") {
    t.kind = TargetKind::external;
    t.command_template = j.at("command").get<std::string>();
    if (t.command_template.empty()) throw ScenarioError("external target command is empty");
  } else {
    throw ScenarioError("unknown target kind '" + kind + "'");
  }
  if (j.contains("objective_sense")) t.sense = sense_from_string(j.at("objective_sense").get<std::string>());
  if (j.contains("cutoff_seconds")) t.cutoff_seconds = j.at("cutoff_seconds").get<double>();
  if (j.contains("penalized_value")) t.penalized_value = j.at("penalized_value").get<double>();
  if (t.cutoff_seconds <= 0.0) throw ScenarioError("cutoff_seconds must be positive");
  return t;
}

inline CandidatePool pool_from_json(const ConfigurationSpace& space, const nlohmann::json& j) {
  CandidatePool pool;
  const std::string kind = j.value("kind", "grid");
  if (kind == "grid") {
    pool.kind = CandidatePool::Kind::grid;
    pool.grid_steps = j.value("steps", std::size_t{11});
    if (pool.grid_steps < 1) throw ScenarioError("pool grid steps must be >= 1");
  } else if (kind == "explicit") {
    pool.kind = CandidatePool::Kind::explicit_list;
    if (!j.contains("configs") || !j.at("configs").is_array() || j.at("configs").empty())
      throw ScenarioError("explicit pool requires a non-empty \"configs\" array");
    for (const auto& jc : j.at("configs")) pool.configs.push_back(config_from_json(space, jc));
  } else if (kind == "search") {
    pool.kind = CandidatePool::Kind::search;
    pool.search_budget = j.value("budget", std::size_t{200});
    if (pool.search_budget < 1) throw ScenarioError("pool search budget must be >= 1");
  } else {
    throw ScenarioError("unknown pool kind '" + kind + "'");
  }
  return pool;
}

} // namespace detail

inline Scenario parse_scenario(const nlohmann::ordered_json& j,
                               const std::filesystem::path& base_dir) {
  Scenario s;
  s.raw = j;
  s.name = j.value("name", std::string("scenario"));
  if (!j.contains("parameters")) throw ScenarioError("scenario is missing \"parameters\"");
  s.space = space_from_json(j.at("parameters"));
  if (!j.contains("target")) throw ScenarioError("scenario is missing \"target\"");
  s.target = detail::target_from_json(j.at("target"));

  if (!j.contains("instances")) throw ScenarioError("scenario is missing \"instances\"");
  const auto& ji = j.at("instances");
  if (ji.contains("manifest")) {
    std::filesystem::path p = ji.at("manifest").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p))
      throw ScenarioError("instance manifest '" + p.string() + "' does not exist");
    s.manifest_path = p;
  } else if (ji.contains("family")) {
    SyntheticInstancesDecl decl;
    decl.family = ji.at("family").get<std::string>();
    decl.count = ji.at("count").get<std::size_t>();
    decl.seed = ji.value("seed", std::uint64_t{0});
    const std::string scheme = ji.value("scheme", std::string("grid"));
    if (scheme != "grid" && scheme != "uniform")
      throw ScenarioError("instance scheme must be \"grid\" or \"uniform\"");
    decl.grid_scheme = scheme == "grid";
    if (decl.count < 1) throw ScenarioError("synthetic instance count must be >= 1");
    s.synthetic_instances = decl;
  } else {
    throw ScenarioError("scenario \"instances\" needs either \"manifest\" or \"family\"");
  }

  if (!j.contains("budget")) throw ScenarioError("scenario is missing \"budget\"");
  const auto& jb = j.at("budget");
  if (!jb.contains("max_evaluations") || !jb.at("max_evaluations").is_number_integer() ||
      jb.at("max_evaluations").get<std::int64_t>() < 1)
    throw ScenarioError("budget.max_evaluations must be a positive integer");
  s.budget.max_evaluations = jb.at("max_evaluations").get<std::size_t>();
  s.budget.max_iterations = jb.value("max_iterations", std::size_t{0});
  s.budget.max_wall_seconds = jb.value("max_wall_seconds", 0.0);

  if (j.contains("strategy")) {
    const auto& js = j.at("strategy");
    s.strategy.name = strategy_from_string(js.value("name", std::string("uniform")));
    s.strategy.epsilon = js.value("epsilon", 0.3);
    s.strategy.batch_size = js.value("batch_size", std::size_t{8});
    if (s.strategy.batch_size < 1) throw ScenarioError("strategy batch_size must be >= 1");
    if (s.strategy.epsilon < 0.0 || s.strategy.epsilon > 1.0)
      throw ScenarioError("strategy epsilon must lie in [0, 1]");
  }

  if (j.contains("pool")) s.pool = detail::pool_from_json(s.space, j.at("pool"));

  if (j.contains("online")) s.online_exploration = j.at("online").value("exploration_rate", 0.2);
  if (s.online_exploration < 0.0 || s.online_exploration > 1.0)
    throw ScenarioError("online exploration_rate must lie in [0, 1]");
  s.eval_seed = j.value("eval_seed", std::uint64_t{0});
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path.string() + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError("scenario file '" + path.string() + "': " + e.what());
  }
  return parse_scenario(j, path.parent_path());
}

// Canonical scenario JSON for the synthetic families; shared by bench, the
// suite generator, and the test fixtures.
inline nlohmann::ordered_json synthetic_scenario_json(const std::string& family,
                                                      std::size_t instance_count,
                                                      std::uint64_t instance_seed,
                                                      std::size_t budget_evals) {
  const SyntheticFamily fam = synthetic_family(family);
  nlohmann::ordered_json j;
  j["name"] = family + "-suite";
  j["parameters"] = space_to_json(fam.space);
  j["target"] = {{"kind", "synthetic"},
                 {"name", fam.target.synthetic_name},
                 {"objective_sense", sense_to_string(fam.target.sense)},
                 {"cutoff_seconds", fam.target.cutoff_seconds},
                 {"penalized_value", fam.target.penalized_value}};
  j["instances"] = {{"family", family},
                    {"count", instance_count},
                    {"seed", instance_seed},
                    {"scheme", "grid"}};
  j["budget"] = {{"max_evaluations", budget_evals}};
  j["strategy"] = {{"name", "uniform"}, {"batch_size", std::size_t{8}}};
  j["pool"] = {{"kind", "grid"}, {"steps", std::size_t{11}}};
  j["online"] = {{"exploration_rate", 0.2}};
  j["eval_seed"] = std::uint64_t{0};
  return j;
}

inline Scenario make_synthetic_scenario(const std::string& family, std::size_t instance_count,
                                        std::uint64_t instance_seed, std::size_t budget_evals) {
  return parse_scenario(synthetic_scenario_json(family, instance_count, instance_seed, budget_evals),
                        std::filesystem::current_path());
}

} // namespace acpf
