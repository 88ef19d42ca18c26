#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "acpf/config_space.hpp"
#include "acpf/errors.hpp"
#include "acpf/models.hpp"

namespace acpf {

namespace detail {

inline nlohmann::ordered_json scaler_to_json(const FeatureScaler& s) {
  nlohmann::ordered_json j;
  j["min"] = s.mins;
  j["max"] = s.maxs;
  return j;
}

inline FeatureScaler scaler_from_json(const nlohmann::json& j) {
  FeatureScaler s;
  s.mins = j.at("min").get<std::vector<double>>();
  s.maxs = j.at("max").get<std::vector<double>>();
  if (s.mins.size() != s.maxs.size()) throw Error("scaler min/max dimension mismatch");
  return s;
}

inline nlohmann::ordered_json mapping_to_json(const ConfigurationSpace& space,
                                              const MappingModel& m) {
  nlohmann::ordered_json j;
  j["k"] = m.k;
  j["scaler"] = scaler_to_json(m.scaler);
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    nlohmann::ordered_json je;
    je["id"] = e.id;
    je["features"] = e.features;
    je["label"] = config_to_json(space, e.label);
    entries.push_back(je);
  }
  j["entries"] = entries;
  return j;
}

inline MappingModel mapping_from_json(const ConfigurationSpace& space, const nlohmann::json& j) {
  MappingModel m;
  m.k = j.at("k").get<std::size_t>();
  m.scaler = scaler_from_json(j.at("scaler"));
  for (const auto& je : j.at("entries"))
    m.entries.push_back({je.at("id").get<std::string>(),
                         je.at("features").get<std::vector<double>>(),
                         config_from_json(space, je.at("label"))});
  return m;
}

inline nlohmann::ordered_json surrogate_to_json(const SurrogateModel& m) {
  nlohmann::ordered_json j;
  j["k"] = m.k;
  j["feature_dim"] = m.feature_dim;
  j["scaler"] = scaler_to_json(m.scaler);
  j["weights"] = m.weights;
  auto points = nlohmann::ordered_json::array();
  for (const auto& p : m.points) {
    nlohmann::ordered_json jp;
    jp["joint"] = p.joint;
    jp["value"] = p.value;
    points.push_back(jp);
  }
  j["points"] = points;
  return j;
}

inline SurrogateModel surrogate_from_json(const nlohmann::json& j) {
  SurrogateModel m;
  m.k = j.at("k").get<std::size_t>();
  m.feature_dim = j.at("feature_dim").get<std::size_t>();
  m.scaler = scaler_from_json(j.at("scaler"));
  m.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& jp : j.at("points"))
    m.points.push_back({jp.at("joint").get<std::vector<double>>(), jp.at("value").get<double>()});
  return m;
}

inline nlohmann::ordered_json aggregate_to_json(const ConfigurationSpace& space,
                                                const AggregateModel& m) {
  nlohmann::ordered_json j;
  j["agg"] = agg_to_string(m.agg);
  auto scores = nlohmann::ordered_json::array();
  for (const auto& [cfg, score] : m.scores) {
    nlohmann::ordered_json js;
    js["config"] = config_to_json(space, cfg);
    js["score"] = score;
    scores.push_back(js);
  }
  j["scores"] = scores;
  return j;
}

inline AggregateModel aggregate_from_json(const ConfigurationSpace& space,
                                          const nlohmann::json& j) {
  AggregateModel m;
  m.agg = agg_from_string(j.at("agg").get<std::string>());
  for (const auto& js : j.at("scores"))
    m.scores.emplace_back(config_from_json(space, js.at("config")), js.at("score").get<double>());
  return m;
}

inline nlohmann::ordered_json partition_to_json(const ConfigurationSpace& space,
                                                const PartitionModel& m) {
  nlohmann::ordered_json j;
  auto clusters = nlohmann::ordered_json::array();
  for (const auto& c : m.clusters) {
    nlohmann::ordered_json jc;
    auto members = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < c.member_ids.size(); ++i) {
      nlohmann::ordered_json jm;
      jm["id"] = c.member_ids[i];
      jm["features"] = c.member_features[i];
      members.push_back(jm);
    }
    jc["members"] = members;
    jc["representative"] = {{"id", c.representative_id}, {"features", c.representative_features}};
    jc["config"] = config_to_json(space, c.config);
    jc["score"] = c.score;
    clusters.push_back(jc);
  }
  j["clusters"] = clusters;
  return j;
}

inline PartitionModel partition_from_json(const ConfigurationSpace& space,
                                          const nlohmann::json& j) {
  PartitionModel m;
  for (const auto& jc : j.at("clusters")) {
    PartitionModel::Cluster c;
    for (const auto& jm : jc.at("members")) {
      c.member_ids.push_back(jm.at("id").get<std::string>());
      c.member_features.push_back(jm.at("features").get<std::vector<double>>());
    }
    c.representative_id = jc.at("representative").at("id").get<std::string>();
    c.representative_features = jc.at("representative").at("features").get<std::vector<double>>();
    c.config = config_from_json(space, jc.at("config"));
    c.score = jc.at("score").get<double>();
    m.clusters.push_back(std::move(c));
  }
  return m;
}

} // namespace detail

inline nlohmann::ordered_json model_to_json(const Model& model) {
  nlohmann::ordered_json j;
  j["kind"] = model_kind_to_string(model.kind);
  j["scenario_hash"] = model.scenario_hash;
  j["scaler"] = detail::scaler_to_json(model.scaler);
  j["space"] = space_to_json(model.space);
  if (std::holds_alternative<MappingModel>(model.payload))
    j["payload"] = detail::mapping_to_json(model.space, std::get<MappingModel>(model.payload));
  else if (std::holds_alternative<SurrogateModel>(model.payload))
    j["payload"] = detail::surrogate_to_json(std::get<SurrogateModel>(model.payload));
  else if (std::holds_alternative<AggregateModel>(model.payload))
    j["payload"] = detail::aggregate_to_json(model.space, std::get<AggregateModel>(model.payload));
  else
    j["payload"] = detail::partition_to_json(model.space, std::get<PartitionModel>(model.payload));
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  Model model;
  model.kind = model_kind_from_string(j.at("kind").get<std::string>());
  model.scenario_hash = j.at("scenario_hash").get<std::string>();
  model.scaler = detail::scaler_from_json(j.at("scaler"));
  model.space = space_from_json(j.at("space"));
  const auto& payload = j.at("payload");
  switch (model.kind) {
    case ModelKind::mapping:
      model.payload = detail::mapping_from_json(model.space, payload);
      break;
    case ModelKind::surrogate:
      model.payload = detail::surrogate_from_json(payload);
      break;
    case ModelKind::aggregate:
      model.payload = detail::aggregate_from_json(model.space, payload);
      break;
    case ModelKind::partition:
    case ModelKind::composite:
      model.payload = detail::partition_from_json(model.space, payload);
      break;
  }
  return model;
}

inline void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file '" + path.string() + "'");
  out << model_to_json(model).dump(2) << '\n';
}

inline Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open model file '" + path.string() + "'");
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError("model file '" + path.string() + "': " + e.what());
  }
}

} // namespace acpf
