#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "acpf/config_space.hpp"
#include "acpf/errors.hpp"
#include "acpf/instances.hpp"
#include "acpf/subprocess.hpp"

namespace acpf {

enum class Sense { maximize, minimize };

inline std::string sense_to_string(Sense s) { return s == Sense::maximize ? "maximize" : "minimize"; }
inline Sense sense_from_string(const std::string& s) {
  if (s == "maximize") return Sense::maximize;
  if (s == "minimize") return Sense::minimize;
  throw ScenarioError("unknown objective sense '" + s + "'");
}

// Internal scores are always larger-is-better; minimization is negated here,
// at the evaluation boundary, and nowhere else.
inline double oriented(double performance, Sense sense) {
  return sense == Sense::maximize ? performance : -performance;
}

enum class TargetKind { external, synthetic };
enum class RunStatus { ok, timeout, crashed };

inline std::string status_to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::timeout: return "timeout";
    case RunStatus::crashed: return "crashed";
  }
  return "crashed";
}
inline RunStatus status_from_string(const std::string& s) {
  if (s == "ok") return RunStatus::ok;
  if (s == "timeout") return RunStatus::timeout;
  if (s == "crashed") return RunStatus::crashed;
  throw Error("unknown run status '" + s + "'");
}

struct TargetSpec {
  TargetKind kind = TargetKind::synthetic;
  std::string command_template;  // external: {instance} {seed} {cutoff} placeholders
  std::string synthetic_name;    // synthetic: quadratic_valley | cliff
  std::map<std::string, double> synthetic_params;
  Sense sense = Sense::maximize;
  double cutoff_seconds = 60.0;
  double penalized_value = 0.0;
};

struct EvalRecord {
  std::string instance_id;
  Configuration configuration;
  std::uint64_t seed = 0;
  double performance = 0.0;
  RunStatus status = RunStatus::ok;
  double wall_seconds = 0.0;
};

// Append-only store of performance samples, keyed on
// (instance id, canonical configuration digest, seed).
class EvalArchive {
public:
  static std::string key_of(const ConfigurationSpace& space, const std::string& instance_id,
                            const Configuration& cfg, std::uint64_t seed) {
    return instance_id + '\x1f' + config_digest(space, cfg) + '\x1f' + std::to_string(seed);
  }

  // Returns false and leaves the archive unchanged when the key is already
  // present.
  bool insert(const ConfigurationSpace& space, EvalRecord record) {
    auto key = key_of(space, record.instance_id, record.configuration, record.seed);
    if (index_.count(key)) return false;
    index_.emplace(std::move(key), records_.size());
    records_.push_back(std::move(record));
    return true;
  }

  bool contains(const ConfigurationSpace& space, const std::string& instance_id,
                const Configuration& cfg, std::uint64_t seed) const {
    return index_.count(key_of(space, instance_id, cfg, seed)) != 0;
  }

  const EvalRecord* find(const ConfigurationSpace& space, const std::string& instance_id,
                         const Configuration& cfg, std::uint64_t seed) const {
    auto it = index_.find(key_of(space, instance_id, cfg, seed));
    return it == index_.end() ? nullptr : &records_[it->second];
  }

  const std::vector<EvalRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

private:
  std::vector<EvalRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline double synthetic_quadratic_valley(const Instance& inst, const Configuration& cfg) {
  if (inst.features.empty()) throw TargetError("quadratic_valley requires a 1-d instance feature");
  const double f = inst.features[0];
  const double x = get_real(cfg, "x");
  const std::string m = get_categorical(cfg, "m");
  const std::string best_m = f < 0.5 ? "a" : "b";
  return 1.0 - (x - f) * (x - f) - (m != best_m ? 0.25 : 0.0);
}

inline double synthetic_cliff(const Instance& inst, const Configuration& cfg) {
  if (inst.features.empty()) throw TargetError("cliff requires a 1-d instance feature");
  const double f = inst.features[0];
  const std::string m = get_categorical(cfg, "m");
  return ((m == "a" && f < 0.5) || (m == "b" && f >= 0.5)) ? 1.0 : 0.0;
}

// Parses the last `ACPF_RESULT status=<s> perf=<v>` line; nullopt when none
// matches.
struct ParsedResult {
  RunStatus status;
  double perf;
};

inline std::optional<ParsedResult> parse_result_line(const std::string& text) {
  std::optional<ParsedResult> found;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("ACPF_RESULT ", 0) != 0) continue;
    std::string status_str;
    std::string perf_str;
    std::stringstream ls(line.substr(12));
    std::string token;
    while (ls >> token) {
      if (token.rfind("status=", 0) == 0) status_str = token.substr(7);
      if (token.rfind("perf=", 0) == 0) perf_str = token.substr(5);
    }
    if (status_str.empty() || perf_str.empty()) continue;
    try {
      ParsedResult pr{status_from_string(status_str), std::stod(perf_str)};
      found = pr;
    } catch (const std::exception&) {
      continue;
    }
  }
  return found;
}

inline std::string substitute_placeholders(std::string tmpl, const std::string& key,
                                           const std::string& value) {
  std::string::size_type pos = 0;
  while ((pos = tmpl.find(key, pos)) != std::string::npos) {
    tmpl.replace(pos, key.size(), value);
    pos += value.size();
  }
  return tmpl;
}

inline std::string build_command(const ConfigurationSpace& space, const TargetSpec& target,
                                 const Instance& inst, const Configuration& cfg,
                                 std::uint64_t seed) {
  char buf[64];
  std::string cmd = target.command_template;
  cmd = substitute_placeholders(cmd, "{instance}", inst.path);
  cmd = substitute_placeholders(cmd, "{seed}", std::to_string(seed));
  std::snprintf(buf, sizeof buf, "%.17g", target.cutoff_seconds);
  cmd = substitute_placeholders(cmd, "{cutoff}", buf);
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!space.is_active(cfg, i)) continue;
    const auto& p = space.param(i);
    cmd += ' ';
    cmd += shell_quote("--" + p.name + "=" + value_to_string(cfg.at(p.name)));
  }
  return cmd;
}

} // namespace detail

inline TargetSpec synthetic_target(const std::string& name,
                                   std::map<std::string, double> params = {}) {
  if (name != "quadratic_valley" && name != "cliff")
    throw ScenarioError("unknown synthetic target '" + name + "'");
  TargetSpec t;
  t.kind = TargetKind::synthetic;
  t.synthetic_name = name;
  t.synthetic_params = std::move(params);
  t.sense = Sense::maximize;
  t.cutoff_seconds = 10.0;
  t.penalized_value = -1.0;
  return t;
}

// One sample of the performance function. Synthetic targets are closed-form
// and deterministic; external targets go through the wrapper protocol.
inline EvalRecord evaluate(const ConfigurationSpace& space, const TargetSpec& target,
                           const Instance& inst, const Configuration& cfg, std::uint64_t seed) {
  EvalRecord rec;
  rec.instance_id = inst.id;
  rec.configuration = cfg;
  rec.seed = seed;

  if (target.kind == TargetKind::synthetic) {
    const auto start = std::chrono::steady_clock::now();
    if (target.synthetic_name == "quadratic_valley")
      rec.performance = detail::synthetic_quadratic_valley(inst, cfg);
    else if (target.synthetic_name == "cliff")
      rec.performance = detail::synthetic_cliff(inst, cfg);
    else
      throw TargetError("unknown synthetic target '" + target.synthetic_name + "'");
    rec.status = RunStatus::ok;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
  }

  if (inst.path.empty())
    throw TargetError("instance '" + inst.id + "' has no payload path for the external target");
  const std::string cmd = detail::build_command(space, target, inst, cfg, seed);
  const ProcessResult proc = run_with_cutoff(cmd, target.cutoff_seconds);
  rec.wall_seconds = proc.wall_seconds;
  if (proc.timed_out) {
    rec.status = RunStatus::timeout;
  } else {
    const auto parsed = detail::parse_result_line(proc.stdout_text);
    rec.status = parsed ? parsed->status : RunStatus::crashed;
    if (rec.status == RunStatus::ok) rec.performance = parsed->perf;
  }
  if (rec.status != RunStatus::ok) rec.performance = target.penalized_value;
  return rec;
}

struct EvalPoint {
  Instance instance;
  Configuration configuration;
  std::uint64_t seed = 0;
};

// Evaluates every point with at most `parallelism` concurrent target runs.
// Output order equals input order; individual run failures become penalized
// records so the batch always completes. Spawn failures are a configuration
// problem, not a sample: the batch still finishes, then the first one is
// rethrown.
inline std::vector<EvalRecord> evaluate_batch(const ConfigurationSpace& space,
                                              const TargetSpec& target,
                                              const std::vector<EvalPoint>& points,
                                              std::size_t parallelism) {
  if (parallelism < 1) throw Error("evaluate_batch requires parallelism >= 1");
  std::vector<EvalRecord> results(points.size());
  if (points.empty()) return results;

  std::mutex spawn_mutex;
  std::string spawn_error;
  auto run_one = [&](std::size_t i) {
    try {
      results[i] = evaluate(space, target, points[i].instance, points[i].configuration,
                            points[i].seed);
      return;
    } catch (const TargetError& e) {
      const std::lock_guard<std::mutex> lock(spawn_mutex);
      if (spawn_error.empty()) spawn_error = e.what();
    } catch (const std::exception&) {
    }
    EvalRecord rec;
    rec.instance_id = points[i].instance.id;
    rec.configuration = points[i].configuration;
    rec.seed = points[i].seed;
    rec.status = RunStatus::crashed;
    rec.performance = target.penalized_value;
    results[i] = std::move(rec);
  };

  const std::size_t workers = std::min(parallelism, points.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1)) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  if (!spawn_error.empty()) throw TargetError(spawn_error);
  return results;
}

// --- NDJSON persistence ---

inline nlohmann::ordered_json record_to_json(const ConfigurationSpace& space,
                                             const EvalRecord& rec) {
  nlohmann::ordered_json j;
  j["instance_id"] = rec.instance_id;
  j["configuration"] = config_to_json(space, rec.configuration);
  j["seed"] = rec.seed;
  j["performance"] = rec.performance;
  j["status"] = status_to_string(rec.status);
  j["wall_seconds"] = rec.wall_seconds;
  return j;
}

inline EvalRecord record_from_json(const ConfigurationSpace& space, const nlohmann::json& j) {
  EvalRecord rec;
  rec.instance_id = j.at("instance_id").get<std::string>();
  rec.configuration = config_from_json(space, j.at("configuration"));
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.performance = j.at("performance").get<double>();
  rec.status = status_from_string(j.at("status").get<std::string>());
  rec.wall_seconds = j.at("wall_seconds").get<double>();
  return rec;
}

inline void save_archive(const std::filesystem::path& path, const ConfigurationSpace& space,
                         const EvalArchive& archive) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write archive file '" + path.string() + "'");
  for (const auto& rec : archive.records()) out << record_to_json(space, rec).dump() << '\n';
}

inline EvalArchive load_archive(const std::filesystem::path& path,
                                const ConfigurationSpace& space) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open archive file '" + path.string() + "'");
  EvalArchive archive;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      archive.insert(space, record_from_json(space, nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw Error("archive line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return archive;
}

} // namespace acpf
