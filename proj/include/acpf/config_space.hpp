#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "acpf/errors.hpp"
#include "acpf/rng.hpp"

namespace acpf {

enum class ParamKind { real, integer, boolean, categorical };

// A parameter value. Integer parameters use int64, categorical use the
// literal choice string.
using Value = std::variant<bool, std::int64_t, double, std::string>;

inline std::string value_to_string(const Value& v) {
  char buf[64];
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "true" : "false";
  if (std::holds_alternative<std::int64_t>(v)) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::get<std::int64_t>(v)));
    return buf;
  }
  if (std::holds_alternative<double>(v)) {
    std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(v));
    return buf;
  }
  return std::get<std::string>(v);
}

// Activation condition: the parameter is active only while its single parent
// parameter holds one of `values`.
struct Condition {
  std::string parent;
  std::vector<Value> values;
};

struct ParameterSpec {
  std::string name;
  ParamKind kind = ParamKind::real;
  double lo = 0.0; // numeric kinds
  double hi = 0.0;
  std::vector<std::string> choices; // categorical
  Value default_value;
  std::optional<Condition> condition;

  bool value_in_domain(const Value& v) const {
    switch (kind) {
      case ParamKind::real:
        return std::holds_alternative<double>(v) && std::isfinite(std::get<double>(v)) &&
               std::get<double>(v) >= lo && std::get<double>(v) <= hi;
      case ParamKind::integer:
        return std::holds_alternative<std::int64_t>(v) &&
               static_cast<double>(std::get<std::int64_t>(v)) >= lo &&
               static_cast<double>(std::get<std::int64_t>(v)) <= hi;
      case ParamKind::boolean:
        return std::holds_alternative<bool>(v);
      case ParamKind::categorical:
        return std::holds_alternative<std::string>(v) &&
               std::find(choices.begin(), choices.end(), std::get<std::string>(v)) != choices.end();
    }
    return false;
  }
};

// Total assignment over a space: inactive parameters are stored at their
// defaults, so every configuration is fixed-width and archive keys join.
struct Configuration {
  std::map<std::string, Value> assignments;

  const Value& at(const std::string& name) const {
    auto it = assignments.find(name);
    if (it == assignments.end()) throw Error("configuration has no parameter '" + name + "'");
    return it->second;
  }
  bool operator==(const Configuration& other) const { return assignments == other.assignments; }
};

inline double get_real(const Configuration& c, const std::string& name) {
  return std::get<double>(c.at(name));
}
inline std::string get_categorical(const Configuration& c, const std::string& name) {
  return std::get<std::string>(c.at(name));
}

struct EncodedConfig {
  std::vector<double> values;
};

// Maps encoded vector positions back to parameters: one normalized coordinate
// per numeric parameter, 0/1 for booleans, a one-hot block per categorical,
// plus a leading activity flag for each conditional parameter.
struct EncodingLayout {
  struct Block {
    std::size_t param = 0;
    bool has_flag = false;
    std::size_t flag_pos = 0;
    std::size_t value_pos = 0;
    std::size_t width = 1;
  };
  std::vector<Block> blocks;
  std::size_t dimension = 0;
};

class ConfigurationSpace {
public:
  ConfigurationSpace() = default;

  explicit ConfigurationSpace(std::vector<ParameterSpec> params) : params_(std::move(params)) {
    validate_specs();
    build_topo_order();
    build_layout();
  }

  const std::vector<ParameterSpec>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }
  const EncodingLayout& layout() const { return layout_; }
  const std::vector<std::size_t>& topo_order() const { return topo_; }

  const ParameterSpec& param(std::size_t i) const { return params_[i]; }
  const ParameterSpec& param(const std::string& name) const { return params_[index_of(name)]; }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
    return it->second;
  }
  bool has_param(const std::string& name) const { return index_.count(name) != 0; }

  Configuration defaults() const {
    Configuration c;
    for (const auto& p : params_) c.assignments[p.name] = p.default_value;
    return c;
  }

  // Active iff every condition on the chain up to a root holds.
  bool is_active(const Configuration& cfg, std::size_t idx) const {
    const ParameterSpec* p = &params_[idx];
    while (p->condition) {
      const auto& cond = *p->condition;
      const Value& parent_value = cfg.at(cond.parent);
      bool matched = false;
      for (const auto& v : cond.values)
        if (v == parent_value) { matched = true; break; }
      if (!matched) return false;
      p = &params_[index_of(cond.parent)];
    }
    return true;
  }

private:
  void validate_specs() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& p = params_[i];
      if (p.name.empty()) throw Error("parameter with empty name");
      if (!index_.emplace(p.name, i).second) throw Error("duplicate parameter name '" + p.name + "'");
    }
    for (const auto& p : params_) {
      if ((p.kind == ParamKind::real || p.kind == ParamKind::integer) && p.lo > p.hi)
        throw Error("parameter '" + p.name + "': lo > hi");
      if (p.kind == ParamKind::categorical) {
        if (p.choices.empty()) throw Error("parameter '" + p.name + "': empty categorical domain");
        std::set<std::string> uniq(p.choices.begin(), p.choices.end());
        if (uniq.size() != p.choices.size())
          throw Error("parameter '" + p.name + "': duplicate categorical values");
      }
      if (!p.value_in_domain(p.default_value))
        throw Error("parameter '" + p.name + "': default outside domain");
      if (p.condition) {
        auto it = index_.find(p.condition->parent);
        if (it == index_.end())
          throw Error("parameter '" + p.name + "': unknown condition parent '" + p.condition->parent + "'");
        const auto& parent = params_[it->second];
        if (p.condition->values.empty())
          throw Error("parameter '" + p.name + "': empty condition value set");
        for (const auto& v : p.condition->values)
          if (!parent.value_in_domain(v))
            throw Error("parameter '" + p.name + "': condition value outside parent domain");
      }
    }
  }

  // Kahn order with parents first; rejects condition cycles.
  void build_topo_order() {
    const std::size_t n = params_.size();
    std::vector<std::vector<std::size_t>> children(n);
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (params_[i].condition) {
        children[index_of(params_[i].condition->parent)].push_back(i);
        indegree[i] = 1;
      }
    }
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i)
      if (indegree[i] == 0) queue.push_back(i);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t u = queue[head];
      topo_.push_back(u);
      for (std::size_t v : children[u])
        if (--indegree[v] == 0) queue.push_back(v);
    }
    if (topo_.size() != n) throw Error("condition parents form a cycle");
  }

  void build_layout() {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      EncodingLayout::Block b;
      b.param = i;
      b.has_flag = params_[i].condition.has_value();
      if (b.has_flag) b.flag_pos = pos++;
      b.value_pos = pos;
      b.width = params_[i].kind == ParamKind::categorical ? params_[i].choices.size() : 1;
      pos += b.width;
      layout_.blocks.push_back(b);
    }
    layout_.dimension = pos;
  }

  std::vector<ParameterSpec> params_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::size_t> topo_;
  EncodingLayout layout_;
};

struct ValidityReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidityReport validate(const ConfigurationSpace& space, const Configuration& cfg) {
  ValidityReport report;
  for (const auto& [name, value] : cfg.assignments)
    if (!space.has_param(name)) report.violations.push_back("unknown parameter " + name);
  for (const auto& p : space.params())
    if (cfg.assignments.find(p.name) == cfg.assignments.end())
      report.violations.push_back("missing parameter " + p.name);
  if (!report.ok()) return report;

  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space.param(i);
    const Value& v = cfg.at(p.name);
    if (!p.value_in_domain(v)) {
      report.violations.push_back(p.name + " out of domain");
      continue;
    }
    if (!space.is_active(cfg, i) && !(v == p.default_value))
      report.violations.push_back("non-default inactive value " + p.name);
  }
  return report;
}

namespace detail {

inline Value draw_uniform_value(const ParameterSpec& p, Rng& rng) {
  switch (p.kind) {
    case ParamKind::real:
      return p.lo + rng.unit() * (p.hi - p.lo);
    case ParamKind::integer:
      return rng.uniform_int(static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi));
    case ParamKind::boolean:
      return rng.flip();
    case ParamKind::categorical:
      return p.choices[rng.index(p.choices.size())];
  }
  return p.default_value;
}

// Re-derives activity in topo order and resets inactive parameters to their
// defaults. Idempotent.
inline void repair_inactive(const ConfigurationSpace& space, Configuration& cfg) {
  for (std::size_t idx : space.topo_order()) {
    const auto& p = space.param(idx);
    if (!space.is_active(cfg, idx)) cfg.assignments[p.name] = p.default_value;
  }
}

} // namespace detail

inline std::vector<Configuration> sample_uniform(const ConfigurationSpace& space,
                                                 std::uint64_t seed, std::size_t n) {
  std::vector<Configuration> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, 0x5a17, i));
    Configuration cfg;
    for (std::size_t idx : space.topo_order()) {
      const auto& p = space.param(idx);
      // Ancestors precede idx in topo order, so activity is decidable here.
      const bool active = space.is_active(cfg, idx);
      cfg.assignments[p.name] = active ? detail::draw_uniform_value(p, rng) : p.default_value;
    }
    out.push_back(std::move(cfg));
  }
  return out;
}

inline EncodedConfig encode(const ConfigurationSpace& space, const Configuration& cfg) {
  const auto& layout = space.layout();
  EncodedConfig enc;
  enc.values.assign(layout.dimension, 0.0);
  for (const auto& b : layout.blocks) {
    const auto& p = space.param(b.param);
    const bool active = space.is_active(cfg, b.param);
    if (b.has_flag) enc.values[b.flag_pos] = active ? 1.0 : 0.0;
    const Value& v = active ? cfg.at(p.name) : p.default_value;
    switch (p.kind) {
      case ParamKind::real:
        enc.values[b.value_pos] = p.hi > p.lo ? (std::get<double>(v) - p.lo) / (p.hi - p.lo) : 0.0;
        break;
      case ParamKind::integer:
        enc.values[b.value_pos] =
            p.hi > p.lo ? (static_cast<double>(std::get<std::int64_t>(v)) - p.lo) / (p.hi - p.lo) : 0.0;
        break;
      case ParamKind::boolean:
        enc.values[b.value_pos] = std::get<bool>(v) ? 1.0 : 0.0;
        break;
      case ParamKind::categorical: {
        const auto& s = std::get<std::string>(v);
        for (std::size_t j = 0; j < p.choices.size(); ++j)
          enc.values[b.value_pos + j] = p.choices[j] == s ? 1.0 : 0.0;
        break;
      }
    }
  }
  return enc;
}

inline Configuration decode(const ConfigurationSpace& space, const EncodedConfig& enc) {
  const auto& layout = space.layout();
  if (enc.values.size() != layout.dimension)
    throw Error("encoded configuration has dimension " + std::to_string(enc.values.size()) +
                ", expected " + std::to_string(layout.dimension));
  Configuration cfg;
  for (const auto& b : layout.blocks) {
    const auto& p = space.param(b.param);
    switch (p.kind) {
      case ParamKind::real: {
        const double c = std::clamp(enc.values[b.value_pos], 0.0, 1.0);
        cfg.assignments[p.name] = p.lo + c * (p.hi - p.lo);
        break;
      }
      case ParamKind::integer: {
        const double c = std::clamp(enc.values[b.value_pos], 0.0, 1.0);
        const double raw = p.lo + c * (p.hi - p.lo);
        auto v = static_cast<std::int64_t>(std::floor(raw + 0.5)); // half-up
        v = std::clamp(v, static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi));
        cfg.assignments[p.name] = v;
        break;
      }
      case ParamKind::boolean:
        cfg.assignments[p.name] = enc.values[b.value_pos] >= 0.5;
        break;
      case ParamKind::categorical: {
        std::size_t best = 0;
        for (std::size_t j = 1; j < b.width; ++j)
          if (enc.values[b.value_pos + j] > enc.values[b.value_pos + best]) best = j;
        cfg.assignments[p.name] = p.choices[best];
        break;
      }
    }
  }
  detail::repair_inactive(space, cfg);
  return cfg;
}

// Canonical key: the encoded vector. All deterministic tie-breaking compares
// these lexicographically.
inline std::vector<double> canonical_key(const ConfigurationSpace& space, const Configuration& cfg) {
  return encode(space, cfg).values;
}

inline bool canonical_less(const ConfigurationSpace& space, const Configuration& a,
                           const Configuration& b) {
  const auto ka = canonical_key(space, a);
  const auto kb = canonical_key(space, b);
  return std::lexicographical_compare(ka.begin(), ka.end(), kb.begin(), kb.end());
}

// Canonical encoding rendered with 12 significant digits; used for archive
// keys and trace digests.
inline std::string config_digest(const ConfigurationSpace& space, const Configuration& cfg) {
  const auto key = canonical_key(space, cfg);
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < key.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g", key[i]);
    if (i) out += ',';
    out += buf;
  }
  return out;
}

namespace detail {

// One-parameter move used by neighbors(): Gaussian step for numerics,
// resample-to-different for categorical/boolean.
inline bool mutate_param(const ConfigurationSpace& space, Configuration& cfg, std::size_t idx,
                         Rng& rng) {
  const auto& p = space.param(idx);
  const Value before = cfg.at(p.name);
  switch (p.kind) {
    case ParamKind::real: {
      if (p.hi <= p.lo) return false;
      const double step = rng.gaussian() * 0.2 * (p.hi - p.lo);
      const double moved = std::clamp(std::get<double>(before) + step, p.lo, p.hi);
      if (moved == std::get<double>(before)) return false;
      cfg.assignments[p.name] = moved;
      return true;
    }
    case ParamKind::integer: {
      if (p.hi <= p.lo) return false;
      const double step = rng.gaussian() * 0.2 * (p.hi - p.lo);
      const double raw = static_cast<double>(std::get<std::int64_t>(before)) + step;
      auto moved = static_cast<std::int64_t>(std::floor(raw + 0.5));
      moved = std::clamp(moved, static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi));
      if (moved == std::get<std::int64_t>(before)) return false;
      cfg.assignments[p.name] = moved;
      return true;
    }
    case ParamKind::boolean:
      cfg.assignments[p.name] = !std::get<bool>(before);
      return true;
    case ParamKind::categorical: {
      if (p.choices.size() < 2) return false;
      std::size_t pick = rng.index(p.choices.size() - 1);
      if (p.choices[pick] == std::get<std::string>(before)) pick = p.choices.size() - 1;
      cfg.assignments[p.name] = p.choices[pick];
      return true;
    }
  }
  return false;
}

inline bool space_has_real(const ConfigurationSpace& space) {
  for (const auto& p : space.params())
    if (p.kind == ParamKind::real) return true;
  return false;
}

// All values of a finite parameter domain in canonical order.
inline std::vector<Value> finite_domain(const ParameterSpec& p) {
  std::vector<Value> vals;
  switch (p.kind) {
    case ParamKind::boolean:
      vals = {Value(false), Value(true)};
      break;
    case ParamKind::integer:
      for (auto v = static_cast<std::int64_t>(p.lo); v <= static_cast<std::int64_t>(p.hi); ++v)
        vals.emplace_back(v);
      break;
    case ParamKind::categorical:
      for (const auto& c : p.choices) vals.emplace_back(c);
      break;
    case ParamKind::real:
      break;
  }
  return vals;
}

} // namespace detail

inline std::vector<Configuration> neighbors(const ConfigurationSpace& space,
                                            const Configuration& cfg, std::uint64_t seed,
                                            std::size_t k) {
  std::vector<Configuration> out;
  std::vector<std::vector<double>> seen;
  const auto base_key = canonical_key(space, cfg);
  auto try_accept = [&](Configuration cand) {
    detail::repair_inactive(space, cand);
    auto key = canonical_key(space, cand);
    if (key == base_key) return false;
    for (const auto& s : seen)
      if (s == key) return false;
    seen.push_back(std::move(key));
    out.push_back(std::move(cand));
    return true;
  };

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.is_active(cfg, i)) active.push_back(i);
  if (active.empty()) return out;

  Rng rng(derive_seed(seed, 0x4e31));
  const std::size_t max_tries = 60 * k + 60;
  for (std::size_t tries = 0; out.size() < k && tries < max_tries; ++tries) {
    Configuration cand = cfg;
    if (detail::mutate_param(space, cand, active[rng.index(active.size())], rng))
      try_accept(std::move(cand));
  }

  // Random moves stalled: if the space is finite, settle "fewer than k
  // distinct neighbors exist" by exhaustive single-move enumeration.
  if (out.size() < k && !detail::space_has_real(space)) {
    for (std::size_t idx : active) {
      for (const auto& v : detail::finite_domain(space.param(idx))) {
        if (v == cfg.at(space.param(idx).name)) continue;
        Configuration cand = cfg;
        cand.assignments[space.param(idx).name] = v;
        try_accept(std::move(cand));
        if (out.size() >= k) return out;
      }
    }
  }
  return out;
}

namespace detail {

// Value ordering used for the enumeration contract: booleans false<true,
// numerics ascending, categoricals in declared order.
inline bool value_less(const ParameterSpec& p, const Value& a, const Value& b) {
  switch (p.kind) {
    case ParamKind::boolean:
      return !std::get<bool>(a) && std::get<bool>(b);
    case ParamKind::integer:
      return std::get<std::int64_t>(a) < std::get<std::int64_t>(b);
    case ParamKind::real:
      return std::get<double>(a) < std::get<double>(b);
    case ParamKind::categorical: {
      const auto ia = std::find(p.choices.begin(), p.choices.end(), std::get<std::string>(a));
      const auto ib = std::find(p.choices.begin(), p.choices.end(), std::get<std::string>(b));
      return ia < ib;
    }
  }
  return false;
}

inline bool config_value_less(const ConfigurationSpace& space, const Configuration& a,
                              const Configuration& b) {
  for (const auto& p : space.params()) {
    const Value& va = a.at(p.name);
    const Value& vb = b.at(p.name);
    if (value_less(p, va, vb)) return true;
    if (value_less(p, vb, va)) return false;
  }
  return false;
}

// Product enumeration over topo order with the inactive branch collapsed to
// the default. Returns false once `limit` is exceeded.
inline bool enumerate_rec(const ConfigurationSpace& space,
                          const std::vector<std::vector<Value>>& domains, std::size_t depth,
                          Configuration& partial, std::vector<Configuration>& out,
                          std::size_t limit) {
  if (depth == space.size()) {
    if (out.size() >= limit) return false;
    out.push_back(partial);
    return true;
  }
  const std::size_t idx = space.topo_order()[depth];
  const auto& p = space.param(idx);
  if (!space.is_active(partial, idx)) {
    partial.assignments[p.name] = p.default_value;
    return enumerate_rec(space, domains, depth + 1, partial, out, limit);
  }
  for (const auto& v : domains[idx]) {
    partial.assignments[p.name] = v;
    if (!enumerate_rec(space, domains, depth + 1, partial, out, limit)) return false;
  }
  partial.assignments[p.name] = p.default_value;
  return true;
}

inline std::optional<std::vector<Configuration>> enumerate_domains(
    const ConfigurationSpace& space, const std::vector<std::vector<Value>>& domains,
    std::size_t limit) {
  std::vector<Configuration> out;
  Configuration partial = space.defaults();
  if (!detail::enumerate_rec(space, domains, 0, partial, out, limit)) return std::nullopt;
  std::sort(out.begin(), out.end(), [&](const Configuration& a, const Configuration& b) {
    return detail::config_value_less(space, a, b);
  });
  return out;
}

} // namespace detail

// Full feasible set when the space is finite with at most `limit` points;
// nullopt means "too large" (any real parameter makes the space infinite).
inline std::optional<std::vector<Configuration>> enumerate_space(const ConfigurationSpace& space,
                                                                 std::size_t limit) {
  if (detail::space_has_real(space)) return std::nullopt;
  std::vector<std::vector<Value>> domains(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) domains[i] = detail::finite_domain(space.param(i));
  return detail::enumerate_domains(space, domains, limit);
}

// Discretizes real parameters into `steps` equispaced values (endpoints
// included) and enumerates the resulting finite space.
inline std::vector<Configuration> grid(const ConfigurationSpace& space, std::size_t steps) {
  if (steps < 1) throw Error("grid requires steps >= 1");
  std::vector<std::vector<Value>> domains(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space.param(i);
    if (p.kind == ParamKind::real) {
      if (steps == 1 || p.hi <= p.lo) {
        domains[i].emplace_back(p.lo);
      } else {
        for (std::size_t s = 0; s < steps; ++s)
          domains[i].emplace_back(p.lo + static_cast<double>(s) * (p.hi - p.lo) /
                                             static_cast<double>(steps - 1));
      }
    } else {
      domains[i] = detail::finite_domain(p);
    }
  }
  constexpr std::size_t hard_cap = 1000000;
  auto result = detail::enumerate_domains(space, domains, hard_cap);
  if (!result) throw Error("grid enumeration exceeds " + std::to_string(hard_cap) + " points");
  return *result;
}

// --- JSON (scenario "parameters" key and model files) ---

inline nlohmann::ordered_json value_to_json(const Value& v) {
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
  if (std::holds_alternative<std::int64_t>(v)) return std::get<std::int64_t>(v);
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  return std::get<std::string>(v);
}

inline Value value_from_json(const ParameterSpec& p, const nlohmann::json& j) {
  switch (p.kind) {
    case ParamKind::real:
      if (!j.is_number()) throw ScenarioError("parameter '" + p.name + "': expected a number");
      return j.get<double>();
    case ParamKind::integer:
      if (!j.is_number_integer()) throw ScenarioError("parameter '" + p.name + "': expected an integer");
      return j.get<std::int64_t>();
    case ParamKind::boolean:
      if (!j.is_boolean()) throw ScenarioError("parameter '" + p.name + "': expected a boolean");
      return j.get<bool>();
    case ParamKind::categorical:
      if (!j.is_string()) throw ScenarioError("parameter '" + p.name + "': expected a string");
      return j.get<std::string>();
  }
  throw ScenarioError("parameter '" + p.name + "': unknown kind");
}

inline std::string kind_to_string(ParamKind k) {
  switch (k) {
    case ParamKind::real: return "real";
    case ParamKind::integer: return "integer";
    case ParamKind::boolean: return "boolean";
    case ParamKind::categorical: return "categorical";
  }
  return "real";
}

inline ParamKind kind_from_string(const std::string& s) {
  if (s == "real") return ParamKind::real;
  if (s == "integer") return ParamKind::integer;
  if (s == "boolean") return ParamKind::boolean;
  if (s == "categorical") return ParamKind::categorical;
  throw ScenarioError("unknown parameter kind '" + s + "'");
}

inline nlohmann::ordered_json space_to_json(const ConfigurationSpace& space) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : space.params()) {
    nlohmann::ordered_json jp;
    jp["name"] = p.name;
    jp["kind"] = kind_to_string(p.kind);
    if (p.kind == ParamKind::real || p.kind == ParamKind::integer)
      jp["domain"] = {p.lo, p.hi};
    else if (p.kind == ParamKind::categorical)
      jp["domain"] = p.choices;
    jp["default"] = value_to_json(p.default_value);
    if (p.condition) {
      nlohmann::ordered_json jc;
      jc["parent"] = p.condition->parent;
      nlohmann::ordered_json vals = nlohmann::ordered_json::array();
      for (const auto& v : p.condition->values) vals.push_back(value_to_json(v));
      jc["values"] = vals;
      jp["condition"] = jc;
    }
    arr.push_back(jp);
  }
  return arr;
}

inline ConfigurationSpace space_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw ScenarioError("\"parameters\" must be an array");
  std::vector<ParameterSpec> specs;
  // First pass resolves kinds so condition values can be typed in the second.
  std::map<std::string, ParamKind> kinds;
  for (const auto& jp : arr) {
    if (!jp.contains("name") || !jp.contains("kind"))
      throw ScenarioError("parameter entry missing \"name\" or \"kind\"");
    kinds[jp.at("name").get<std::string>()] = kind_from_string(jp.at("kind").get<std::string>());
  }
  for (const auto& jp : arr) {
    ParameterSpec p;
    p.name = jp.at("name").get<std::string>();
    p.kind = kinds.at(p.name);
    if (p.kind == ParamKind::real || p.kind == ParamKind::integer) {
      const auto& dom = jp.at("domain");
      if (!dom.is_array() || dom.size() != 2)
        throw ScenarioError("parameter '" + p.name + "': domain must be [lo, hi]");
      p.lo = dom[0].get<double>();
      p.hi = dom[1].get<double>();
    } else if (p.kind == ParamKind::categorical) {
      for (const auto& c : jp.at("domain")) p.choices.push_back(c.get<std::string>());
    }
    p.default_value = value_from_json(p, jp.at("default"));
    if (jp.contains("condition")) {
      Condition cond;
      cond.parent = jp.at("condition").at("parent").get<std::string>();
      auto kit = kinds.find(cond.parent);
      if (kit == kinds.end())
        throw ScenarioError("parameter '" + p.name + "': unknown condition parent '" + cond.parent + "'");
      ParameterSpec parent_stub;
      parent_stub.name = cond.parent;
      parent_stub.kind = kit->second;
      for (const auto& v : jp.at("condition").at("values"))
        cond.values.push_back(value_from_json(parent_stub, v));
      p.condition = std::move(cond);
    }
    specs.push_back(std::move(p));
  }
  try {
    return ConfigurationSpace(std::move(specs));
  } catch (const Error& e) {
    throw ScenarioError(e.what());
  }
}

inline nlohmann::ordered_json config_to_json(const ConfigurationSpace& space,
                                             const Configuration& cfg) {
  nlohmann::ordered_json j;
  for (const auto& p : space.params()) j[p.name] = value_to_json(cfg.at(p.name));
  return j;
}

inline Configuration config_from_json(const ConfigurationSpace& space, const nlohmann::json& j) {
  Configuration cfg;
  for (const auto& p : space.params()) {
    if (!j.contains(p.name)) throw ScenarioError("configuration missing parameter '" + p.name + "'");
    cfg.assignments[p.name] = value_from_json(p, j.at(p.name));
  }
  return cfg;
}

} // namespace acpf
