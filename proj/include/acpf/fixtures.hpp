#pragma once

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "acpf/config_space.hpp"
#include "acpf/errors.hpp"
#include "acpf/evaluation.hpp"
#include "acpf/instances.hpp"
#include "acpf/rng.hpp"

namespace acpf {

// The two-parameter space shared by the synthetic families:
// x real in [0,1] (default 0.5), m categorical {a,b} (default a).
inline ConfigurationSpace quadratic_valley_space() {
  ParameterSpec x;
  x.name = "x";
  x.kind = ParamKind::real;
  x.lo = 0.0;
  x.hi = 1.0;
  x.default_value = 0.5;
  ParameterSpec m;
  m.name = "m";
  m.kind = ParamKind::categorical;
  m.choices = {"a", "b"};
  m.default_value = std::string("a");
  return ConfigurationSpace({x, m});
}

struct OracleResult {
  Configuration config;
  double performance = 0.0;
};

// A desk-scale problem family with an analytic optimum per instance.
struct SyntheticFamily {
  std::string name;
  ConfigurationSpace space;
  TargetSpec target;
  std::function<OracleResult(const Instance&)> oracle;
};

inline SyntheticFamily synthetic_family(const std::string& name) {
  if (name != "quadratic" && name != "cliff")
    throw ScenarioError("unknown synthetic family '" + name + "'");
  SyntheticFamily fam;
  fam.name = name;
  fam.space = quadratic_valley_space();
  fam.target = synthetic_target(name == "quadratic" ? "quadratic_valley" : "cliff");
  const ConfigurationSpace space = fam.space;
  if (name == "quadratic") {
    fam.oracle = [space](const Instance& inst) {
      const double f = inst.features.at(0);
      OracleResult r;
      r.config = space.defaults();
      r.config.assignments["x"] = f;
      r.config.assignments["m"] = std::string(f < 0.5 ? "a" : "b");
      r.performance = 1.0;
      return r;
    };
  } else {
    fam.oracle = [space](const Instance& inst) {
      const double f = inst.features.at(0);
      OracleResult r;
      r.config = space.defaults();
      r.config.assignments["m"] = std::string(f < 0.5 ? "a" : "b");
      r.performance = 1.0;
      return r;
    };
  }
  return fam;
}

namespace detail {

inline Instance make_synthetic_instance(const std::string& id, double f) {
  Instance inst;
  inst.id = id;
  inst.record = {f};
  inst.features = {f};
  return inst;
}

inline std::string padded_id(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix.c_str(), i);
  return buf;
}

} // namespace detail

// Feature grid {0, 1/(n-1), ..., 1} when grid_scheme, else seeded uniform
// draws in [0,1].
inline InstanceSet generate_instances(const std::string& family, std::size_t count,
                                      std::uint64_t seed, bool grid_scheme,
                                      const std::string& id_prefix) {
  if (family != "quadratic" && family != "cliff")
    throw ScenarioError("unknown synthetic family '" + family + "'");
  if (count < 1) throw ScenarioError("synthetic instance count must be >= 1");
  InstanceSet set;
  for (std::size_t i = 0; i < count; ++i) {
    double f = 0.0;
    if (grid_scheme) {
      f = count == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(count - 1);
    } else {
      Rng rng(derive_seed(seed, 0xf0, i));
      f = rng.unit();
    }
    set.add(detail::make_synthetic_instance(detail::padded_id(id_prefix, i), f));
  }
  return set;
}

struct Suite {
  std::string family;
  ConfigurationSpace space;
  TargetSpec target;
  InstanceSet train;
  InstanceSet test;
  std::function<OracleResult(const Instance&)> oracle;
};

// Training instances on the feature grid, test instances drawn uniformly.
inline Suite make_suite(const std::string& name, std::size_t n_train, std::size_t n_test,
                        std::uint64_t seed) {
  const SyntheticFamily fam = synthetic_family(name);
  Suite suite;
  suite.family = fam.name;
  suite.space = fam.space;
  suite.target = fam.target;
  suite.oracle = fam.oracle;
  suite.train = generate_instances(name, n_train, seed, true, name + "-train-");
  suite.test = generate_instances(name, n_test, derive_seed(seed, 0x7e57), false, name + "-test-");
  return suite;
}

// Oracle-optimal performance minus achieved performance, in oriented terms;
// nonnegative whenever the oracle is exact.
inline double regret(const std::function<OracleResult(const Instance&)>& oracle,
                     const ConfigurationSpace& space, const TargetSpec& target,
                     const Instance& inst, const Configuration& cfg) {
  const OracleResult opt = oracle(inst);
  const EvalRecord rec = evaluate(space, target, inst, cfg, 0);
  return oriented(opt.performance, target.sense) - oriented(rec.performance, target.sense);
}

inline double regret(const Suite& suite, const Instance& inst, const Configuration& cfg) {
  return regret(suite.oracle, suite.space, suite.target, inst, cfg);
}

} // namespace acpf
