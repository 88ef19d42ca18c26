#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "acpf/config_space.hpp"
#include "acpf/errors.hpp"
#include "acpf/rng.hpp"

namespace acpf {

// Black-box objective, already oriented so larger is better. Score calls are
// counted and capped at the budget.
class Objective {
public:
  Objective(std::function<double(const Configuration&)> fn, std::size_t budget)
      : fn_(std::move(fn)), budget_(budget) {
    if (budget_ == 0) throw Error("objective budget must be positive");
  }

  double score(const Configuration& cfg) {
    if (used_ >= budget_) throw Error("objective budget exhausted");
    ++used_;
    return fn_(cfg);
  }

  std::size_t budget() const { return budget_; }
  std::size_t used() const { return used_; }
  bool exhausted() const { return used_ >= budget_; }

private:
  std::function<double(const Configuration&)> fn_;
  std::size_t budget_ = 0;
  std::size_t used_ = 0;
};

struct SearchResult {
  Configuration best;
  double best_score = 0.0;
  std::size_t evaluations_used = 0;
  // (evaluation index, incumbent score) appended on every incumbent
  // improvement; non-decreasing by construction.
  std::vector<std::pair<std::size_t, double>> trace;
  std::vector<std::pair<Configuration, double>> population;
};

// First-improvement hill climbing with uniform restarts on local optima.
// Each step draws up to 8 neighbors and moves to the first strict improvement.
inline SearchResult local_search(Objective& obj, const ConfigurationSpace& space,
                                 const Configuration& start, std::uint64_t seed) {
  constexpr std::size_t step_neighbors = 8;
  SearchResult result;
  const std::size_t used_before = obj.used();
  std::uint64_t stream = 0;

  Configuration current = start;
  double current_score = obj.score(current);
  result.best = current;
  result.best_score = current_score;
  result.trace.emplace_back(obj.used() - used_before, current_score);

  auto consider_incumbent = [&](const Configuration& cfg, double score) {
    if (score > result.best_score) {
      result.best = cfg;
      result.best_score = score;
      result.trace.emplace_back(obj.used() - used_before, score);
    }
  };

  while (!obj.exhausted()) {
    bool improved = false;
    const auto candidates = neighbors(space, current, derive_seed(seed, 1, stream++), step_neighbors);
    for (const auto& cand : candidates) {
      if (obj.exhausted()) break;
      const double s = obj.score(cand);
      consider_incumbent(cand, s);
      if (s > current_score) {
        current = cand;
        current_score = s;
        improved = true;
        break;
      }
    }
    if (!improved && !obj.exhausted()) {
      current = sample_uniform(space, derive_seed(seed, 2, stream++), 1)[0];
      current_score = obj.score(current);
      consider_incumbent(current, current_score);
    }
  }
  result.evaluations_used = obj.used() - used_before;
  return result;
}

namespace detail {

inline bool scored_less(const ConfigurationSpace& space,
                        const std::pair<Configuration, double>& a,
                        const std::pair<Configuration, double>& b) {
  if (a.second != b.second) return a.second > b.second;
  return canonical_less(space, a.first, b.first);
}

} // namespace detail

// (mu + lambda) evolutionary scheme with mu = lambda = population_size:
// binary tournament parents, one-parameter mutation offspring, truncation
// survival. The final population is sorted by descending score.
inline SearchResult evolutionary_search(Objective& obj, const ConfigurationSpace& space,
                                        std::uint64_t seed, std::size_t population_size) {
  if (population_size < 2) throw Error("evolutionary_search requires population_size >= 2");
  SearchResult result;
  const std::size_t used_before = obj.used();
  std::uint64_t stream = 0;
  Rng rng(derive_seed(seed, 3));

  std::vector<std::pair<Configuration, double>> population;
  const auto init = sample_uniform(space, derive_seed(seed, 4), population_size);
  bool have_best = false;
  auto consider_incumbent = [&](const Configuration& cfg, double score) {
    if (!have_best || score > result.best_score) {
      result.best = cfg;
      result.best_score = score;
      result.trace.emplace_back(obj.used() - used_before, score);
      have_best = true;
    }
  };
  for (const auto& cfg : init) {
    if (obj.exhausted()) break;
    const double s = obj.score(cfg);
    population.emplace_back(cfg, s);
    consider_incumbent(cfg, s);
  }

  while (!obj.exhausted() && population.size() >= 2) {
    std::vector<std::pair<Configuration, double>> offspring;
    for (std::size_t j = 0; j < population_size && !obj.exhausted(); ++j) {
      const auto& c1 = population[rng.index(population.size())];
      const auto& c2 = population[rng.index(population.size())];
      const auto& parent = detail::scored_less(space, c1, c2) ? c1 : c2;
      auto mutants = neighbors(space, parent.first, derive_seed(seed, 5, stream++), 1);
      Configuration child = mutants.empty()
                                ? sample_uniform(space, derive_seed(seed, 6, stream++), 1)[0]
                                : std::move(mutants[0]);
      const double s = obj.score(child);
      consider_incumbent(child, s);
      offspring.emplace_back(std::move(child), s);
    }
    for (auto& o : offspring) population.push_back(std::move(o));
    std::sort(population.begin(), population.end(),
              [&](const auto& a, const auto& b) { return detail::scored_less(space, a, b); });
    if (population.size() > population_size) population.resize(population_size);
  }

  std::sort(population.begin(), population.end(),
            [&](const auto& a, const auto& b) { return detail::scored_less(space, a, b); });
  result.population = std::move(population);
  result.evaluations_used = obj.used() - used_before;
  return result;
}

// Deterministic argmax over pre-scored configurations; ties go to the
// smallest canonical encoding.
inline Configuration argmax_enumerated(const ConfigurationSpace& space,
                                       const std::vector<std::pair<Configuration, double>>& scored) {
  if (scored.empty()) throw Error("argmax over an empty configuration list");
  const std::pair<Configuration, double>* best = &scored.front();
  for (const auto& entry : scored)
    if (detail::scored_less(space, entry, *best)) best = &entry;
  return best->first;
}

} // namespace acpf
