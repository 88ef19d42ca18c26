#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "acpf/errors.hpp"

namespace acpf {

// A problem instance: external instances carry a payload path, synthetic ones
// an inline numeric record. Features drive every distance computation.
struct Instance {
  std::string id;
  std::string path;            // empty for synthetic instances
  std::vector<double> record;  // inline payload for synthetic instances
  std::vector<double> features;

  bool synthetic() const { return path.empty(); }
};

// Per-dimension min-max statistics, frozen from the training set at load time
// and reused unchanged for unseen instances.
struct FeatureScaler {
  std::vector<double> mins;
  std::vector<double> maxs;

  std::size_t dimension() const { return mins.size(); }

  std::vector<double> normalize(const std::vector<double>& features) const {
    if (features.size() != mins.size())
      throw Error("feature dimension " + std::to_string(features.size()) + " does not match scaler dimension " +
                  std::to_string(mins.size()));
    std::vector<double> out(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
      const double span = maxs[i] - mins[i];
      out[i] = span > 0.0 ? std::clamp((features[i] - mins[i]) / span, 0.0, 1.0) : 0.0;
    }
    return out;
  }
};

class InstanceSet {
public:
  InstanceSet() = default;

  explicit InstanceSet(std::vector<Instance> instances) {
    for (auto& inst : instances) add(std::move(inst));
  }

  void add(Instance inst) {
    if (index_.count(inst.id)) throw Error("duplicate instance id '" + inst.id + "'");
    if (!instances_.empty() && inst.features.size() != instances_.front().features.size())
      throw Error("instance '" + inst.id + "' has " + std::to_string(inst.features.size()) +
                  " features, expected " + std::to_string(instances_.front().features.size()));
    for (double f : inst.features)
      if (!std::isfinite(f)) throw Error("instance '" + inst.id + "' has a non-finite feature");
    index_[inst.id] = instances_.size();
    instances_.push_back(std::move(inst));
  }

  const std::vector<Instance>& instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  const Instance& at(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error("unknown instance id '" + id + "'");
    return instances_[it->second];
  }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }

  std::size_t feature_dimension() const {
    return instances_.empty() ? 0 : instances_.front().features.size();
  }

  // Per-dimension (min, max) over the members.
  std::vector<std::pair<double, double>> feature_stats() const {
    std::vector<std::pair<double, double>> stats;
    if (instances_.empty()) return stats;
    const std::size_t d = feature_dimension();
    stats.assign(d, {0.0, 0.0});
    for (std::size_t i = 0; i < d; ++i) {
      double lo = instances_.front().features[i];
      double hi = lo;
      for (const auto& inst : instances_) {
        lo = std::min(lo, inst.features[i]);
        hi = std::max(hi, inst.features[i]);
      }
      stats[i] = {lo, hi};
    }
    return stats;
  }

  FeatureScaler scaler() const {
    FeatureScaler s;
    for (const auto& [lo, hi] : feature_stats()) {
      s.mins.push_back(lo);
      s.maxs.push_back(hi);
    }
    return s;
  }

private:
  std::vector<Instance> instances_;
  std::map<std::string, std::size_t> index_;
};

// Euclidean distance between min-max-normalized feature vectors. Dimensions
// with max == min contribute zero.
inline double dist(const Instance& a, const Instance& b, const FeatureScaler& scaler) {
  const auto na = scaler.normalize(a.features);
  const auto nb = scaler.normalize(b.features);
  double sum = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) {
    const double d = na[i] - nb[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

inline double dist_normalized(const std::vector<double>& na, const std::vector<double>& nb) {
  if (na.size() != nb.size()) throw Error("feature dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) {
    const double d = na[i] - nb[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

// Member minimizing the summed distance to the other members; ties go to the
// lexicographically smallest id.
inline const Instance& medoid(const InstanceSet& set, const std::vector<std::string>& members,
                              const FeatureScaler& scaler) {
  if (members.empty()) throw Error("medoid of an empty member set");
  const Instance* best = nullptr;
  double best_sum = 0.0;
  for (const auto& id : members) {
    const Instance& cand = set.at(id);
    double sum = 0.0;
    for (const auto& other_id : members)
      if (other_id != id) sum += dist(cand, set.at(other_id), scaler);
    if (!best || sum < best_sum || (sum == best_sum && cand.id < best->id)) {
      best = &cand;
      best_sum = sum;
    }
  }
  return *best;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

} // namespace detail

// Manifest CSV: header `id,path,f1,...,fd`; empty path marks a synthetic
// instance whose record defaults to its feature vector.
inline InstanceSet load_instance_set(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ScenarioError("cannot open instance manifest '" + manifest.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ScenarioError("instance manifest '" + manifest.string() + "' is empty");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "path")
    throw ScenarioError("instance manifest header must be id,path,f1,...,fd");
  const std::size_t d = header.size() - 2;

  InstanceSet set;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    Instance inst;
    if (fields.empty() || fields[0].empty())
      throw ScenarioError("manifest line " + std::to_string(line_no) + ": missing instance id");
    inst.id = fields[0];
    if (fields.size() != d + 2)
      throw ScenarioError("instance '" + inst.id + "': expected " + std::to_string(d) +
                          " feature columns, got " + std::to_string(fields.size() - 2));
    inst.path = fields[1];
    for (std::size_t i = 2; i < fields.size(); ++i) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(fields[i], &pos);
        if (pos != fields[i].size()) throw std::invalid_argument("trailing characters");
        inst.features.push_back(v);
      } catch (const std::exception&) {
        throw ScenarioError("instance '" + inst.id + "': feature column " + std::to_string(i - 1) +
                            " is not numeric");
      }
    }
    if (inst.synthetic()) inst.record = inst.features;
    try {
      set.add(std::move(inst));
    } catch (const Error& e) {
      throw ScenarioError(std::string(e.what()) + " (manifest line " + std::to_string(line_no) + ")");
    }
  }
  return set;
}

} // namespace acpf
