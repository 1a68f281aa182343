#include "bipartial/core.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

namespace bipartial {

Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "squared_euclidean" || name == "sqeuclidean") return Metric::squared_euclidean;
  if (name == "manhattan" || name == "cityblock") return Metric::manhattan;
  throw ConfigError(fmt::format("metric: unknown value '{}'", name));
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::euclidean: return "euclidean";
    case Metric::squared_euclidean: return "squared_euclidean";
    case Metric::manhattan: return "manhattan";
  }
  return "?";
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  double acc = 0.0;
  switch (metric) {
    case Metric::manhattan:
      for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
      return acc;
    case Metric::euclidean:
    case Metric::squared_euclidean:
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        acc += diff * diff;
      }
      return metric == Metric::euclidean ? std::sqrt(acc) : acc;
  }
  return acc;
}

DataTable::DataTable(std::size_t n_features, std::vector<double> values,
                     std::vector<std::string> object_ids)
    : m_(n_features), values_(std::move(values)), ids_(std::move(object_ids)) {
  if (m_ == 0) throw InputError("data: at least one feature column is required");
  if (values_.empty() || values_.size() % m_ != 0)
    throw InputError(fmt::format("data: {} values do not form rows of {} features", values_.size(), m_));
  n_ = values_.size() / m_;
  for (std::size_t idx = 0; idx < values_.size(); ++idx) {
    if (!std::isfinite(values_[idx]))
      throw InputError(fmt::format("data: non-finite value at object {}, feature {}", idx / m_, idx % m_));
  }
  if (ids_.empty()) {
    ids_.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) ids_.push_back(std::to_string(i));
  }
  if (ids_.size() != n_)
    throw InputError(fmt::format("data: {} object ids for {} objects", ids_.size(), n_));
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw InputError(fmt::format("data: duplicate object id '{}'", id));
  }
}

ProximityTransform parse_transform(std::string_view kind, double c) {
  if (kind == "average_preserving" || kind == "average") return ProximityTransform::average_preserving();
  if (kind == "max_complement") return ProximityTransform::max_complement();
  if (kind == "affine") return ProximityTransform::affine(c);
  throw ConfigError(fmt::format("transform: unknown value '{}'", kind));
}

std::string to_string(const ProximityTransform& transform) {
  switch (transform.kind) {
    case TransformKind::average_preserving: return "average_preserving";
    case TransformKind::max_complement: return "max_complement";
    case TransformKind::affine: return fmt::format("affine({:.17g})", transform.c);
  }
  return "?";
}

DissimilarityStore::DissimilarityStore(std::size_t n, std::vector<double> d) : n_(n), d_(std::move(d)) {
  if (n_ == 0) throw InputError("distance matrix: no objects");
  if (d_.size() != n_ * n_)
    throw InputError(fmt::format("distance matrix: expected {} entries, got {}", n_ * n_, d_.size()));
  for (std::size_t i = 0; i < n_; ++i) {
    if (d_[i * n_ + i] != 0.0) throw InputError(fmt::format("distance matrix: non-zero diagonal at {}", i));
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = d_[i * n_ + j];
      if (!std::isfinite(v) || v < 0.0)
        throw InputError(fmt::format("distance matrix: entry ({}, {}) = {} is not a finite non-negative value", i, j, v));
      if (v != d_[j * n_ + i]) throw InputError(fmt::format("distance matrix: entry ({}, {}) is not symmetric", i, j));
    }
  }
}

double DissimilarityStore::mean_distance() const {
  if (n_ < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) sum += d(i, j);
  return sum / (static_cast<double>(n_) * static_cast<double>(n_ - 1) / 2.0);
}

double DissimilarityStore::max_distance() const {
  double best = 0.0;
  for (double v : d_) best = std::max(best, v);
  return best;
}

DissimilarityStore compute_distances(const DataTable& data, Metric metric) {
  const std::size_t n = data.n_objects();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = distance(data.row(i), data.row(j), metric);
      if (!std::isfinite(v)) throw InputError(fmt::format("data: distance between objects {} and {} overflows", i, j));
      d[i * n + j] = v;
      d[j * n + i] = v;
    }
  }
  return DissimilarityStore(n, std::move(d));
}

double transform_offset(const DissimilarityStore& store, const ProximityTransform& transform) {
  switch (transform.kind) {
    case TransformKind::average_preserving: return 2.0 * store.mean_distance();
    case TransformKind::max_complement: return store.max_distance();
    case TransformKind::affine: {
      const double dmax = store.max_distance();
      if (!(transform.c >= dmax))
        throw ConfigError(fmt::format("transform.c: affine offset {} is below the maximum distance {}", transform.c, dmax));
      return transform.c;
    }
  }
  return kNaN;
}

DissimilarityStore apply_transform(const DissimilarityStore& store, const ProximityTransform& transform) {
  DissimilarityStore out = store;
  const double offset = transform_offset(store, transform);
  const std::size_t n = store.size();
  out.s_.assign(n * n, 0.0);
  out.clamped_ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = store.d(i, j);
      if (d > offset) ++out.clamped_;
      const double s = proximity(offset, d);
      out.s_[i * n + j] = s;
      out.s_[j * n + i] = s;
    }
  }
  out.transform_ = transform;
  out.offset_ = offset;
  return out;
}

Partition::Partition(std::vector<int> labels) : labels_(std::move(labels)) {
  std::vector<int> remap;
  int next = 0;
  for (int& label : labels_) {
    if (label < 0) throw InputError(fmt::format("partition: negative cluster label {}", label));
    const auto idx = static_cast<std::size_t>(label);
    if (idx >= remap.size()) remap.resize(idx + 1, -1);
    if (remap[idx] < 0) remap[idx] = next++;
    label = remap[idx];
  }
  p_ = static_cast<std::size_t>(next);
}

Partition Partition::singletons(std::size_t n) {
  std::vector<int> labels(n);
  std::iota(labels.begin(), labels.end(), 0);
  return Partition(std::move(labels));
}

Partition Partition::single_cluster(std::size_t n) { return Partition(std::vector<int>(n, 0)); }

std::vector<std::vector<std::size_t>> Partition::blocks() const {
  std::vector<std::vector<std::size_t>> out(p_);
  for (std::size_t i = 0; i < labels_.size(); ++i) out[static_cast<std::size_t>(labels_[i])].push_back(i);
  return out;
}

void validate_history(const MergeHistory& history) {
  const std::size_t n = history.leaves;
  if (n == 0) throw ContractViolation("history: no leaves");
  if (history.records.size() >= n) throw ContractViolation("history: more than n-1 mergers");
  std::vector<bool> live(2 * n - 1, false);
  std::vector<std::size_t> size(2 * n - 1, 1);
  std::fill(live.begin(), live.begin() + static_cast<std::ptrdiff_t>(n), true);
  for (std::size_t t = 0; t < history.records.size(); ++t) {
    const auto& rec = history.records[t];
    if (rec.step != t + 1) throw ContractViolation(fmt::format("history: record {} has step {}", t, rec.step));
    if (rec.node != n + t) throw ContractViolation(fmt::format("history: step {} creates node {}", rec.step, rec.node));
    if (rec.left == rec.right || rec.left >= n + t || rec.right >= n + t || !live[rec.left] || !live[rec.right])
      throw ContractViolation(fmt::format("history: step {} merges unavailable nodes {} and {}", rec.step, rec.left, rec.right));
    live[rec.left] = live[rec.right] = false;
    live[rec.node] = true;
    size[rec.node] = size[rec.left] + size[rec.right];
    if (rec.size != size[rec.node])
      throw ContractViolation(fmt::format("history: step {} size {} != {}", rec.step, rec.size, size[rec.node]));
  }
  if (!history.profile.empty() && history.profile.qs.size() != history.records.size() + 1)
    throw ContractViolation("history: profile length does not match the number of mergers");
}

Partition partition_at_step(const MergeHistory& history, std::size_t t) {
  const std::size_t n = history.leaves;
  if (t > history.records.size())
    throw InputError(fmt::format("partition_at_step: t = {} outside 0..{}", t, history.records.size()));
  // Each node points at the node that absorbed it; leaves resolve by walking up.
  std::vector<std::size_t> parent(n + t);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t u = 0; u < t; ++u) {
    const auto& rec = history.records[u];
    parent[rec.left] = rec.node;
    parent[rec.right] = rec.node;
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = i;
    while (parent[root] != root) {
      parent[root] = parent[parent[root]];
      root = parent[root];
    }
    labels[i] = static_cast<int>(root);
  }
  return Partition(std::move(labels));
}

}  // namespace bipartial
