#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bipartial {

/// Malformed or inconsistent input data (CLI exit code 1).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter combination (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An objective or history broke a required invariant (CLI exit code 2).
class ContractViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Metric { euclidean, squared_euclidean, manhattan };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric metric);

double distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// n objects x m real features, row-major.
class DataTable {
 public:
  DataTable(std::size_t n_features, std::vector<double> values,
            std::vector<std::string> object_ids = {});

  std::size_t n_objects() const { return n_; }
  std::size_t n_features() const { return m_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * m_, m_}; }
  double value(std::size_t i, std::size_t k) const { return values_[i * m_ + k]; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& object_ids() const { return ids_; }
  const std::string& object_id(std::size_t i) const { return ids_[i]; }

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> values_;
  std::vector<std::string> ids_;
};

enum class TransformKind { average_preserving, max_complement, affine };

/// Distance-to-proximity map. Every kind reduces to s = max(0, offset - d);
/// only the offset differs (2 * mean distance, max distance, or c).
struct ProximityTransform {
  TransformKind kind = TransformKind::average_preserving;
  double c = 0.0;

  static ProximityTransform average_preserving() { return {}; }
  static ProximityTransform max_complement() { return {TransformKind::max_complement, 0.0}; }
  static ProximityTransform affine(double c) { return {TransformKind::affine, c}; }

  bool operator==(const ProximityTransform&) const = default;
};

ProximityTransform parse_transform(std::string_view kind, double c = 0.0);
std::string to_string(const ProximityTransform& transform);

inline double proximity(double offset, double d) { return d < offset ? offset - d : 0.0; }

/// Dense symmetric distance matrix plus the derived proximity matrix.
class DissimilarityStore {
 public:
  /// `d` is n*n row-major; must be finite, non-negative, zero-diagonal and
  /// exactly symmetric.
  DissimilarityStore(std::size_t n, std::vector<double> d);

  std::size_t size() const { return n_; }
  double d(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  double s(std::size_t i, std::size_t j) const { return s_[i * n_ + j]; }
  const std::vector<double>& distances() const { return d_; }

  bool has_proximities() const { return !s_.empty() || n_ == 0; }
  const ProximityTransform& transform() const { return transform_; }
  double offset() const { return offset_; }
  std::size_t clamped_pairs() const { return clamped_; }

  /// Mean over the n(n-1)/2 off-diagonal pairs (0 when n = 1).
  double mean_distance() const;
  double max_distance() const;

 private:
  friend DissimilarityStore apply_transform(const DissimilarityStore&, const ProximityTransform&);

  std::size_t n_ = 0;
  std::vector<double> d_;
  std::vector<double> s_;
  ProximityTransform transform_;
  double offset_ = kNaN;
  std::size_t clamped_ = 0;
};

DissimilarityStore compute_distances(const DataTable& data, Metric metric);

/// Returns a copy with s populated. Throws ConfigError for affine(c) with c < d_max.
DissimilarityStore apply_transform(const DissimilarityStore& store, const ProximityTransform& transform);

/// Offset the transform resolves to on the given store.
double transform_offset(const DissimilarityStore& store, const ProximityTransform& transform);

/// Assignment of n objects to p non-empty clusters. Labels are kept in
/// canonical first-occurrence order (a restricted growth string), so two
/// partitions compare equal iff they group objects identically.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<int> labels);

  static Partition singletons(std::size_t n);
  static Partition single_cluster(std::size_t n);

  std::size_t size() const { return labels_.size(); }
  std::size_t cluster_count() const { return p_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t i) const { return labels_[i]; }
  std::vector<std::vector<std::size_t>> blocks() const;

  bool operator==(const Partition&) const = default;

 private:
  std::vector<int> labels_;
  std::size_t p_ = 0;
};

enum class Orientation { maximize, minimize };

/// Direction in which merge thresholds are expected to move. The generic
/// engine produces ascending r; the k-means merger works from r = 1 down.
enum class RScale { ascending, descending };

/// Dendrogram node ids follow the usual linkage-matrix convention: leaves are
/// 0..n-1 and the merger at step t creates node n + t - 1.
struct MergeRecord {
  std::size_t step = 0;
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t node = 0;
  std::size_t size = 0;
  double link_value = kNaN;
  double r = kNaN;
  double delta_qs = kNaN;
  double delta_qd = kNaN;

  bool operator==(const MergeRecord&) const = default;
};

/// Objective values along the hierarchy, index t = 0..records.
/// qs is the similarity-side term (weighted by r), qd the distance side.
struct ObjectiveProfile {
  Orientation orientation = Orientation::maximize;
  std::vector<double> qs;
  std::vector<double> qd;
  std::vector<double> q_half;

  bool empty() const { return qs.empty(); }
  void push(double qs_value, double qd_value) {
    qs.push_back(qs_value);
    qd.push_back(qd_value);
    q_half.push_back(0.5 * qs_value + 0.5 * qd_value);
  }
};

struct MergeHistory {
  std::size_t leaves = 0;
  std::vector<MergeRecord> records;
  ObjectiveProfile profile;
  RScale r_scale = RScale::ascending;

  bool complete() const { return leaves > 0 && records.size() + 1 == leaves; }
};

/// Checks step numbering and that every merger joins two live nodes.
void validate_history(const MergeHistory& history);

Partition partition_at_step(const MergeHistory& history, std::size_t t);

}  // namespace bipartial
