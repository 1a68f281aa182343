#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bipartial/core.hpp"
#include "bipartial/objectives.hpp"

namespace bipartial {

inline constexpr std::size_t kOracleGuard = 12;
inline constexpr std::size_t kOracleHardCap = 14;

std::uint64_t bell_number(std::size_t n);

/// Walks the set partitions of n objects as restricted growth strings in
/// lexicographic order. A fixed prefix restricts the walk to the partitions
/// that start with it.
class PartitionEnumerator {
 public:
  explicit PartitionEnumerator(std::size_t n, std::vector<int> prefix = {});

  const std::vector<int>& labels() const { return labels_; }
  /// Advances to the next string; false once the walk is exhausted.
  bool next();

 private:
  std::size_t fixed_ = 0;
  std::vector<int> labels_;
  // prefix_max_[i] = max(labels_[0..i])
  std::vector<int> prefix_max_;
};

/// Throws ConfigError if n exceeds the guard or the guard exceeds the hard cap.
void check_oracle_size(std::size_t n, std::size_t guard);

void for_each_partition(std::size_t n, const std::function<void(const std::vector<int>&)>& visit,
                        std::size_t guard = kOracleGuard);

std::vector<Partition> enumerate_partitions(std::size_t n, std::size_t guard = kOracleGuard);

enum class OracleObjective { additive, minmax, avg_additive, facility, kmeans };

OracleObjective parse_oracle_objective(std::string_view name);
std::string_view to_string(OracleObjective kind);

struct OracleSpec {
  OracleObjective kind = OracleObjective::additive;
  FacilityOptions facility;
  /// k-means: metric, proximity offset and Q^S weight.
  Metric metric = Metric::squared_euclidean;
  double offset = 0.0;
  double outer_weight = 0.5;

  Orientation orientation() const;
};

/// The two objective terms of one partition. Q(P, r) = r qs + (1 - r) qd in
/// both orientations; qs is the similarity side.
struct OracleValue {
  double qs = 0.0;
  double qd = 0.0;
  Orientation orientation = Orientation::maximize;

  double at(double r) const { return r * qs + (1.0 - r) * qd; }
};

/// From-scratch evaluation. `data` is needed by facility (centroid cost) and
/// kmeans; `store` (with proximities) by the pairwise families.
OracleValue evaluate(const OracleSpec& spec, const DissimilarityStore* store, const DataTable* data,
                     const Partition& partition);

struct OracleOptions {
  std::size_t guard = kOracleGuard;
  std::size_t threads = 1;
};

struct OracleBest {
  Partition partition;
  OracleValue value;
  double q = 0.0;
  std::uint64_t evaluated = 0;
};

/// Global optimum of Q(P, r) (max or min per orientation); ties go to the
/// partition that comes first in enumeration order.
OracleBest oracle_best(const OracleSpec& spec, const DissimilarityStore* store, const DataTable* data, double r,
                       const OracleOptions& options = {});

/// The r at which Q(P, r) = Q(P_ref, r), for P on the coarser side of P_ref:
/// Q_S(P) >= Q_S(P_ref), Q^D(P) <= Q^D(P_ref) when maximising (the mirror
/// image when minimising), not both equal. Throws ContractViolation when the
/// pair is not ordered that way or P == P_ref.
double oracle_switch_point(const OracleSpec& spec, const DissimilarityStore* store, const DataTable* data,
                           const Partition& p, const Partition& p_ref);

}  // namespace bipartial
