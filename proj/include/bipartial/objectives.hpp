#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "bipartial/core.hpp"
#include "bipartial/engine.hpp"

namespace bipartial {

enum class ObjectiveKind { additive, facility, minmax, avg_additive };

ObjectiveKind parse_objective(std::string_view name);
std::string_view to_string(ObjectiveKind kind);

enum class FacilityCost { sum_to_centroid, pairwise_sum_normalized };

FacilityCost parse_facility_cost(std::string_view name);
std::string_view to_string(FacilityCost cost);

struct FacilityOptions {
  FacilityCost cost = FacilityCost::sum_to_centroid;
  double scale = 1.0;
  /// Distance used by sum_to_centroid.
  Metric metric = Metric::euclidean;
};

/// Shared bookkeeping for objectives defined on pairwise d and s: per-slot
/// object counts, within-cluster sums and cross-cluster sums of d and s.
class PairwiseObjective : public BipartialObjective {
 public:
  PairwiseObjective(const DissimilarityStore& store, const Partition& atoms);

  std::size_t atom_count() const override { return p0_; }
  bool coincident(std::size_t a, std::size_t b) const override { return cross_d(a, b) == 0.0; }

  std::size_t cluster_size(std::size_t a) const { return size_[a]; }
  double cross_d(std::size_t a, std::size_t b) const { return cross_d_[a * p0_ + b]; }
  double cross_s(std::size_t a, std::size_t b) const { return cross_s_[a * p0_ + b]; }
  const std::vector<std::size_t>& active() const { return active_; }

 protected:
  /// Folds slot b into slot a.
  void merge_sums(std::size_t a, std::size_t b);

  const DissimilarityStore& store_;
  std::size_t p0_ = 0;
  std::vector<std::size_t> size_;
  std::vector<double> cross_d_;
  std::vector<double> cross_s_;
  std::vector<double> intra_d_;
  std::vector<double> intra_s_;
  std::vector<std::size_t> active_;
};

/// Q_S = sum of within-cluster s over pairs, Q^D = sum of between-cluster d.
/// Merging A and B gains the cross sums: Δ_S = S_AB, Δ_D = D_AB, so
/// r* = D_AB / (D_AB + S_AB).
class AdditiveObjective final : public PairwiseObjective {
 public:
  AdditiveObjective(const DissimilarityStore& store, const Partition& atoms);
  explicit AdditiveObjective(const DissimilarityStore& store);

  std::string name() const override { return "additive"; }
  Orientation orientation() const override { return Orientation::maximize; }
  double qs_value() const override;
  double qd_value() const override;
  Deltas deltas(std::size_t a, std::size_t b) const override;
  void on_merge(std::size_t a, std::size_t b) override { merge_sums(a, b); }
  double link_value(std::size_t a, std::size_t b) const override;
  bool pair_local() const override { return true; }
};

/// D(A,B) = mean cross distance, S(A) = within-cluster pair sum of s;
/// Q^D sums D over cluster pairs and Q_S sums S over clusters.
class AvgAdditiveObjective final : public PairwiseObjective {
 public:
  AvgAdditiveObjective(const DissimilarityStore& store, const Partition& atoms);
  explicit AvgAdditiveObjective(const DissimilarityStore& store);

  std::string name() const override { return "avg_additive"; }
  Orientation orientation() const override { return Orientation::maximize; }
  double qs_value() const override;
  double qd_value() const override;
  Deltas deltas(std::size_t a, std::size_t b) const override;
  void on_merge(std::size_t a, std::size_t b) override;
  double link_value(std::size_t a, std::size_t b) const override { return mean_d(a, b); }

  double mean_d(std::size_t a, std::size_t b) const;

 private:
  // row_[a] = sum over other active clusters c of mean_d(a, c)
  std::vector<double> row_;
};

/// D(A,B) = min cross distance, S(A) = max within-cluster s (0 for a
/// singleton); Q^D = sum of D over cluster pairs, Q_S = sum card(A) S(A).
class MinMaxObjective final : public PairwiseObjective {
 public:
  MinMaxObjective(const DissimilarityStore& store, const Partition& atoms);
  explicit MinMaxObjective(const DissimilarityStore& store);

  std::string name() const override { return "minmax"; }
  Orientation orientation() const override { return Orientation::maximize; }
  double qs_value() const override;
  double qd_value() const override;
  Deltas deltas(std::size_t a, std::size_t b) const override;
  void on_merge(std::size_t a, std::size_t b) override;
  double link_value(std::size_t a, std::size_t b) const override { return min_d_[a * p0_ + b]; }

  double within_max_s(std::size_t a) const { return within_s_[a]; }

 private:
  std::vector<double> min_d_;
  std::vector<double> max_s_;
  std::vector<double> within_s_;
};

/// Facility location in minimised bi-partial form: Q_D = sum of cluster costs
/// D(A), Q^S = p (one unit per opened cluster), Q = Q_D + Q^S. Singletons cost
/// nothing, so Q(I) = n.
class FacilityObjective final : public BipartialObjective {
 public:
  /// `data` is required for sum_to_centroid, `store` for pairwise_sum_normalized.
  FacilityObjective(const FacilityOptions& options, const DataTable* data, const DissimilarityStore* store,
                    const Partition& atoms);

  std::string name() const override { return "facility"; }
  std::size_t atom_count() const override { return p0_; }
  Orientation orientation() const override { return Orientation::minimize; }
  double qs_value() const override { return static_cast<double>(active_.size()); }
  double qd_value() const override;
  Deltas deltas(std::size_t a, std::size_t b) const override;
  void on_merge(std::size_t a, std::size_t b) override;
  double link_value(std::size_t a, std::size_t b) const override { return cost_increase(a, b); }
  bool pair_local() const override { return true; }

  /// Q(P') - Q(P) for merging a and b: D(A∪B) - D(A) - D(B) - 1. Negative
  /// means the merger strictly improves Q.
  double merge_gain(std::size_t a, std::size_t b) const { return cost_increase(a, b) - 1.0; }
  double cost_increase(std::size_t a, std::size_t b) const;
  double cluster_cost(std::size_t a) const { return cost_[a]; }
  double total() const { return qd_value() + qs_value(); }
  const std::vector<std::size_t>& active() const { return active_; }
  const Partition& atoms() const { return atoms_; }

 private:
  double union_cost(std::size_t a, std::size_t b) const;
  double cost_of(const std::vector<std::size_t>& members) const;

  FacilityOptions options_;
  const DataTable* data_;
  const DissimilarityStore* store_;
  Partition atoms_;
  std::size_t p0_ = 0;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<double> cost_;
  std::vector<double> union_cache_;
  std::vector<std::size_t> active_;
  // pairwise_sum_normalized only: within and cross sums of d
  std::vector<double> intra_sum_;
  std::vector<double> cross_sum_;
};

struct FacilityResult {
  Partition partition;
  /// Only the executed (strictly improving) mergers.
  MergeHistory history;
  /// Q(P) before the first and after every executed merger.
  std::vector<double> q_values;
};

/// Steepest-descent merging: takes the most negative merge_gain until no pair
/// improves Q. Ties go to the lowest slot pair.
FacilityResult run_facility(FacilityObjective& objective);

struct ObjectiveOptions {
  ObjectiveKind kind = ObjectiveKind::additive;
  FacilityOptions facility;
};

std::unique_ptr<BipartialObjective> make_objective(const ObjectiveOptions& options, const DissimilarityStore& store,
                                                   const Partition& atoms, const DataTable* data = nullptr);

}  // namespace bipartial
