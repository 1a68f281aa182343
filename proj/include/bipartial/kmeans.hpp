#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bipartial/core.hpp"
#include "bipartial/engine.hpp"
#include "bipartial/objectives.hpp"

namespace bipartial {

enum class Seeding { random, farthest_point };

Seeding parse_seeding(std::string_view name);
std::string_view to_string(Seeding seeding);

struct KMeansOptions {
  Seeding seeding = Seeding::random;
  std::size_t restarts = 10;
  std::uint64_t seed = 1;
  Metric metric = Metric::manhattan;
  std::size_t max_iterations = 300;
  /// Worker threads for restarts; the result does not depend on it.
  std::size_t threads = 1;
};

struct CentroidModel {
  std::size_t p = 0;
  /// p x m, row-major.
  std::vector<double> centroids;
  Partition assignment;
  Metric metric = Metric::squared_euclidean;
  double qd = 0.0;
  std::size_t iterations = 0;
  /// Q_D after seeding-and-assignment, then after every iteration.
  std::vector<double> qd_trace;
  std::size_t restart = 0;

  std::span<const double> centroid(std::size_t q) const {
    const std::size_t m = centroids.size() / p;
    return {centroids.data() + q * m, m};
  }
};

/// Centre-and-reallocate from the best of `restarts` seedings. Restart k uses
/// its own generator seeded from (seed, k); the lowest Q_D wins, earlier
/// restarts on ties.
CentroidModel kmeans_classic(const DataTable& data, std::size_t p, const KMeansOptions& options);

/// One centre-and-reallocate run from explicit initial centres.
CentroidModel kmeans_from(const DataTable& data, std::vector<double> centroids, Metric metric,
                          std::size_t max_iterations = 300);

struct KMeansValues {
  double qd = 0.0;
  double qs = 0.0;
  double total = 0.0;
};

/// Q_D, the outer-similarity term Q^S = w * sum_i max_{q' != q(i)} s(x_i, x^{q'})
/// and their sum. `offset` is the proximity offset (s = max(0, offset - d)).
KMeansValues bipartial_kmeans_objective(const DataTable& data, const CentroidModel& model, double offset,
                                        double outer_weight = 0.5);

/// Same values for an arbitrary partition with its own group centres.
KMeansValues bipartial_kmeans_objective(const DataTable& data, const Partition& partition, Metric metric,
                                        double offset, double outer_weight = 0.5);

/// Proximity offset for object-centroid proximities: the transform resolved
/// on the object-object distances under `metric`.
double kmeans_offset(const DataTable& data, Metric metric, const ProximityTransform& transform);

/// Bi-partial k-means merger state in minimised form. For clusters A and B,
/// ΔD = D(A∪B) - D(A) - D(B) and ΔS = sum_{i∈A} s(x_i, x^B) + sum_{j∈B} s(x_j, x^A);
/// the weighted outer-similarity change w ΔS is reported as the qs delta.
class KMeansObjective final : public BipartialObjective {
 public:
  KMeansObjective(const DataTable& data, Metric metric, double offset, double outer_weight, const Partition& atoms);

  std::string name() const override { return "kmeans"; }
  std::size_t atom_count() const override { return p0_; }
  Orientation orientation() const override { return Orientation::minimize; }
  /// Q^S of the current partition (zero for a single cluster).
  double qs_value() const override;
  /// Q_D of the current partition.
  double qd_value() const override;
  Deltas deltas(std::size_t a, std::size_t b) const override;
  void on_merge(std::size_t a, std::size_t b) override;
  bool pair_local() const override { return true; }

  /// r = wΔS / (wΔS + ΔD); 1 when both vanish.
  double merge_threshold(std::size_t a, std::size_t b) const;
  const std::vector<std::size_t>& active() const { return active_; }
  std::span<const double> center(std::size_t a) const { return centers_[a]; }
  double cluster_cost(std::size_t a) const { return cost_[a]; }

 private:
  void refresh_pair(std::size_t a, std::size_t b);

  const DataTable& data_;
  Metric metric_;
  double offset_;
  double weight_;
  std::size_t p0_ = 0;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::vector<double>> centers_;
  std::vector<double> cost_;
  std::vector<double> union_cost_;
  std::vector<double> cross_s_;
  std::vector<std::size_t> active_;
};

struct KMeansMergeOptions {
  Metric metric = Metric::manhattan;
  ProximityTransform transform;
  double outer_weight = 0.5;
};

/// Full merger hierarchy from the given atoms (singletons by default). The
/// history is in the descending r scale: every record carries
/// r = w ΔS / (w ΔS + ΔD) and the largest threshold merges first.
MergeHistory run_bipartial_kmeans(const DataTable& data, const KMeansMergeOptions& options,
                                  const std::optional<Partition>& atoms = std::nullopt);

enum class HybridStage { kmeans, additive, minmax, avg_additive, facility };

HybridStage parse_hybrid_stage(std::string_view name);
std::string_view to_string(HybridStage stage);

struct HybridOptions {
  /// 0 selects ceil(sqrt(n)).
  std::size_t first_stage_p = 0;
  HybridStage stage = HybridStage::kmeans;
  KMeansOptions kmeans;
  KMeansMergeOptions merge;
  FacilityOptions facility;
};

struct CurvePoint {
  std::size_t t = 0;
  std::size_t p = 0;
  KMeansValues values;
};

struct HybridResult {
  Partition atoms;
  MergeHistory history;
  StopDecision decision;
  Partition partition;
  /// Q_D, Q^S and Q_D^S of the object partition at every level of the history.
  std::vector<CurvePoint> curve;
};

std::size_t default_first_stage_p(std::size_t n);

HybridResult hybrid_two_stage(const DataTable& data, const HybridOptions& options);

struct SweepRow {
  std::size_t p = 0;
  KMeansValues values;
};

std::vector<SweepRow> kmeans_sweep(const DataTable& data, std::size_t p_min, std::size_t p_max,
                                   const KMeansOptions& options, const ProximityTransform& transform,
                                   double outer_weight = 0.5);

/// Index of the row with the smallest Q_D^S (first on ties).
std::size_t sweep_argmin(const std::vector<SweepRow>& rows);

}  // namespace bipartial
