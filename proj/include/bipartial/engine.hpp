#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bipartial/core.hpp"

namespace bipartial {

/// Magnitudes of the two objective changes caused by merging two clusters.
/// `qs` is the change of the similarity-side term (the one weighted by r),
/// `qd` the change of the distance-side term. For a maximised objective
/// (Q = r Q_S + (1-r) Q^D) these are the gain in Q_S and the loss in Q^D; for
/// the minimised dual (Q = r Q^S + (1-r) Q_D) the loss in Q^S and the gain in
/// Q_D. Both must be non-negative.
struct Deltas {
  double qs = 0.0;
  double qd = 0.0;
};

/// A bi-partial objective as a mutable state machine over a shrinking set of
/// clusters. Clusters are addressed by slot: the objective is built on p0
/// atoms numbered 0..p0-1 in order of their smallest object, and merging
/// slots a < b keeps the union in slot a. A slot therefore always holds the
/// cluster whose smallest atom is that slot.
class BipartialObjective {
 public:
  virtual ~BipartialObjective() = default;

  virtual std::string name() const = 0;
  virtual std::size_t atom_count() const = 0;
  virtual Orientation orientation() const = 0;

  /// Objective terms of the current partition, evaluated from the
  /// objective's cluster state rather than by accumulating deltas.
  virtual double qs_value() const = 0;
  virtual double qd_value() const = 0;

  virtual Deltas deltas(std::size_t a, std::size_t b) const = 0;
  virtual void on_merge(std::size_t a, std::size_t b) = 0;

  /// Merge height reported in the dendrogram (a distance-like quantity).
  virtual double link_value(std::size_t a, std::size_t b) const { return deltas(a, b).qd; }

  /// True for clusters at zero distance from each other; such pairs are
  /// merged at r = 0 ahead of the main loop.
  virtual bool coincident(std::size_t /*a*/, std::size_t /*b*/) const { return false; }

  /// True when deltas(a, b) depends on clusters a and b only, which lets the
  /// engine keep thresholds in a lazily invalidated heap.
  virtual bool pair_local() const { return false; }
};

/// r* = Δqd / (Δqd + Δqs), or nullopt for a degenerate pair (both zero).
/// Throws ContractViolation if either delta is negative beyond rounding.
std::optional<double> merge_threshold(const BipartialObjective& objective, std::size_t a, std::size_t b);

/// Validates a delta pair (clamping rounding-level negatives to zero).
Deltas checked_deltas(const BipartialObjective& objective, std::size_t a, std::size_t b);

/// Runs the min-r* merger to completion: p0 - 1 records in ascending r scale,
/// with the objective profile for every level.
MergeHistory run_bipartial(BipartialObjective& objective);

enum class StopRule { r_crossing, global_argmax_at_half };

struct StopDecision {
  std::size_t step = 0;
  StopRule rule = StopRule::r_crossing;
  bool r_sequence_monotone = true;
};

std::string_view to_string(StopRule rule);

/// True if r moves only in the direction of the history's scale.
bool r_monotone(const MergeHistory& history);

/// Crossing rule when r is monotone, otherwise the best Q(P^t, 1/2) over all
/// recorded levels (max or min per orientation; ties to the larger t).
StopDecision select_step(const MergeHistory& history);

std::pair<Partition, StopDecision> select_partition(const MergeHistory& history);

struct EnvelopeReport {
  /// g_t = qs_t - qd_t, t = 0..T.
  std::vector<double> gradient;
  /// gradient_increasing[t] is g_t >= g_{t-1}; entry 0 is always true.
  std::vector<bool> gradient_increasing;
  /// Steps where r moved against the scale direction (an r decrease for
  /// ascending histories, an increase for descending ones).
  std::vector<std::size_t> r_inversions;

  bool convex() const;
};

EnvelopeReport envelope_report(const MergeHistory& history);

/// Maps a partition of atoms back to objects.
Partition compose(const Partition& atoms, const Partition& atom_partition);

}  // namespace bipartial
