#include "bipartial/engine.hpp"

#include <algorithm>
#include <cstdint>
#include <queue>

#include <fmt/format.h>

namespace bipartial {

namespace {

double clamp_rounding(double value, double scale, const BipartialObjective& objective, std::size_t a,
                      std::size_t b, const char* which) {
  if (value >= 0.0) return value;
  if (-value <= 1e-9 * std::max(1.0, scale)) return 0.0;
  throw ContractViolation(fmt::format(
      "objective '{}': {} = {:.17g} < 0 when merging clusters {} and {}; the opposite-monotonicity "
      "assumption does not hold for this instance",
      objective.name(), which, value, a, b));
}

double threshold_of(const Deltas& d) {
  const double total = d.qd + d.qs;
  return total > 0.0 ? d.qd / total : 0.0;
}

}  // namespace

Deltas checked_deltas(const BipartialObjective& objective, std::size_t a, std::size_t b) {
  Deltas d = objective.deltas(a, b);
  if (!std::isfinite(d.qs) || !std::isfinite(d.qd))
    throw ContractViolation(fmt::format("objective '{}': non-finite delta for clusters {} and {}", objective.name(), a, b));
  const double scale = std::max(std::abs(d.qs), std::abs(d.qd));
  d.qs = clamp_rounding(d.qs, scale, objective, a, b, "delta_qs");
  d.qd = clamp_rounding(d.qd, scale, objective, a, b, "delta_qd");
  return d;
}

std::optional<double> merge_threshold(const BipartialObjective& objective, std::size_t a, std::size_t b) {
  const Deltas d = checked_deltas(objective, a, b);
  if (d.qd + d.qs == 0.0) return std::nullopt;
  return d.qd / (d.qd + d.qs);
}

MergeHistory run_bipartial(BipartialObjective& objective) {
  const std::size_t p0 = objective.atom_count();
  if (p0 == 0) throw InputError("bipartial: objective has no clusters");

  MergeHistory history;
  history.leaves = p0;
  history.r_scale = RScale::ascending;
  history.profile.orientation = objective.orientation();
  history.profile.push(objective.qs_value(), objective.qd_value());
  history.records.reserve(p0 - 1);

  std::vector<bool> active(p0, true);
  std::vector<std::size_t> node(p0);
  std::vector<std::size_t> size(p0, 1);
  std::vector<std::uint32_t> version(p0, 0);
  for (std::size_t i = 0; i < p0; ++i) node[i] = i;

  auto execute = [&](std::size_t a, std::size_t b, const Deltas& d, double r) {
    MergeRecord rec;
    rec.step = history.records.size() + 1;
    rec.left = node[a];
    rec.right = node[b];
    rec.node = p0 + history.records.size();
    rec.size = size[a] + size[b];
    rec.link_value = objective.link_value(a, b);
    rec.r = r;
    rec.delta_qs = d.qs;
    rec.delta_qd = d.qd;
    objective.on_merge(a, b);
    history.records.push_back(rec);
    history.profile.push(objective.qs_value(), objective.qd_value());
    active[b] = false;
    size[a] = rec.size;
    node[a] = rec.node;
    ++version[a];
  };

  // Coincident and degenerate pairs go first, at r = 0.
  for (bool merged = true; merged && history.records.size() + 1 < p0;) {
    merged = false;
    for (std::size_t a = 0; a < p0 && !merged; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < p0; ++b) {
        if (!active[b]) continue;
        const Deltas d = checked_deltas(objective, a, b);
        if (objective.coincident(a, b) || d.qs + d.qd == 0.0) {
          execute(a, b, d, 0.0);
          merged = true;
          break;
        }
      }
    }
  }

  if (objective.pair_local()) {
    struct Entry {
      double r;
      std::size_t a, b;
      std::uint32_t va, vb;
    };
    auto later = [](const Entry& x, const Entry& y) {
      if (x.r != y.r) return x.r > y.r;
      if (x.a != y.a) return x.a > y.a;
      return x.b > y.b;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(later)> heap(later);
    auto push = [&](std::size_t a, std::size_t b) {
      if (a > b) std::swap(a, b);
      heap.push({threshold_of(checked_deltas(objective, a, b)), a, b, version[a], version[b]});
    };
    for (std::size_t a = 0; a < p0; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < p0; ++b)
        if (active[b]) push(a, b);
    }
    while (history.records.size() + 1 < p0) {
      const Entry top = heap.top();
      heap.pop();
      if (!active[top.a] || !active[top.b] || version[top.a] != top.va || version[top.b] != top.vb) continue;
      const Deltas d = checked_deltas(objective, top.a, top.b);
      execute(top.a, top.b, d, threshold_of(d));
      for (std::size_t c = 0; c < p0; ++c)
        if (active[c] && c != top.a) push(top.a, c);
    }
  } else {
    while (history.records.size() + 1 < p0) {
      std::size_t best_a = p0, best_b = p0;
      Deltas best_d;
      double best_r = 0.0;
      for (std::size_t a = 0; a < p0; ++a) {
        if (!active[a]) continue;
        for (std::size_t b = a + 1; b < p0; ++b) {
          if (!active[b]) continue;
          const Deltas d = checked_deltas(objective, a, b);
          const double r = threshold_of(d);
          if (best_a == p0 || r < best_r) {
            best_a = a;
            best_b = b;
            best_d = d;
            best_r = r;
          }
        }
      }
      execute(best_a, best_b, best_d, best_r);
    }
  }
  return history;
}

std::string_view to_string(StopRule rule) {
  return rule == StopRule::r_crossing ? "r_crossing" : "global_argmax_at_half";
}

bool r_monotone(const MergeHistory& history) {
  const auto& recs = history.records;
  for (std::size_t t = 1; t < recs.size(); ++t) {
    const bool against = history.r_scale == RScale::ascending ? recs[t].r < recs[t - 1].r : recs[t].r > recs[t - 1].r;
    if (against) return false;
  }
  return true;
}

StopDecision select_step(const MergeHistory& history) {
  for (const auto& rec : history.records) {
    if (std::isnan(rec.r)) throw ConfigError("stop rule: history carries no merge thresholds (classical linkage run)");
  }
  StopDecision decision;
  decision.r_sequence_monotone = r_monotone(history);
  if (decision.r_sequence_monotone || history.profile.empty()) {
    decision.rule = StopRule::r_crossing;
    for (const auto& rec : history.records) {
      const bool accept = history.r_scale == RScale::ascending ? rec.r <= 0.5 : rec.r >= 0.5;
      if (accept) decision.step = rec.step;
    }
    return decision;
  }
  decision.rule = StopRule::global_argmax_at_half;
  const auto& q = history.profile.q_half;
  const bool maximize = history.profile.orientation == Orientation::maximize;
  std::size_t best = 0;
  for (std::size_t t = 1; t < q.size(); ++t) {
    if (maximize ? q[t] >= q[best] : q[t] <= q[best]) best = t;
  }
  decision.step = best;
  return decision;
}

std::pair<Partition, StopDecision> select_partition(const MergeHistory& history) {
  const StopDecision decision = select_step(history);
  return {partition_at_step(history, decision.step), decision};
}

bool EnvelopeReport::convex() const {
  return std::all_of(gradient_increasing.begin(), gradient_increasing.end(), [](bool v) { return v; });
}

EnvelopeReport envelope_report(const MergeHistory& history) {
  EnvelopeReport report;
  const auto& prof = history.profile;
  for (std::size_t t = 0; t < prof.qs.size(); ++t) {
    report.gradient.push_back(prof.qs[t] - prof.qd[t]);
    report.gradient_increasing.push_back(t == 0 || report.gradient[t] >= report.gradient[t - 1]);
  }
  const auto& recs = history.records;
  for (std::size_t t = 1; t < recs.size(); ++t) {
    const bool against = history.r_scale == RScale::ascending ? recs[t].r < recs[t - 1].r : recs[t].r > recs[t - 1].r;
    if (against) report.r_inversions.push_back(recs[t].step);
  }
  return report;
}

Partition compose(const Partition& atoms, const Partition& atom_partition) {
  if (atom_partition.size() != atoms.cluster_count())
    throw InputError(fmt::format("compose: partition of {} atoms applied to {} clusters", atom_partition.size(),
                                 atoms.cluster_count()));
  std::vector<int> labels(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i)
    labels[i] = atom_partition.label(static_cast<std::size_t>(atoms.label(i)));
  return Partition(std::move(labels));
}

}  // namespace bipartial
