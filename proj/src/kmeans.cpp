#include "bipartial/kmeans.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "bipartial/centroid.hpp"

namespace bipartial {

Seeding parse_seeding(std::string_view name) {
  if (name == "random") return Seeding::random;
  if (name == "farthest_point" || name == "farthest") return Seeding::farthest_point;
  throw ConfigError(fmt::format("kmeans.seeding: unknown value '{}'", name));
}

std::string_view to_string(Seeding seeding) { return seeding == Seeding::random ? "random" : "farthest_point"; }

namespace {

void require_kmeans_metric(Metric metric) {
  if (metric == Metric::euclidean)
    throw ConfigError("kmeans.metric: centre-and-reallocate needs squared_euclidean or manhattan");
}

std::vector<double> seed_centroids(const DataTable& data, std::size_t p, Seeding seeding, Metric metric,
                                   std::mt19937_64& rng) {
  const std::size_t n = data.n_objects();
  const std::size_t m = data.n_features();
  std::vector<std::size_t> picks;
  if (seeding == Seeding::random) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t k = 0; k < p; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(pool[k], pool[pick(rng)]);
      picks.push_back(pool[k]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    picks.push_back(pick(rng));
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (picks.size() < p) {
      const auto last = data.row(picks.back());
      std::size_t far = 0;
      for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = std::min(nearest[i], distance(data.row(i), last, metric));
        if (nearest[i] > nearest[far]) far = i;
      }
      picks.push_back(far);
    }
  }
  std::vector<double> centroids(p * m);
  for (std::size_t q = 0; q < p; ++q) {
    const auto row = data.row(picks[q]);
    std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(q * m));
  }
  return centroids;
}

}  // namespace

CentroidModel kmeans_from(const DataTable& data, std::vector<double> centroids, Metric metric,
                          std::size_t max_iterations) {
  require_kmeans_metric(metric);
  const std::size_t n = data.n_objects();
  const std::size_t m = data.n_features();
  if (centroids.empty() || centroids.size() % m != 0) throw InputError("kmeans: malformed initial centroids");
  const std::size_t p = centroids.size() / m;
  if (p > n) throw ConfigError(fmt::format("kmeans.p: {} clusters for {} objects", p, n));

  std::vector<int> labels(n, -1);
  std::vector<double> cost(n, 0.0);
  auto center = [&](std::size_t q) { return std::span<const double>(centroids.data() + q * m, m); };

  auto assign = [&] {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = distance(data.row(i), center(0), metric);
      for (std::size_t q = 1; q < p; ++q) {
        const double d = distance(data.row(i), center(q), metric);
        if (d < best_d) {
          best_d = d;
          best = q;
        }
      }
      if (labels[i] != static_cast<int>(best)) changed = true;
      labels[i] = static_cast<int>(best);
      cost[i] = best_d;
    }
    return changed;
  };

  // Empty clusters take the object that currently pays the most.
  auto repair = [&] {
    std::vector<std::size_t> count(p, 0);
    for (int l : labels) ++count[static_cast<std::size_t>(l)];
    for (std::size_t q = 0; q < p; ++q) {
      if (count[q] > 0) continue;
      std::size_t worst = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[static_cast<std::size_t>(labels[i])] < 2) continue;
        if (worst == n || cost[i] > cost[worst]) worst = i;
      }
      if (worst == n) throw ContractViolation("kmeans: cannot repair an empty cluster");
      --count[static_cast<std::size_t>(labels[worst])];
      labels[worst] = static_cast<int>(q);
      cost[worst] = 0.0;
      count[q] = 1;
      const auto row = data.row(worst);
      std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(q * m));
    }
  };

  auto update = [&] {
    std::vector<std::vector<std::size_t>> members(p);
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);
    double total = 0.0;
    for (std::size_t q = 0; q < p; ++q) {
      const auto c = group_center(data, members[q], metric);
      std::copy(c.begin(), c.end(), centroids.begin() + static_cast<std::ptrdiff_t>(q * m));
      total += group_dispersion(data, members[q], c, metric);
    }
    return total;
  };

  CentroidModel model;
  model.p = p;
  model.metric = metric;
  assign();
  repair();
  model.qd_trace.push_back(update());
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const bool changed = assign();
    repair();
    if (!changed) break;
    ++model.iterations;
    model.qd_trace.push_back(update());
  }
  model.qd = model.qd_trace.back();
  model.centroids = std::move(centroids);
  model.assignment = Partition(labels);
  // Partition relabels clusters in first-occurrence order; keep centroids aligned.
  std::vector<double> ordered(model.centroids.size());
  std::vector<bool> placed(p, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto from = static_cast<std::size_t>(labels[i]);
    const auto to = static_cast<std::size_t>(model.assignment.label(i));
    if (placed[to]) continue;
    placed[to] = true;
    std::copy_n(model.centroids.begin() + static_cast<std::ptrdiff_t>(from * m), m,
                ordered.begin() + static_cast<std::ptrdiff_t>(to * m));
  }
  model.centroids = std::move(ordered);
  return model;
}

CentroidModel kmeans_classic(const DataTable& data, std::size_t p, const KMeansOptions& options) {
  require_kmeans_metric(options.metric);
  const std::size_t n = data.n_objects();
  if (p < 1 || p > n) throw ConfigError(fmt::format("kmeans.p: must lie in 1..{}, got {}", n, p));
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);

  std::vector<CentroidModel> runs(restarts);
  auto work = [&](std::size_t k) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    runs[k] = kmeans_from(data, seed_centroids(data, p, options.seeding, options.metric, rng), options.metric,
                          options.max_iterations);
    runs[k].restart = k;
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, restarts);
  if (threads == 1) {
    for (std::size_t k = 0; k < restarts; ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < restarts; k += threads) work(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < restarts; ++k)
    if (runs[k].qd < runs[best].qd) best = k;
  return std::move(runs[best]);
}

namespace {

KMeansValues evaluate_centres(const DataTable& data, const std::vector<int>& labels,
                              const std::vector<std::vector<double>>& centres, Metric metric, double offset,
                              double outer_weight) {
  KMeansValues v;
  const std::size_t p = centres.size();
  double outer = 0.0;
  for (std::size_t i = 0; i < data.n_objects(); ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    v.qd += distance(data.row(i), centres[own], metric);
    if (p < 2) continue;
    double best = 0.0;
    for (std::size_t q = 0; q < p; ++q) {
      if (q == own) continue;
      best = std::max(best, proximity(offset, distance(data.row(i), centres[q], metric)));
    }
    outer += best;
  }
  v.qs = outer_weight * outer;
  v.total = v.qd + v.qs;
  return v;
}

}  // namespace

KMeansValues bipartial_kmeans_objective(const DataTable& data, const CentroidModel& model, double offset,
                                        double outer_weight) {
  std::vector<std::vector<double>> centres(model.p);
  for (std::size_t q = 0; q < model.p; ++q) {
    const auto c = model.centroid(q);
    centres[q].assign(c.begin(), c.end());
  }
  return evaluate_centres(data, model.assignment.labels(), centres, model.metric, offset, outer_weight);
}

KMeansValues bipartial_kmeans_objective(const DataTable& data, const Partition& partition, Metric metric,
                                        double offset, double outer_weight) {
  if (partition.size() != data.n_objects())
    throw InputError(fmt::format("partition of {} objects applied to {} objects", partition.size(), data.n_objects()));
  const auto blocks = partition.blocks();
  std::vector<std::vector<double>> centres;
  centres.reserve(blocks.size());
  for (const auto& block : blocks) centres.push_back(group_center(data, block, metric));
  return evaluate_centres(data, partition.labels(), centres, metric, offset, outer_weight);
}

double kmeans_offset(const DataTable& data, Metric metric, const ProximityTransform& transform) {
  return transform_offset(compute_distances(data, metric), transform);
}

// ---------------------------------------------------------------------------

KMeansObjective::KMeansObjective(const DataTable& data, Metric metric, double offset, double outer_weight,
                                 const Partition& atoms)
    : data_(data), metric_(metric), offset_(offset), weight_(outer_weight) {
  if (!(outer_weight > 0.0)) throw ConfigError(fmt::format("bipartial.outer_weight: must be > 0, got {}", outer_weight));
  if (!std::isfinite(offset) || offset < 0.0) throw ConfigError(fmt::format("transform: invalid offset {}", offset));
  if (atoms.size() != data.n_objects())
    throw InputError(fmt::format("kmeans merger: {} atom labels for {} objects", atoms.size(), data.n_objects()));
  p0_ = atoms.cluster_count();
  members_ = atoms.blocks();
  centers_.resize(p0_);
  cost_.resize(p0_);
  for (std::size_t a = 0; a < p0_; ++a) {
    centers_[a] = group_center(data_, members_[a], metric_);
    cost_[a] = group_dispersion(data_, members_[a], centers_[a], metric_);
  }
  union_cost_.assign(p0_ * p0_, 0.0);
  cross_s_.assign(p0_ * p0_, 0.0);
  for (std::size_t a = 0; a < p0_; ++a)
    for (std::size_t b = a + 1; b < p0_; ++b) refresh_pair(a, b);
  active_.resize(p0_);
  for (std::size_t a = 0; a < p0_; ++a) active_[a] = a;
}

void KMeansObjective::refresh_pair(std::size_t a, std::size_t b) {
  std::vector<std::size_t> merged = members_[a];
  merged.insert(merged.end(), members_[b].begin(), members_[b].end());
  const auto c = group_center(data_, merged, metric_);
  const double u = group_dispersion(data_, merged, c, metric_);
  double s = 0.0;
  for (std::size_t i : members_[a]) s += proximity(offset_, distance(data_.row(i), centers_[b], metric_));
  for (std::size_t j : members_[b]) s += proximity(offset_, distance(data_.row(j), centers_[a], metric_));
  union_cost_[a * p0_ + b] = union_cost_[b * p0_ + a] = u;
  cross_s_[a * p0_ + b] = cross_s_[b * p0_ + a] = s;
}

double KMeansObjective::qs_value() const {
  if (active_.size() < 2) return 0.0;
  double outer = 0.0;
  for (std::size_t a : active_) {
    for (std::size_t i : members_[a]) {
      double best = 0.0;
      for (std::size_t c : active_) {
        if (c == a) continue;
        best = std::max(best, proximity(offset_, distance(data_.row(i), centers_[c], metric_)));
      }
      outer += best;
    }
  }
  return weight_ * outer;
}

double KMeansObjective::qd_value() const {
  double total = 0.0;
  for (std::size_t a : active_) total += cost_[a];
  return total;
}

Deltas KMeansObjective::deltas(std::size_t a, std::size_t b) const {
  return {weight_ * cross_s_[a * p0_ + b], union_cost_[a * p0_ + b] - cost_[a] - cost_[b]};
}

double KMeansObjective::merge_threshold(std::size_t a, std::size_t b) const {
  const Deltas d = checked_deltas(*this, a, b);
  const double total = d.qs + d.qd;
  return total > 0.0 ? d.qs / total : 1.0;
}

void KMeansObjective::on_merge(std::size_t a, std::size_t b) {
  members_[a].insert(members_[a].end(), members_[b].begin(), members_[b].end());
  members_[b].clear();
  centers_[a] = group_center(data_, members_[a], metric_);
  cost_[a] = group_dispersion(data_, members_[a], centers_[a], metric_);
  active_.erase(std::find(active_.begin(), active_.end(), b));
  for (std::size_t c : active_)
    if (c != a) refresh_pair(std::min(a, c), std::max(a, c));
}

MergeHistory run_bipartial_kmeans(const DataTable& data, const KMeansMergeOptions& options,
                                  const std::optional<Partition>& atoms) {
  const double offset = kmeans_offset(data, options.metric, options.transform);
  KMeansObjective objective(data, options.metric, offset, options.outer_weight,
                            atoms ? *atoms : Partition::singletons(data.n_objects()));
  MergeHistory history = run_bipartial(objective);
  history.r_scale = RScale::descending;
  for (auto& rec : history.records) {
    const double total = rec.delta_qs + rec.delta_qd;
    rec.r = total > 0.0 ? rec.delta_qs / total : 1.0;
  }
  return history;
}

// ---------------------------------------------------------------------------

HybridStage parse_hybrid_stage(std::string_view name) {
  if (name == "kmeans") return HybridStage::kmeans;
  if (name == "additive") return HybridStage::additive;
  if (name == "minmax") return HybridStage::minmax;
  if (name == "avg_additive") return HybridStage::avg_additive;
  if (name == "facility") return HybridStage::facility;
  throw ConfigError(fmt::format("hybrid.stage: unknown value '{}'", name));
}

std::string_view to_string(HybridStage stage) {
  switch (stage) {
    case HybridStage::kmeans: return "kmeans";
    case HybridStage::additive: return "additive";
    case HybridStage::minmax: return "minmax";
    case HybridStage::avg_additive: return "avg_additive";
    case HybridStage::facility: return "facility";
  }
  return "?";
}

std::size_t default_first_stage_p(std::size_t n) {
  std::size_t p = 1;
  while (p * p < n) ++p;
  return p;
}

HybridResult hybrid_two_stage(const DataTable& data, const HybridOptions& options) {
  const std::size_t n = data.n_objects();
  const std::size_t p1 = options.first_stage_p == 0 ? default_first_stage_p(n) : options.first_stage_p;
  if (p1 < 1 || p1 > n) throw ConfigError(fmt::format("hybrid.first_stage_p: must lie in 1..{}, got {}", n, p1));

  HybridResult result;
  result.atoms = p1 == n ? Partition::singletons(n) : kmeans_classic(data, p1, options.kmeans).assignment;

  if (options.stage == HybridStage::kmeans) {
    result.history = run_bipartial_kmeans(data, options.merge, result.atoms);
  } else {
    const DissimilarityStore store =
        apply_transform(compute_distances(data, options.merge.metric), options.merge.transform);
    if (options.stage == HybridStage::facility) {
      FacilityObjective objective(options.facility, &data, &store, result.atoms);
      result.history = run_facility(objective).history;
    } else {
      ObjectiveOptions oo;
      oo.kind = options.stage == HybridStage::additive  ? ObjectiveKind::additive
                : options.stage == HybridStage::minmax ? ObjectiveKind::minmax
                                                       : ObjectiveKind::avg_additive;
      auto objective = make_objective(oo, store, result.atoms, &data);
      result.history = run_bipartial(*objective);
    }
  }

  if (options.stage == HybridStage::facility) {
    result.decision.step = result.history.records.size();
  } else {
    result.decision = select_step(result.history);
  }
  result.partition = compose(result.atoms, partition_at_step(result.history, result.decision.step));

  const double offset = kmeans_offset(data, options.merge.metric, options.merge.transform);
  for (std::size_t t = 0; t <= result.history.records.size(); ++t) {
    const Partition level = compose(result.atoms, partition_at_step(result.history, t));
    result.curve.push_back({t, level.cluster_count(),
                            bipartial_kmeans_objective(data, level, options.merge.metric, offset,
                                                       options.merge.outer_weight)});
  }
  return result;
}

std::vector<SweepRow> kmeans_sweep(const DataTable& data, std::size_t p_min, std::size_t p_max,
                                   const KMeansOptions& options, const ProximityTransform& transform,
                                   double outer_weight) {
  if (p_min < 1 || p_min > p_max || p_max > data.n_objects())
    throw ConfigError(fmt::format("sweep: p range {}..{} outside 1..{}", p_min, p_max, data.n_objects()));
  const double offset = kmeans_offset(data, options.metric, transform);
  std::vector<SweepRow> rows;
  for (std::size_t p = p_min; p <= p_max; ++p) {
    const CentroidModel model = kmeans_classic(data, p, options);
    rows.push_back({p, bipartial_kmeans_objective(data, model, offset, outer_weight)});
  }
  return rows;
}

std::size_t sweep_argmin(const std::vector<SweepRow>& rows) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].values.total < rows[best].values.total) best = k;
  return best;
}

}  // namespace bipartial
