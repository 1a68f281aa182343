#include "bipartial/objectives.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "bipartial/centroid.hpp"

namespace bipartial {

ObjectiveKind parse_objective(std::string_view name) {
  if (name == "additive") return ObjectiveKind::additive;
  if (name == "facility") return ObjectiveKind::facility;
  if (name == "minmax") return ObjectiveKind::minmax;
  if (name == "avg_additive") return ObjectiveKind::avg_additive;
  throw ConfigError(fmt::format("objective: unknown value '{}'", name));
}

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::additive: return "additive";
    case ObjectiveKind::facility: return "facility";
    case ObjectiveKind::minmax: return "minmax";
    case ObjectiveKind::avg_additive: return "avg_additive";
  }
  return "?";
}

FacilityCost parse_facility_cost(std::string_view name) {
  if (name == "centroid" || name == "sum_to_centroid") return FacilityCost::sum_to_centroid;
  if (name == "pairsum" || name == "pairwise_sum_normalized") return FacilityCost::pairwise_sum_normalized;
  throw ConfigError(fmt::format("facility.cost: unknown value '{}'", name));
}

std::string_view to_string(FacilityCost cost) {
  return cost == FacilityCost::sum_to_centroid ? "centroid" : "pairsum";
}

// ---------------------------------------------------------------------------

PairwiseObjective::PairwiseObjective(const DissimilarityStore& store, const Partition& atoms) : store_(store) {
  if (!store.has_proximities()) throw ConfigError("objective: proximities s are not populated (apply a transform)");
  if (atoms.size() != store.size())
    throw InputError(fmt::format("objective: {} atom labels for {} objects", atoms.size(), store.size()));
  p0_ = atoms.cluster_count();
  size_.assign(p0_, 0);
  cross_d_.assign(p0_ * p0_, 0.0);
  cross_s_.assign(p0_ * p0_, 0.0);
  intra_d_.assign(p0_, 0.0);
  intra_s_.assign(p0_, 0.0);
  const std::size_t n = store.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(atoms.label(i));
    ++size_[a];
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = static_cast<std::size_t>(atoms.label(j));
      if (a == b) {
        intra_d_[a] += store.d(i, j);
        intra_s_[a] += store.s(i, j);
      } else {
        cross_d_[a * p0_ + b] += store.d(i, j);
        cross_d_[b * p0_ + a] += store.d(i, j);
        cross_s_[a * p0_ + b] += store.s(i, j);
        cross_s_[b * p0_ + a] += store.s(i, j);
      }
    }
  }
  active_.resize(p0_);
  for (std::size_t a = 0; a < p0_; ++a) active_[a] = a;
}

void PairwiseObjective::merge_sums(std::size_t a, std::size_t b) {
  intra_d_[a] += intra_d_[b] + cross_d(a, b);
  intra_s_[a] += intra_s_[b] + cross_s(a, b);
  for (std::size_t c : active_) {
    if (c == a || c == b) continue;
    cross_d_[a * p0_ + c] += cross_d_[b * p0_ + c];
    cross_d_[c * p0_ + a] = cross_d_[a * p0_ + c];
    cross_s_[a * p0_ + c] += cross_s_[b * p0_ + c];
    cross_s_[c * p0_ + a] = cross_s_[a * p0_ + c];
  }
  size_[a] += size_[b];
  active_.erase(std::find(active_.begin(), active_.end(), b));
}

// ---------------------------------------------------------------------------

AdditiveObjective::AdditiveObjective(const DissimilarityStore& store, const Partition& atoms)
    : PairwiseObjective(store, atoms) {}

AdditiveObjective::AdditiveObjective(const DissimilarityStore& store)
    : AdditiveObjective(store, Partition::singletons(store.size())) {}

double AdditiveObjective::qs_value() const {
  double total = 0.0;
  for (std::size_t a : active_) total += intra_s_[a];
  return total;
}

double AdditiveObjective::qd_value() const {
  double total = 0.0;
  for (std::size_t u = 0; u < active_.size(); ++u)
    for (std::size_t v = u + 1; v < active_.size(); ++v) total += cross_d(active_[u], active_[v]);
  return total;
}

Deltas AdditiveObjective::deltas(std::size_t a, std::size_t b) const { return {cross_s(a, b), cross_d(a, b)}; }

double AdditiveObjective::link_value(std::size_t a, std::size_t b) const {
  return cross_d(a, b) / (static_cast<double>(size_[a]) * static_cast<double>(size_[b]));
}

// ---------------------------------------------------------------------------

AvgAdditiveObjective::AvgAdditiveObjective(const DissimilarityStore& store, const Partition& atoms)
    : PairwiseObjective(store, atoms), row_(p0_, 0.0) {
  for (std::size_t a = 0; a < p0_; ++a)
    for (std::size_t c = 0; c < p0_; ++c)
      if (c != a) row_[a] += mean_d(a, c);
}

AvgAdditiveObjective::AvgAdditiveObjective(const DissimilarityStore& store)
    : AvgAdditiveObjective(store, Partition::singletons(store.size())) {}

double AvgAdditiveObjective::mean_d(std::size_t a, std::size_t b) const {
  return cross_d(a, b) / (static_cast<double>(size_[a]) * static_cast<double>(size_[b]));
}

double AvgAdditiveObjective::qs_value() const {
  double total = 0.0;
  for (std::size_t a : active_) total += intra_s_[a];
  return total;
}

double AvgAdditiveObjective::qd_value() const {
  double total = 0.0;
  for (std::size_t u = 0; u < active_.size(); ++u)
    for (std::size_t v = u + 1; v < active_.size(); ++v) total += mean_d(active_[u], active_[v]);
  return total;
}

Deltas AvgAdditiveObjective::deltas(std::size_t a, std::size_t b) const {
  // Every third cluster c sees D(A,c) + D(B,c) replaced by the size-weighted
  // mean, which removes (n_B D(A,c) + n_A D(B,c)) / (n_A + n_B).
  const double na = static_cast<double>(size_[a]);
  const double nb = static_cast<double>(size_[b]);
  const double ab = mean_d(a, b);
  const double rest_a = std::max(0.0, row_[a] - ab);
  const double rest_b = std::max(0.0, row_[b] - ab);
  return {cross_s(a, b), ab + (nb * rest_a + na * rest_b) / (na + nb)};
}

void AvgAdditiveObjective::on_merge(std::size_t a, std::size_t b) {
  std::vector<double> before_a(p0_, 0.0), before_b(p0_, 0.0);
  for (std::size_t c : active_) {
    if (c == a || c == b) continue;
    before_a[c] = mean_d(a, c);
    before_b[c] = mean_d(b, c);
  }
  merge_sums(a, b);
  row_[a] = 0.0;
  for (std::size_t c : active_) {
    if (c == a) continue;
    const double now = mean_d(a, c);
    row_[c] += now - before_a[c] - before_b[c];
    row_[a] += now;
  }
}

// ---------------------------------------------------------------------------

MinMaxObjective::MinMaxObjective(const DissimilarityStore& store, const Partition& atoms)
    : PairwiseObjective(store, atoms) {
  min_d_.assign(p0_ * p0_, std::numeric_limits<double>::infinity());
  max_s_.assign(p0_ * p0_, 0.0);
  within_s_.assign(p0_, 0.0);
  const std::size_t n = store.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(atoms.label(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = static_cast<std::size_t>(atoms.label(j));
      if (a == b) {
        within_s_[a] = std::max(within_s_[a], store.s(i, j));
      } else {
        const double d = std::min(min_d_[a * p0_ + b], store.d(i, j));
        const double s = std::max(max_s_[a * p0_ + b], store.s(i, j));
        min_d_[a * p0_ + b] = min_d_[b * p0_ + a] = d;
        max_s_[a * p0_ + b] = max_s_[b * p0_ + a] = s;
      }
    }
  }
}

MinMaxObjective::MinMaxObjective(const DissimilarityStore& store)
    : MinMaxObjective(store, Partition::singletons(store.size())) {}

double MinMaxObjective::qs_value() const {
  double total = 0.0;
  for (std::size_t a : active_) total += static_cast<double>(size_[a]) * within_s_[a];
  return total;
}

double MinMaxObjective::qd_value() const {
  double total = 0.0;
  for (std::size_t u = 0; u < active_.size(); ++u)
    for (std::size_t v = u + 1; v < active_.size(); ++v) total += min_d_[active_[u] * p0_ + active_[v]];
  return total;
}

Deltas MinMaxObjective::deltas(std::size_t a, std::size_t b) const {
  const double na = static_cast<double>(size_[a]);
  const double nb = static_cast<double>(size_[b]);
  const double merged = std::max({within_s_[a], within_s_[b], max_s_[a * p0_ + b]});
  const double dqs = na * (merged - within_s_[a]) + nb * (merged - within_s_[b]);
  // The A-B term disappears and each min(D(A,c), D(B,c)) pair collapses into
  // one term, dropping the larger of the two.
  double dqd = min_d_[a * p0_ + b];
  for (std::size_t c : active_) {
    if (c == a || c == b) continue;
    dqd += std::max(min_d_[a * p0_ + c], min_d_[b * p0_ + c]);
  }
  return {dqs, dqd};
}

void MinMaxObjective::on_merge(std::size_t a, std::size_t b) {
  within_s_[a] = std::max({within_s_[a], within_s_[b], max_s_[a * p0_ + b]});
  for (std::size_t c : active_) {
    if (c == a || c == b) continue;
    const double d = std::min(min_d_[a * p0_ + c], min_d_[b * p0_ + c]);
    const double s = std::max(max_s_[a * p0_ + c], max_s_[b * p0_ + c]);
    min_d_[a * p0_ + c] = min_d_[c * p0_ + a] = d;
    max_s_[a * p0_ + c] = max_s_[c * p0_ + a] = s;
  }
  merge_sums(a, b);
}

// ---------------------------------------------------------------------------

FacilityObjective::FacilityObjective(const FacilityOptions& options, const DataTable* data,
                                     const DissimilarityStore* store, const Partition& atoms)
    : options_(options), data_(data), store_(store), atoms_(atoms) {
  if (!(options_.scale > 0.0)) throw ConfigError(fmt::format("facility.scale: must be > 0, got {}", options_.scale));
  if (options_.cost == FacilityCost::sum_to_centroid && data_ == nullptr)
    throw ConfigError("facility.cost: centroid costs need feature data, not a distance matrix");
  if (options_.cost == FacilityCost::pairwise_sum_normalized && store_ == nullptr)
    throw ConfigError("facility.cost: pairsum costs need a distance store");
  const std::size_t n = data_ ? data_->n_objects() : store_->size();
  if (atoms.size() != n) throw InputError(fmt::format("facility: {} atom labels for {} objects", atoms.size(), n));
  p0_ = atoms.cluster_count();
  members_ = atoms.blocks();
  if (options_.cost == FacilityCost::pairwise_sum_normalized) {
    intra_sum_.assign(p0_, 0.0);
    cross_sum_.assign(p0_ * p0_, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(atoms.label(i));
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto b = static_cast<std::size_t>(atoms.label(j));
        if (a == b) {
          intra_sum_[a] += store_->d(i, j);
        } else {
          cross_sum_[a * p0_ + b] += store_->d(i, j);
          cross_sum_[b * p0_ + a] += store_->d(i, j);
        }
      }
    }
  }
  cost_.resize(p0_);
  for (std::size_t a = 0; a < p0_; ++a) cost_[a] = cost_of(members_[a]);
  active_.resize(p0_);
  for (std::size_t a = 0; a < p0_; ++a) active_[a] = a;
  union_cache_.assign(p0_ * p0_, 0.0);
  for (std::size_t a = 0; a < p0_; ++a)
    for (std::size_t b = a + 1; b < p0_; ++b) union_cache_[a * p0_ + b] = union_cache_[b * p0_ + a] = union_cost(a, b);
}

double FacilityObjective::cost_of(const std::vector<std::size_t>& members) const {
  if (members.size() < 2) return 0.0;
  if (options_.cost == FacilityCost::sum_to_centroid) {
    const auto center = group_center(*data_, members, options_.metric);
    return options_.scale * group_dispersion(*data_, members, center, options_.metric);
  }
  double sum = 0.0;
  for (std::size_t u = 0; u < members.size(); ++u)
    for (std::size_t v = u + 1; v < members.size(); ++v) sum += store_->d(members[u], members[v]);
  return options_.scale * sum / static_cast<double>(members.size());
}

double FacilityObjective::union_cost(std::size_t a, std::size_t b) const {
  if (options_.cost == FacilityCost::pairwise_sum_normalized) {
    const double sum = intra_sum_[a] + intra_sum_[b] + cross_sum_[a * p0_ + b];
    return options_.scale * sum / static_cast<double>(members_[a].size() + members_[b].size());
  }
  std::vector<std::size_t> merged = members_[a];
  merged.insert(merged.end(), members_[b].begin(), members_[b].end());
  return cost_of(merged);
}

double FacilityObjective::qd_value() const {
  double total = 0.0;
  for (std::size_t a : active_) total += cost_[a];
  return total;
}

double FacilityObjective::cost_increase(std::size_t a, std::size_t b) const {
  return union_cache_[a * p0_ + b] - cost_[a] - cost_[b];
}

Deltas FacilityObjective::deltas(std::size_t a, std::size_t b) const { return {1.0, cost_increase(a, b)}; }

void FacilityObjective::on_merge(std::size_t a, std::size_t b) {
  cost_[a] = union_cache_[a * p0_ + b];
  if (!intra_sum_.empty()) {
    intra_sum_[a] += intra_sum_[b] + cross_sum_[a * p0_ + b];
    for (std::size_t c : active_) {
      if (c == a || c == b) continue;
      cross_sum_[a * p0_ + c] += cross_sum_[b * p0_ + c];
      cross_sum_[c * p0_ + a] = cross_sum_[a * p0_ + c];
    }
  }
  members_[a].insert(members_[a].end(), members_[b].begin(), members_[b].end());
  members_[b].clear();
  active_.erase(std::find(active_.begin(), active_.end(), b));
  for (std::size_t c : active_) {
    if (c == a) continue;
    union_cache_[a * p0_ + c] = union_cache_[c * p0_ + a] = union_cost(a, c);
  }
}

FacilityResult run_facility(FacilityObjective& objective) {
  const std::size_t p0 = objective.atom_count();
  FacilityResult result;
  MergeHistory& history = result.history;
  history.leaves = p0;
  history.profile.orientation = Orientation::minimize;
  history.profile.push(objective.qs_value(), objective.qd_value());
  result.q_values.push_back(objective.total());

  std::vector<std::size_t> node(p0), size(p0, 1);
  for (std::size_t i = 0; i < p0; ++i) node[i] = i;

  while (objective.active().size() > 1) {
    const auto& act = objective.active();
    std::size_t best_a = p0, best_b = p0;
    double best = 0.0;
    for (std::size_t u = 0; u < act.size(); ++u) {
      for (std::size_t v = u + 1; v < act.size(); ++v) {
        const double gain = objective.merge_gain(act[u], act[v]);
        if (gain < best) {
          best = gain;
          best_a = act[u];
          best_b = act[v];
        }
      }
    }
    if (best_a == p0) break;

    const double increase = objective.cost_increase(best_a, best_b);
    MergeRecord rec;
    rec.step = history.records.size() + 1;
    rec.left = node[best_a];
    rec.right = node[best_b];
    rec.node = p0 + history.records.size();
    rec.size = size[best_a] + size[best_b];
    rec.link_value = increase;
    rec.delta_qs = 1.0;
    rec.delta_qd = increase;
    rec.r = increase / (increase + 1.0);
    objective.on_merge(best_a, best_b);
    history.records.push_back(rec);
    history.profile.push(objective.qs_value(), objective.qd_value());
    result.q_values.push_back(objective.total());
    node[best_a] = rec.node;
    size[best_a] = rec.size;
  }

  result.partition = compose(objective.atoms(), partition_at_step(history, history.records.size()));
  return result;
}

// ---------------------------------------------------------------------------

std::unique_ptr<BipartialObjective> make_objective(const ObjectiveOptions& options, const DissimilarityStore& store,
                                                   const Partition& atoms, const DataTable* data) {
  switch (options.kind) {
    case ObjectiveKind::additive: return std::make_unique<AdditiveObjective>(store, atoms);
    case ObjectiveKind::avg_additive: return std::make_unique<AvgAdditiveObjective>(store, atoms);
    case ObjectiveKind::minmax: return std::make_unique<MinMaxObjective>(store, atoms);
    case ObjectiveKind::facility: return std::make_unique<FacilityObjective>(options.facility, data, &store, atoms);
  }
  throw ConfigError("objective: unsupported kind");
}

}  // namespace bipartial
