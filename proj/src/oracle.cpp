#include "bipartial/oracle.hpp"

#include <algorithm>
#include <limits>
#include <thread>

#include <fmt/format.h>

namespace bipartial {

std::uint64_t bell_number(std::size_t n) {
  // Bell triangle
  std::vector<std::uint64_t> row{1};
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::uint64_t> next{row.back()};
    for (std::uint64_t v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

PartitionEnumerator::PartitionEnumerator(std::size_t n, std::vector<int> prefix)
    : fixed_(prefix.size()), labels_(n, 0), prefix_max_(n, 0) {
  if (prefix.size() > n) throw ConfigError("oracle: prefix longer than the object count");
  int top = -1;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (prefix[i] < 0 || prefix[i] > top + 1) throw ConfigError("oracle: prefix is not a restricted growth string");
    labels_[i] = prefix[i];
    top = std::max(top, prefix[i]);
    prefix_max_[i] = top;
  }
  for (std::size_t i = prefix.size(); i < n; ++i) prefix_max_[i] = std::max(top, 0);
  if (n > 0 && fixed_ == 0) fixed_ = 1;
}

bool PartitionEnumerator::next() {
  const std::size_t n = labels_.size();
  for (std::size_t i = n; i-- > fixed_;) {
    if (labels_[i] <= prefix_max_[i - 1]) {
      ++labels_[i];
      prefix_max_[i] = std::max(prefix_max_[i - 1], labels_[i]);
      for (std::size_t j = i + 1; j < n; ++j) {
        labels_[j] = 0;
        prefix_max_[j] = prefix_max_[i];
      }
      return true;
    }
  }
  return false;
}

void check_oracle_size(std::size_t n, std::size_t guard) {
  if (guard > kOracleHardCap)
    throw ConfigError(fmt::format("oracle.guard: {} exceeds the hard cap of {} objects", guard, kOracleHardCap));
  if (n > guard)
    throw ConfigError(fmt::format("oracle: n = {} exceeds the enumeration guard of {} objects ({} partitions)", n,
                                  guard, bell_number(n)));
  if (n == 0) throw InputError("oracle: no objects");
}

void for_each_partition(std::size_t n, const std::function<void(const std::vector<int>&)>& visit, std::size_t guard) {
  check_oracle_size(n, guard);
  PartitionEnumerator walk(n);
  do {
    visit(walk.labels());
  } while (walk.next());
}

std::vector<Partition> enumerate_partitions(std::size_t n, std::size_t guard) {
  std::vector<Partition> out;
  for_each_partition(n, [&](const std::vector<int>& labels) { out.emplace_back(labels); }, guard);
  return out;
}

OracleObjective parse_oracle_objective(std::string_view name) {
  if (name == "additive") return OracleObjective::additive;
  if (name == "minmax") return OracleObjective::minmax;
  if (name == "avg_additive") return OracleObjective::avg_additive;
  if (name == "facility") return OracleObjective::facility;
  if (name == "kmeans") return OracleObjective::kmeans;
  throw ConfigError(fmt::format("objective: unknown value '{}' for the oracle", name));
}

std::string_view to_string(OracleObjective kind) {
  switch (kind) {
    case OracleObjective::additive: return "additive";
    case OracleObjective::minmax: return "minmax";
    case OracleObjective::avg_additive: return "avg_additive";
    case OracleObjective::facility: return "facility";
    case OracleObjective::kmeans: return "kmeans";
  }
  return "?";
}

Orientation OracleSpec::orientation() const {
  return kind == OracleObjective::facility || kind == OracleObjective::kmeans ? Orientation::minimize
                                                                              : Orientation::maximize;
}

namespace {

std::vector<std::vector<std::size_t>> groups_of(const std::vector<int>& labels) {
  int top = -1;
  for (int l : labels) top = std::max(top, l);
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(top + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) groups[static_cast<std::size_t>(labels[i])].push_back(i);
  return groups;
}

std::vector<double> centre_of(const DataTable& data, const std::vector<std::size_t>& group, Metric metric) {
  const std::size_t m = data.n_features();
  std::vector<double> c(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    if (metric == Metric::manhattan) {
      std::vector<double> col;
      for (std::size_t i : group) col.push_back(data.value(i, k));
      std::sort(col.begin(), col.end());
      const std::size_t h = col.size() / 2;
      c[k] = col.size() % 2 == 1 ? col[h] : 0.5 * (col[h - 1] + col[h]);
    } else {
      double sum = 0.0;
      for (std::size_t i : group) sum += data.value(i, k);
      c[k] = sum / static_cast<double>(group.size());
    }
  }
  return c;
}

double object_to_point(const DataTable& data, std::size_t i, const std::vector<double>& c, Metric metric) {
  double acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double diff = data.value(i, k) - c[k];
    acc += metric == Metric::manhattan ? std::abs(diff) : diff * diff;
  }
  return metric == Metric::euclidean ? std::sqrt(acc) : acc;
}

OracleValue evaluate_labels(const OracleSpec& spec, const DissimilarityStore* store, const DataTable* data,
                            const std::vector<int>& labels) {
  OracleValue v;
  v.orientation = spec.orientation();
  const std::size_t n = labels.size();
  switch (spec.kind) {
    case OracleObjective::additive: {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          if (labels[i] == labels[j]) v.qs += store->s(i, j);
          else v.qd += store->d(i, j);
        }
      return v;
    }
    case OracleObjective::avg_additive:
    case OracleObjective::minmax: {
      const auto groups = groups_of(labels);
      const bool avg = spec.kind == OracleObjective::avg_additive;
      for (std::size_t q = 0; q < groups.size(); ++q) {
        double within = 0.0;
        for (std::size_t u = 0; u < groups[q].size(); ++u)
          for (std::size_t w = u + 1; w < groups[q].size(); ++w) {
            const double s = store->s(groups[q][u], groups[q][w]);
            within = avg ? within + s : std::max(within, s);
          }
        v.qs += avg ? within : static_cast<double>(groups[q].size()) * within;
        for (std::size_t r = q + 1; r < groups.size(); ++r) {
          double link = avg ? 0.0 : std::numeric_limits<double>::infinity();
          for (std::size_t i : groups[q])
            for (std::size_t j : groups[r]) link = avg ? link + store->d(i, j) : std::min(link, store->d(i, j));
          if (avg) link /= static_cast<double>(groups[q].size() * groups[r].size());
          v.qd += link;
        }
      }
      return v;
    }
    case OracleObjective::facility: {
      const auto groups = groups_of(labels);
      v.qs = static_cast<double>(groups.size());
      for (const auto& g : groups) {
        if (g.size() < 2) continue;
        double cost = 0.0;
        if (spec.facility.cost == FacilityCost::sum_to_centroid) {
          const auto c = centre_of(*data, g, spec.facility.metric);
          for (std::size_t i : g) cost += object_to_point(*data, i, c, spec.facility.metric);
        } else {
          for (std::size_t u = 0; u < g.size(); ++u)
            for (std::size_t w = u + 1; w < g.size(); ++w) cost += store->d(g[u], g[w]);
          cost /= static_cast<double>(g.size());
        }
        v.qd += spec.facility.scale * cost;
      }
      return v;
    }
    case OracleObjective::kmeans: {
      const auto groups = groups_of(labels);
      std::vector<std::vector<double>> centres;
      for (const auto& g : groups) centres.push_back(centre_of(*data, g, spec.metric));
      double outer = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(labels[i]);
        v.qd += object_to_point(*data, i, centres[own], spec.metric);
        double best = 0.0;
        for (std::size_t q = 0; q < centres.size(); ++q) {
          if (q == own) continue;
          best = std::max(best, std::max(0.0, spec.offset - object_to_point(*data, i, centres[q], spec.metric)));
        }
        outer += best;
      }
      v.qs = spec.outer_weight * outer;
      return v;
    }
  }
  throw ConfigError("oracle: unsupported objective");
}

void check_inputs(const OracleSpec& spec, const DissimilarityStore* store, const DataTable* data, std::size_t n) {
  const bool needs_data = spec.kind == OracleObjective::kmeans ||
                          (spec.kind == OracleObjective::facility && spec.facility.cost == FacilityCost::sum_to_centroid);
  const bool needs_store = !needs_data;
  if (needs_data && (data == nullptr || data->n_objects() != n))
    throw ConfigError(fmt::format("oracle: objective '{}' needs feature data for {} objects", to_string(spec.kind), n));
  if (needs_store && (store == nullptr || store->size() != n))
    throw ConfigError(fmt::format("oracle: objective '{}' needs a distance matrix for {} objects", to_string(spec.kind), n));
  if (needs_store && spec.kind != OracleObjective::facility && !store->has_proximities())
    throw ConfigError("oracle: proximities s are not populated (apply a transform)");
}

std::size_t object_count(const DissimilarityStore* store, const DataTable* data) {
  if (data) return data->n_objects();
  if (store) return store->size();
  throw ConfigError("oracle: no input");
}

}  // namespace

OracleValue evaluate(const OracleSpec& spec, const DissimilarityStore* store, const DataTable* data,
                     const Partition& partition) {
  check_inputs(spec, store, data, partition.size());
  return evaluate_labels(spec, store, data, partition.labels());
}

OracleBest oracle_best(const OracleSpec& spec, const DissimilarityStore* store, const DataTable* data, double r,
                       const OracleOptions& options) {
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(fmt::format("oracle.r: must lie in [0, 1], got {}", r));
  const std::size_t n = object_count(store, data);
  check_oracle_size(n, options.guard);
  check_inputs(spec, store, data, n);
  const bool maximize = spec.orientation() == Orientation::maximize;

  // Shards are the restricted growth prefixes of a fixed length, taken in
  // lexicographic order; concatenated, they reproduce the full walk.
  const std::size_t depth = std::min<std::size_t>(n, 5);
  std::vector<std::vector<int>> prefixes;
  {
    PartitionEnumerator walk(depth);
    do {
      prefixes.push_back(walk.labels());
    } while (walk.next());
  }

  struct Shard {
    bool found = false;
    std::vector<int> labels;
    OracleValue value;
    double q = 0.0;
    std::uint64_t evaluated = 0;
  };
  std::vector<Shard> shards(prefixes.size());
  auto run_shard = [&](std::size_t k) {
    Shard& sh = shards[k];
    PartitionEnumerator walk(n, prefixes[k]);
    do {
      const OracleValue v = evaluate_labels(spec, store, data, walk.labels());
      const double q = v.at(r);
      ++sh.evaluated;
      if (!sh.found || (maximize ? q > sh.q : q < sh.q)) {
        sh.found = true;
        sh.q = q;
        sh.value = v;
        sh.labels = walk.labels();
      }
    } while (walk.next());
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, prefixes.size());
  if (threads == 1) {
    for (std::size_t k = 0; k < prefixes.size(); ++k) run_shard(k);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < prefixes.size(); k += threads) run_shard(k);
      });
    for (auto& t : pool) t.join();
  }

  OracleBest best;
  bool found = false;
  for (const auto& sh : shards) {
    best.evaluated += sh.evaluated;
    if (!found || (maximize ? sh.q > best.q : sh.q < best.q)) {
      found = true;
      best.q = sh.q;
      best.value = sh.value;
      best.partition = Partition(sh.labels);
    }
  }
  return best;
}

double oracle_switch_point(const OracleSpec& spec, const DissimilarityStore* store, const DataTable* data,
                           const Partition& p, const Partition& p_ref) {
  if (p.size() != p_ref.size()) throw InputError("oracle: partitions of different object counts");
  if (p == p_ref) throw ContractViolation("oracle: switch point of a partition with itself is undefined");
  const OracleValue a = evaluate(spec, store, data, p);
  const OracleValue b = evaluate(spec, store, data, p_ref);
  const bool maximize = spec.orientation() == Orientation::maximize;
  double ds = maximize ? a.qs - b.qs : b.qs - a.qs;
  double dd = maximize ? b.qd - a.qd : a.qd - b.qd;
  const double tol = 1e-9 * std::max({1.0, std::abs(a.qs), std::abs(b.qs), std::abs(a.qd), std::abs(b.qd)});
  if (ds < -tol || dd < -tol || ds + dd <= 0.0)
    throw ContractViolation(fmt::format(
        "oracle: partitions are not ordered for a switch point (similarity change {:.17g}, distance change {:.17g})",
        ds, dd));
  ds = std::max(ds, 0.0);
  dd = std::max(dd, 0.0);
  return dd / (dd + ds);
}

}  // namespace bipartial
