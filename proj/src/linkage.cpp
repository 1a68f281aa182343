#include "bipartial/linkage.hpp"

#include <fmt/format.h>

namespace bipartial {

LinkageScheme parse_linkage(std::string_view name) {
  if (name == "single") return LinkageScheme::single;
  if (name == "complete") return LinkageScheme::complete;
  if (name == "upgma" || name == "average") return LinkageScheme::upgma;
  if (name == "wpgma" || name == "weighted") return LinkageScheme::wpgma;
  if (name == "centroid" || name == "upgmc" || name == "centroid_upgmc") return LinkageScheme::centroid;
  if (name == "median" || name == "wpgmc" || name == "median_wpgmc") return LinkageScheme::median;
  throw ConfigError(fmt::format("linkage.scheme: unknown value '{}'", name));
}

std::string_view to_string(LinkageScheme scheme) {
  switch (scheme) {
    case LinkageScheme::single: return "single";
    case LinkageScheme::complete: return "complete";
    case LinkageScheme::upgma: return "upgma";
    case LinkageScheme::wpgma: return "wpgma";
    case LinkageScheme::centroid: return "centroid";
    case LinkageScheme::median: return "median";
  }
  return "?";
}

LWCoefficients lw_coefficients(LinkageScheme scheme, ClusterSizes sizes) {
  const double nl = static_cast<double>(sizes.left);
  const double nr = static_cast<double>(sizes.right);
  switch (scheme) {
    case LinkageScheme::single: return {0.5, 0.5, 0.0, -0.5};
    case LinkageScheme::complete: return {0.5, 0.5, 0.0, 0.5};
    case LinkageScheme::upgma: return {nl / (nl + nr), nr / (nl + nr), 0.0, 0.0};
    case LinkageScheme::wpgma: return {0.5, 0.5, 0.0, 0.0};
    case LinkageScheme::centroid:
      return {nl / (nl + nr), nr / (nl + nr), -(nl * nr) / ((nl + nr) * (nl + nr)), 0.0};
    case LinkageScheme::median: return {0.5, 0.5, -0.25, 0.0};
  }
  return {};
}

double lw_update(double d_left_q, double d_right_q, double d_left_right, const LWCoefficients& k) {
  return k.a1 * d_left_q + k.a2 * d_right_q + k.b * d_left_right + k.c * std::abs(d_left_q - d_right_q);
}

MergeHistory run_linkage(const DissimilarityStore& store, LinkageScheme scheme) {
  const std::size_t n = store.size();
  if (n < 2) throw InputError(fmt::format("linkage: need at least 2 objects, got {}", n));

  std::vector<double> dist = store.distances();
  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> node(n);
  for (std::size_t i = 0; i < n; ++i) node[i] = i;

  MergeHistory history;
  history.leaves = n;
  history.records.reserve(n - 1);

  for (std::size_t t = 1; t < n; ++t) {
    std::size_t best_a = n, best_b = n;
    double best = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        const double v = dist[a * n + b];
        if (best_a == n || v < best) {
          best = v;
          best_a = a;
          best_b = b;
        }
      }
    }

    const std::size_t a = best_a, b = best_b;
    MergeRecord rec;
    rec.step = t;
    rec.left = node[a];
    rec.right = node[b];
    rec.node = n + t - 1;
    rec.size = size[a] + size[b];
    rec.link_value = best;
    history.records.push_back(rec);

    for (std::size_t q = 0; q < n; ++q) {
      if (!active[q] || q == a || q == b) continue;
      const double updated = lw_update(dist[a * n + q], dist[b * n + q], best, scheme, {size[q], size[a], size[b]});
      dist[a * n + q] = updated;
      dist[q * n + a] = updated;
    }
    active[b] = false;
    size[a] += size[b];
    node[a] = rec.node;
  }
  return history;
}

std::vector<std::size_t> height_inversions(const MergeHistory& history) {
  std::vector<std::size_t> out;
  for (std::size_t t = 1; t < history.records.size(); ++t) {
    if (history.records[t].link_value < history.records[t - 1].link_value) out.push_back(history.records[t].step);
  }
  return out;
}

}  // namespace bipartial
