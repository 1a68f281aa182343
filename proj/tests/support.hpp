#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "bipartial/core.hpp"

namespace testing_support {

using bipartial::DataTable;
using bipartial::DissimilarityStore;

inline DataTable line(std::vector<double> xs) { return DataTable(1, std::move(xs), {}); }

inline DissimilarityStore matrix(std::size_t n, std::vector<double> upper) {
  std::vector<double> d(n * n, 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = upper[k++];
  return DissimilarityStore(n, std::move(d));
}

// Continuous random distances, so ties have probability zero.
inline DissimilarityStore random_store(std::size_t n, std::mt19937_64& rng, double lo = 1.0, double hi = 10.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> upper(n * (n - 1) / 2);
  for (double& v : upper) v = u(rng);
  return matrix(n, std::move(upper));
}

inline DataTable random_table(std::size_t n, std::size_t dims, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n * dims);
  for (double& x : v) x = u(rng);
  return DataTable(dims, std::move(v), {});
}

// Prim on the dense graph, O(n^2).
inline std::vector<double> mst_weights(const DissimilarityStore& s) {
  const std::size_t n = s.size();
  std::vector<bool> in(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<double> out;
  best[0] = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t v = n;
    for (std::size_t u = 0; u < n; ++u)
      if (!in[u] && (v == n || best[u] < best[v])) v = u;
    in[v] = true;
    if (it > 0) out.push_back(best[v]);
    for (std::size_t u = 0; u < n; ++u)
      if (!in[u]) best[u] = std::min(best[u], s.d(v, u));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double mean_between(const DissimilarityStore& s, const std::vector<std::size_t>& a,
                           const std::vector<std::size_t>& b) {
  double sum = 0.0;
  for (std::size_t i : a)
    for (std::size_t j : b) sum += s.d(i, j);
  return sum / static_cast<double>(a.size() * b.size());
}

// Members of both children of each record, rebuilt from the node ids.
inline std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> merged_groups(
    const bipartial::MergeHistory& h) {
  std::vector<std::vector<std::size_t>> members(h.leaves + h.records.size());
  for (std::size_t i = 0; i < h.leaves; ++i) members[i] = {i};
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> out;
  for (const auto& r : h.records) {
    out.emplace_back(members[r.left], members[r.right]);
    auto& m = members[r.node];
    m = members[r.left];
    m.insert(m.end(), members[r.right].begin(), members[r.right].end());
    std::sort(m.begin(), m.end());
  }
  return out;
}

inline bool close(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testing_support
