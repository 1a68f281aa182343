#include "bipartial/centroid.hpp"

#include <algorithm>

namespace bipartial {

std::vector<double> group_center(const DataTable& data, std::span<const std::size_t> members, Metric metric) {
  const std::size_t m = data.n_features();
  std::vector<double> center(m, 0.0);
  if (members.empty()) return center;
  if (metric == Metric::manhattan) {
    std::vector<double> column(members.size());
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t u = 0; u < members.size(); ++u) column[u] = data.value(members[u], k);
      const std::size_t mid = column.size() / 2;
      std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(mid), column.end());
      double median = column[mid];
      if (column.size() % 2 == 0) {
        const double lower = *std::max_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (lower + median);
      }
      center[k] = median;
    }
    return center;
  }
  for (std::size_t i : members)
    for (std::size_t k = 0; k < m; ++k) center[k] += data.value(i, k);
  for (double& v : center) v /= static_cast<double>(members.size());
  return center;
}

double group_dispersion(const DataTable& data, std::span<const std::size_t> members, std::span<const double> center,
                        Metric metric) {
  double total = 0.0;
  for (std::size_t i : members) total += distance(data.row(i), center, metric);
  return total;
}

}  // namespace bipartial
