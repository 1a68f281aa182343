#include "bipartial/synthetic.hpp"

#include <numbers>
#include <random>

#include <fmt/format.h>

namespace bipartial {

DataTable nested_blobs(const NestedBlobOptions& options) {
  if (options.blobs < 1 || options.levels < 1 || options.dims < 1 || options.n < options.blobs)
    throw ConfigError(fmt::format("gen: need n >= blobs >= 1, levels >= 1, dims >= 1 (n = {}, blobs = {})",
                                  options.n, options.blobs));
  std::size_t branching = 1;
  auto power = [&](std::size_t b) {
    std::size_t v = 1;
    for (std::size_t l = 0; l < options.levels; ++l) v *= b;
    return v;
  };
  while (power(branching) < options.blobs) ++branching;

  const std::size_t m = options.dims;
  std::vector<double> centres(options.blobs * m, 0.0);
  for (std::size_t k = 0; k < options.blobs; ++k) {
    std::size_t code = k;
    double scale = options.radius;
    std::vector<std::size_t> digits(options.levels);
    for (std::size_t l = options.levels; l-- > 0;) {
      digits[l] = code % branching;
      code /= branching;
    }
    for (std::size_t l = 0; l < options.levels; ++l) {
      // children spread on a circle in the first two axes, turned a quarter per level
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(digits[l]) / static_cast<double>(branching) +
                           0.5 * std::numbers::pi * static_cast<double>(l);
      if (branching > 1) {
        centres[k * m] += scale * std::cos(angle);
        if (m > 1) centres[k * m + 1] += scale * std::sin(angle);
      }
      scale *= options.ratio;
    }
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, options.spread);
  std::vector<double> values;
  values.reserve(options.n * m);
  for (std::size_t i = 0; i < options.n; ++i) {
    const std::size_t k = i * options.blobs / options.n;
    for (std::size_t c = 0; c < m; ++c) values.push_back(centres[k * m + c] + noise(rng));
  }
  return DataTable(m, std::move(values));
}

DataTable gaussian_cloud(std::size_t n, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> values(n * dims);
  for (double& v : values) v = noise(rng);
  return DataTable(dims, std::move(values));
}

DataTable uniform_cloud(std::size_t n, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> values(n * dims);
  for (double& v : values) v = unit(rng);
  return DataTable(dims, std::move(values));
}

DataTable tight_pairs() { return DataTable(1, {0, 1, 100, 101, 200, 201, 300, 301}); }

}  // namespace bipartial
