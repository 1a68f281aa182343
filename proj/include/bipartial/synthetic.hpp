#pragma once

#include <cstdint>

#include "bipartial/core.hpp"

namespace bipartial {

/// Gaussian blobs whose centres form a nested hierarchy: `levels` levels with
/// branching ceil(blobs^(1/levels)); each level sits `ratio` times closer
/// together than the one above it.
struct NestedBlobOptions {
  std::size_t n = 60;
  std::size_t blobs = 4;
  std::size_t levels = 2;
  std::size_t dims = 2;
  double radius = 10.0;
  double ratio = 0.85;
  double spread = 0.5;
  std::uint64_t seed = 7;
};

DataTable nested_blobs(const NestedBlobOptions& options);

/// n points from a standard normal in `dims` dimensions.
DataTable gaussian_cloud(std::size_t n, std::size_t dims, std::uint64_t seed);

/// n points uniform on [0, 1)^dims.
DataTable uniform_cloud(std::size_t n, std::size_t dims, std::uint64_t seed);

/// 1-D {0, 1, 100, 101, 200, 201, 300, 301}.
DataTable tight_pairs();

}  // namespace bipartial
