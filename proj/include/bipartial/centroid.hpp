#pragma once

#include <span>
#include <vector>

#include "bipartial/core.hpp"

namespace bipartial {

/// Representative point of a group of objects: the mean for the euclidean
/// metrics, the coordinate-wise median for manhattan (midpoint of the two
/// middle values for even counts).
std::vector<double> group_center(const DataTable& data, std::span<const std::size_t> members, Metric metric);

/// Sum over members of d(x_i, center).
double group_dispersion(const DataTable& data, std::span<const std::size_t> members, std::span<const double> center,
                        Metric metric);

}  // namespace bipartial
