#pragma once

#include <string_view>

#include "bipartial/core.hpp"

namespace bipartial {

enum class LinkageScheme { single, complete, upgma, wpgma, centroid, median };

LinkageScheme parse_linkage(std::string_view name);
std::string_view to_string(LinkageScheme scheme);

/// Lance-Williams coefficients for merging q* and q** as seen from cluster q.
struct LWCoefficients {
  double a1 = 0.0;
  double a2 = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct ClusterSizes {
  std::size_t q = 1;
  std::size_t left = 1;   // q*
  std::size_t right = 1;  // q**
};

LWCoefficients lw_coefficients(LinkageScheme scheme, ClusterSizes sizes);

/// Distance from q to the union of q* and q**.
double lw_update(double d_left_q, double d_right_q, double d_left_right, const LWCoefficients& coeffs);

inline double lw_update(double d_left_q, double d_right_q, double d_left_right, LinkageScheme scheme,
                        ClusterSizes sizes) {
  return lw_update(d_left_q, d_right_q, d_left_right, lw_coefficients(scheme, sizes));
}

/// Classical minimum-distance agglomeration. Records carry link_value (the
/// merge distance); r and the deltas stay NaN. Ties go to the lowest
/// (left, right) pair of cluster ids, a cluster's id being its smallest object
/// index.
MergeHistory run_linkage(const DissimilarityStore& store, LinkageScheme scheme);

/// Steps t at which link_value drops below the previous merge height.
std::vector<std::size_t> height_inversions(const MergeHistory& history);

}  // namespace bipartial
