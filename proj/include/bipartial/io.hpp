#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "bipartial/core.hpp"
#include "bipartial/engine.hpp"

namespace bipartial {

/// Round-trip-safe decimal (17 significant digits); NaN prints as "nan".
std::string format_real(double value);

/// Feature table: optional header row; a non-numeric first column holds ids.
DataTable read_data_csv(std::istream& in, const std::string& source = "input");
DataTable read_data_csv_file(const std::string& path);

struct MatrixInput {
  DissimilarityStore store;
  std::vector<std::string> object_ids;
};

/// Square distance matrix, symmetric within 1e-9 (then averaged). Optional
/// header row and id column as for feature tables.
MatrixInput read_matrix_csv(std::istream& in, const std::string& source = "input");
MatrixInput read_matrix_csv_file(const std::string& path);

void write_data_csv(std::ostream& out, const DataTable& data);

/// t, left, right, size, link_value, r_t, delta_qs, delta_qd, qs_t, qd_t, q_half_t
void write_merges_csv(std::ostream& out, const MergeHistory& history);

/// object_id, cluster_label
void write_partition_csv(std::ostream& out, const Partition& partition, const std::vector<std::string>& ids);

/// t, p, qs, qd, q_half
void write_curve_csv(std::ostream& out, const MergeHistory& history);

enum class HeightMode { r, distance };

HeightMode parse_height_mode(std::string_view name);
std::string_view to_string(HeightMode mode);

/// Node heights for the given mode: 0 for leaves, r_t or link_value for the
/// node created at step t.
std::vector<double> node_heights(const MergeHistory& history, HeightMode mode);

/// True when some node sits below one of its children.
bool has_height_inversion(const MergeHistory& history, HeightMode mode);

/// One Newick tree per root (one line each); branch lengths are differences
/// of cumulative node heights.
std::string to_newick(const MergeHistory& history, const std::vector<std::string>& ids, HeightMode mode);

/// Flat records, profile and a nested tree; NaN fields become null.
nlohmann::json history_to_json(const MergeHistory& history, const std::vector<std::string>& ids, HeightMode mode);

/// Inverse of history_to_json on the flat part.
MergeHistory history_from_json(const nlohmann::json& doc);

MergeHistory read_history_json_file(const std::string& path);

}  // namespace bipartial
