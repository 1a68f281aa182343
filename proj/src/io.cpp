#include "bipartial/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

namespace bipartial {

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  return fmt::format("{:.17g}", value);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

struct RawTable {
  bool has_ids = false;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
};

RawTable read_table(std::istream& in, const std::string& source) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> lines;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (trim(line).empty() || line.front() == '#') continue;
    lines.emplace_back(no, split_row(line));
  }
  if (lines.empty()) throw InputError(fmt::format("{}: no rows", source));

  auto numeric = [](const std::string& cell) {
    double v;
    return parse_number(cell, v);
  };
  RawTable table;
  // The first data row decides whether column 0 carries ids.
  std::size_t first = 0;
  bool id_header = false;
  {
    const auto& cells = lines[0].second;
    bool header = false;
    for (std::size_t k = 1; k < cells.size(); ++k)
      if (!numeric(cells[k])) header = true;
    if (cells.size() == 1 && !numeric(cells[0])) header = true;
    if (header) {
      first = 1;
      std::string head(trim(cells[0]));
      std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
      id_header = head.empty() || head == "id" || head == "object_id";
    }
  }
  if (first >= lines.size()) throw InputError(fmt::format("{}: header without data rows", source));
  table.has_ids = id_header || !numeric(lines[first].second[0]);

  std::size_t width = 0;
  for (std::size_t r = first; r < lines.size(); ++r) {
    const auto& [no, cells] = lines[r];
    std::vector<double> row;
    for (std::size_t k = table.has_ids ? 1 : 0; k < cells.size(); ++k) {
      double v;
      if (!parse_number(cells[k], v))
        throw InputError(fmt::format("{}: line {}, column {}: '{}' is not a number", source, no, k + 1, cells[k]));
      if (!std::isfinite(v))
        throw InputError(fmt::format("{}: line {}, column {}: non-finite value", source, no, k + 1));
      row.push_back(v);
    }
    if (row.empty()) throw InputError(fmt::format("{}: line {} has no numeric columns", source, no));
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw InputError(fmt::format("{}: line {} has {} values, expected {}", source, no, row.size(), width));
    if (table.has_ids) table.ids.push_back(cells[0]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("input: cannot open '{}'", path));
  return in;
}

}  // namespace

DataTable read_data_csv(std::istream& in, const std::string& source) {
  RawTable table = read_table(in, source);
  const std::size_t m = table.rows.front().size();
  std::vector<double> values;
  values.reserve(table.rows.size() * m);
  for (const auto& row : table.rows) values.insert(values.end(), row.begin(), row.end());
  return DataTable(m, std::move(values), std::move(table.ids));
}

DataTable read_data_csv_file(const std::string& path) {
  auto in = open_input(path);
  return read_data_csv(in, path);
}

MatrixInput read_matrix_csv(std::istream& in, const std::string& source) {
  RawTable table = read_table(in, source);
  const std::size_t n = table.rows.size();
  if (table.rows.front().size() != n)
    throw InputError(fmt::format("{}: distance matrix has {} rows and {} columns", source, n, table.rows.front().size()));
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(table.rows[i][i]) > 1e-9)
      throw InputError(fmt::format("{}: diagonal entry {} is {}, expected 0", source, i, table.rows[i][i]));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = table.rows[i][j];
      const double b = table.rows[j][i];
      if (std::abs(a - b) > 1e-9)
        throw InputError(fmt::format("{}: entries ({}, {}) = {} and ({}, {}) = {} differ", source, i, j, a, j, i, b));
      if (a < 0.0 || b < 0.0) throw InputError(fmt::format("{}: negative distance at ({}, {})", source, i, j));
      d[i * n + j] = d[j * n + i] = 0.5 * (a + b);
    }
  }
  std::vector<std::string> ids = std::move(table.ids);
  if (ids.empty())
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return {DissimilarityStore(n, std::move(d)), std::move(ids)};
}

MatrixInput read_matrix_csv_file(const std::string& path) {
  auto in = open_input(path);
  return read_matrix_csv(in, path);
}

void write_data_csv(std::ostream& out, const DataTable& data) {
  out << "id";
  for (std::size_t k = 0; k < data.n_features(); ++k) out << ",x" << k;
  out << '\n';
  for (std::size_t i = 0; i < data.n_objects(); ++i) {
    out << data.object_id(i);
    for (std::size_t k = 0; k < data.n_features(); ++k) out << ',' << format_real(data.value(i, k));
    out << '\n';
  }
}

void write_merges_csv(std::ostream& out, const MergeHistory& history) {
  out << "t,left,right,size,link_value,r_t,delta_qs,delta_qd,qs_t,qd_t,q_half_t\n";
  const auto& prof = history.profile;
  for (const auto& rec : history.records) {
    const std::size_t t = rec.step;
    const bool has = t < prof.qs.size();
    out << t << ',' << rec.left << ',' << rec.right << ',' << rec.size << ',' << format_real(rec.link_value) << ','
        << format_real(rec.r) << ',' << format_real(rec.delta_qs) << ',' << format_real(rec.delta_qd) << ','
        << format_real(has ? prof.qs[t] : kNaN) << ',' << format_real(has ? prof.qd[t] : kNaN) << ','
        << format_real(has ? prof.q_half[t] : kNaN) << '\n';
  }
}

void write_partition_csv(std::ostream& out, const Partition& partition, const std::vector<std::string>& ids) {
  out << "object_id,cluster_label\n";
  for (std::size_t i = 0; i < partition.size(); ++i)
    out << (i < ids.size() ? ids[i] : std::to_string(i)) << ',' << partition.label(i) << '\n';
}

void write_curve_csv(std::ostream& out, const MergeHistory& history) {
  out << "t,p,qs,qd,q_half\n";
  const auto& prof = history.profile;
  for (std::size_t t = 0; t < prof.qs.size(); ++t)
    out << t << ',' << history.leaves - t << ',' << format_real(prof.qs[t]) << ',' << format_real(prof.qd[t]) << ','
        << format_real(prof.q_half[t]) << '\n';
}

HeightMode parse_height_mode(std::string_view name) {
  if (name == "r") return HeightMode::r;
  if (name == "distance" || name == "link") return HeightMode::distance;
  throw ConfigError(fmt::format("height: unknown value '{}' (expected r or distance)", name));
}

std::string_view to_string(HeightMode mode) { return mode == HeightMode::r ? "r" : "distance"; }

std::vector<double> node_heights(const MergeHistory& history, HeightMode mode) {
  std::vector<double> h(history.leaves + history.records.size(), 0.0);
  for (const auto& rec : history.records) h[rec.node] = mode == HeightMode::r ? rec.r : rec.link_value;
  return h;
}

bool has_height_inversion(const MergeHistory& history, HeightMode mode) {
  const auto h = node_heights(history, mode);
  for (const auto& rec : history.records)
    if (h[rec.node] < h[rec.left] || h[rec.node] < h[rec.right]) return true;
  return false;
}

namespace {

std::string newick_label(const std::string& id) {
  if (id.find_first_of(" ()[]':;,") == std::string::npos) return id;
  std::string quoted = "'";
  for (char c : id) {
    if (c == '\'') quoted += '\'';
    quoted += c;
  }
  return quoted + "'";
}

std::vector<std::size_t> roots_of(const MergeHistory& history) {
  std::vector<bool> child(history.leaves + history.records.size(), false);
  for (const auto& rec : history.records) child[rec.left] = child[rec.right] = true;
  std::vector<std::size_t> roots;
  for (std::size_t v = 0; v < child.size(); ++v)
    if (!child[v]) roots.push_back(v);
  return roots;
}

}  // namespace

std::string to_newick(const MergeHistory& history, const std::vector<std::string>& ids, HeightMode mode) {
  const std::size_t n = history.leaves;
  const auto h = node_heights(history, mode);
  auto label = [&](std::size_t leaf) { return newick_label(leaf < ids.size() ? ids[leaf] : std::to_string(leaf)); };
  std::function<void(std::string&, std::size_t, double)> emit = [&](std::string& out, std::size_t v, double parent) {
    if (v < n) {
      out += label(v);
    } else {
      const auto& rec = history.records[v - n];
      out += '(';
      emit(out, rec.left, h[v]);
      out += ',';
      emit(out, rec.right, h[v]);
      out += ')';
    }
    if (!std::isnan(parent)) out += ':' + format_real(parent - h[v]);
  };
  std::string out;
  for (std::size_t root : roots_of(history)) {
    emit(out, root, kNaN);
    out += ";\n";
  }
  return out;
}

namespace {

nlohmann::json real_or_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

double real_from(const nlohmann::json& v) { return v.is_null() ? kNaN : v.get<double>(); }

nlohmann::json reals(const std::vector<double>& values) {
  nlohmann::json arr = nlohmann::json::array();
  for (double v : values) arr.push_back(real_or_null(v));
  return arr;
}

}  // namespace

nlohmann::json history_to_json(const MergeHistory& history, const std::vector<std::string>& ids, HeightMode mode) {
  using nlohmann::json;
  json doc;
  doc["leaves"] = history.leaves;
  doc["r_scale"] = history.r_scale == RScale::ascending ? "ascending" : "descending";
  doc["orientation"] = history.profile.orientation == Orientation::maximize ? "maximize" : "minimize";
  doc["height"] = std::string(to_string(mode));
  json records = json::array();
  for (const auto& rec : history.records) {
    records.push_back({{"t", rec.step},
                       {"left", rec.left},
                       {"right", rec.right},
                       {"node", rec.node},
                       {"size", rec.size},
                       {"link_value", real_or_null(rec.link_value)},
                       {"r", real_or_null(rec.r)},
                       {"delta_qs", real_or_null(rec.delta_qs)},
                       {"delta_qd", real_or_null(rec.delta_qd)}});
  }
  doc["records"] = std::move(records);
  doc["profile"] = {{"qs", reals(history.profile.qs)},
                    {"qd", reals(history.profile.qd)},
                    {"q_half", reals(history.profile.q_half)}};

  const std::size_t n = history.leaves;
  const auto h = node_heights(history, mode);
  std::function<json(std::size_t)> node = [&](std::size_t v) -> json {
    if (v < n) return {{"id", v < ids.size() ? ids[v] : std::to_string(v)}, {"height", 0.0}};
    const auto& rec = history.records[v - n];
    return {{"node", v}, {"height", real_or_null(h[v])}, {"children", json::array({node(rec.left), node(rec.right)})}};
  };
  json forest = json::array();
  for (std::size_t root : roots_of(history)) forest.push_back(node(root));
  doc["tree"] = std::move(forest);
  return doc;
}

MergeHistory history_from_json(const nlohmann::json& doc) {
  MergeHistory history;
  try {
    history.leaves = doc.at("leaves").get<std::size_t>();
    history.r_scale = doc.at("r_scale").get<std::string>() == "descending" ? RScale::descending : RScale::ascending;
    history.profile.orientation =
        doc.at("orientation").get<std::string>() == "minimize" ? Orientation::minimize : Orientation::maximize;
    for (const auto& r : doc.at("records")) {
      MergeRecord rec;
      rec.step = r.at("t").get<std::size_t>();
      rec.left = r.at("left").get<std::size_t>();
      rec.right = r.at("right").get<std::size_t>();
      rec.node = r.at("node").get<std::size_t>();
      rec.size = r.at("size").get<std::size_t>();
      rec.link_value = real_from(r.at("link_value"));
      rec.r = real_from(r.at("r"));
      rec.delta_qs = real_from(r.at("delta_qs"));
      rec.delta_qd = real_from(r.at("delta_qd"));
      history.records.push_back(rec);
    }
    const auto& prof = doc.at("profile");
    for (const auto& v : prof.at("qs")) history.profile.qs.push_back(real_from(v));
    for (const auto& v : prof.at("qd")) history.profile.qd.push_back(real_from(v));
    for (const auto& v : prof.at("q_half")) history.profile.q_half.push_back(real_from(v));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("dendrogram json: {}", e.what()));
  }
  if (history.profile.qs.size() != history.profile.qd.size() || history.profile.qs.size() != history.profile.q_half.size())
    throw InputError("dendrogram json: profile columns differ in length");
  return history;
}

MergeHistory read_history_json_file(const std::string& path) {
  auto in = open_input(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: {}", path, e.what()));
  }
  return history_from_json(doc);
}

}  // namespace bipartial
