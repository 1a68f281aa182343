#include "bipartial/app.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bipartial/engine.hpp"

namespace bipartial {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "linkage") return Algorithm::linkage;
  if (name == "bipartial") return Algorithm::bipartial;
  if (name == "kmeans") return Algorithm::kmeans;
  if (name == "hybrid") return Algorithm::hybrid;
  throw ConfigError(fmt::format("algorithm: unknown value '{}' (expected linkage, bipartial, kmeans or hybrid)", name));
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::linkage: return "linkage";
    case Algorithm::bipartial: return "bipartial";
    case Algorithm::kmeans: return "kmeans";
    case Algorithm::hybrid: return "hybrid";
  }
  return "?";
}

const ConfigMap& config_defaults() {
  static const ConfigMap defaults = {
      {"input", ""},
      {"format", "data"},
      {"metric", "euclidean"},
      {"transform", "average_preserving"},
      {"transform.c", "0"},
      {"algorithm", "bipartial"},
      {"linkage.scheme", "upgma"},
      {"objective", "additive"},
      {"facility.cost", "centroid"},
      {"facility.scale", "1"},
      {"kmeans.p", "4"},
      {"kmeans.restarts", "20"},
      {"kmeans.seed", "1"},
      {"kmeans.metric", "manhattan"},
      {"kmeans.seeding", "random"},
      {"kmeans.max_iter", "300"},
      {"hybrid.first_stage_p", "auto"},
      {"hybrid.stage", "kmeans"},
      {"bipartial.outer_weight", "0.5"},
      {"output", "out"},
      {"height", "auto"},
      {"threads", "1"},
      {"cut.p", "0"},
      {"sweep.p_min", "1"},
      {"sweep.p_max", "10"},
      {"oracle.r", "0.5"},
      {"oracle.guard", "12"},
      {"verify.history", ""},
      {"verify.random", "0"},
      {"verify.n", "8"},
      {"verify.seed", "1"},
      {"gen.n", "60"},
      {"gen.blobs", "4"},
      {"gen.levels", "2"},
      {"gen.dims", "2"},
      {"gen.radius", "10"},
      {"gen.ratio", "0.85"},
      {"gen.spread", "0.5"},
      {"gen.seed", "7"},
  };
  return defaults;
}

namespace {

std::string trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ConfigMap parse_config_text(std::istream& in, const std::string& source) {
  ConfigMap values;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trimmed(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}: line {}: expected key=value", source, no));
    const std::string key = trimmed(std::string_view(body).substr(0, eq));
    if (!config_defaults().contains(key)) throw ConfigError(fmt::format("{}: line {}: unknown key '{}'", source, no, key));
    values[key] = trimmed(std::string_view(body).substr(eq + 1));
  }
  return values;
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigMap& values) : values_(values) {}

  const std::string& text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    return config_defaults().at(key);
  }

  double real(const std::string& key) const {
    const std::string& s = text(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, s));
    return v;
  }

  std::uint64_t unsigned_int(const std::string& key) const {
    const std::string& s = text(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, s));
    return v;
  }

  std::size_t count(const std::string& key) const { return static_cast<std::size_t>(unsigned_int(key)); }

  template <typename F>
  auto parsed(const std::string& key, F parse) const {
    try {
      return parse(text(key));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
  }

 private:
  const ConfigMap& values_;
};

}  // namespace

RunConfig config_from_map(const ConfigMap& values) {
  for (const auto& [key, value] : values)
    if (!config_defaults().contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
  const Reader r(values);
  RunConfig c;
  c.input = r.text("input");
  c.format = r.text("format");
  if (c.format != "data" && c.format != "matrix")
    throw ConfigError(fmt::format("format: unknown value '{}' (expected data or matrix)", c.format));
  c.metric = r.parsed("metric", [](const std::string& s) { return parse_metric(s); });
  const double tc = r.real("transform.c");
  c.transform = r.parsed("transform", [&](const std::string& s) { return parse_transform(s, tc); });
  c.algorithm = r.parsed("algorithm", [](const std::string& s) { return parse_algorithm(s); });
  c.scheme = r.parsed("linkage.scheme", [](const std::string& s) { return parse_linkage(s); });
  c.objective.kind = r.parsed("objective", [](const std::string& s) { return parse_objective(s); });
  c.objective.facility.cost = r.parsed("facility.cost", [](const std::string& s) { return parse_facility_cost(s); });
  c.objective.facility.scale = r.real("facility.scale");
  if (!(c.objective.facility.scale > 0.0)) throw ConfigError("facility.scale: must be > 0");
  c.objective.facility.metric = c.metric;
  c.kmeans_p = r.count("kmeans.p");
  c.kmeans.restarts = r.count("kmeans.restarts");
  if (c.kmeans.restarts == 0) throw ConfigError("kmeans.restarts: must be >= 1");
  c.kmeans.seed = r.unsigned_int("kmeans.seed");
  c.kmeans.metric = r.parsed("kmeans.metric", [](const std::string& s) { return parse_metric(s); });
  if (c.kmeans.metric == Metric::euclidean)
    throw ConfigError("kmeans.metric: must be squared_euclidean or manhattan");
  c.kmeans.seeding = r.parsed("kmeans.seeding", [](const std::string& s) { return parse_seeding(s); });
  c.kmeans.max_iterations = r.count("kmeans.max_iter");
  c.first_stage_p = r.text("hybrid.first_stage_p") == "auto" ? 0 : r.count("hybrid.first_stage_p");
  if (r.text("hybrid.first_stage_p") != "auto" && c.first_stage_p == 0)
    throw ConfigError("hybrid.first_stage_p: must be >= 1 or auto");
  c.hybrid_stage = r.parsed("hybrid.stage", [](const std::string& s) { return parse_hybrid_stage(s); });
  c.outer_weight = r.real("bipartial.outer_weight");
  if (!(c.outer_weight > 0.0)) throw ConfigError("bipartial.outer_weight: must be > 0");
  c.output = r.text("output");
  if (c.output.empty()) throw ConfigError("output: must not be empty");
  if (r.text("height") != "auto")
    c.height = r.parsed("height", [](const std::string& s) { return parse_height_mode(s); });
  c.threads = r.count("threads");
  if (c.threads == 0) throw ConfigError("threads: must be >= 1");
  c.kmeans.threads = c.threads;
  c.cut_p = r.count("cut.p");
  c.sweep_p_min = r.count("sweep.p_min");
  c.sweep_p_max = r.count("sweep.p_max");
  c.oracle_r = r.real("oracle.r");
  if (c.oracle_r < 0.0 || c.oracle_r > 1.0) throw ConfigError("oracle.r: must lie in [0, 1]");
  c.oracle_guard = r.count("oracle.guard");
  if (c.oracle_guard > kOracleHardCap)
    throw ConfigError(fmt::format("oracle.guard: {} exceeds the hard cap of {}", c.oracle_guard, kOracleHardCap));
  c.verify_history = r.text("verify.history");
  c.verify_random = r.count("verify.random");
  c.verify_n = r.count("verify.n");
  c.verify_seed = r.unsigned_int("verify.seed");
  c.gen.n = r.count("gen.n");
  c.gen.blobs = r.count("gen.blobs");
  c.gen.levels = r.count("gen.levels");
  c.gen.dims = r.count("gen.dims");
  c.gen.radius = r.real("gen.radius");
  c.gen.ratio = r.real("gen.ratio");
  c.gen.spread = r.real("gen.spread");
  c.gen.seed = r.unsigned_int("gen.seed");
  return c;
}

std::string config_echo(const ConfigMap& values) {
  std::string out;
  for (const auto& [key, def] : config_defaults()) {
    if (key == "threads" || key == "output") continue;
    const auto it = values.find(key);
    out += key + "=" + (it != values.end() ? it->second : def) + "\n";
  }
  return out;
}

namespace {

namespace fs = std::filesystem;

struct Input {
  std::optional<DataTable> data;
  std::optional<DissimilarityStore> distances;
  std::vector<std::string> ids;
};

Input load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ConfigError("input: no input file given");
  Input in;
  if (cfg.format == "matrix") {
    auto m = read_matrix_csv_file(cfg.input);
    in.distances = std::move(m.store);
    in.ids = std::move(m.object_ids);
  } else {
    in.data = read_data_csv_file(cfg.input);
    in.ids = in.data->object_ids();
    in.distances = compute_distances(*in.data, cfg.metric);
  }
  return in;
}

const DataTable& require_data(const Input& in, std::string_view what) {
  if (!in.data) throw ConfigError(fmt::format("format: {} needs a feature table, not a distance matrix", what));
  return *in.data;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("output: cannot write '{}'", path.string()));
  out << content;
}

fs::path prepare_output(const RunConfig& cfg) {
  const fs::path dir(cfg.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError(fmt::format("output: cannot create '{}': {}", dir.string(), ec.message()));
  return dir;
}

HybridOptions hybrid_options(const RunConfig& cfg) {
  HybridOptions h;
  h.first_stage_p = cfg.first_stage_p;
  h.stage = cfg.hybrid_stage;
  h.kmeans = cfg.kmeans;
  h.merge.metric = cfg.kmeans.metric;
  h.merge.transform = cfg.transform;
  h.merge.outer_weight = cfg.outer_weight;
  h.facility = cfg.objective.facility;
  return h;
}

struct Clustering {
  MergeHistory history;
  std::optional<Partition> partition;
  std::string rule = "none";
  std::optional<StopDecision> decision;
  std::optional<Partition> atoms;
  std::vector<CurvePoint> kmeans_curve;
  double offset = kNaN;
  std::size_t clamped = 0;
};

Clustering run_clustering(const RunConfig& cfg, const Input& in) {
  Clustering out;
  const std::size_t n = in.ids.size();
  switch (cfg.algorithm) {
    case Algorithm::linkage: {
      out.history = run_linkage(*in.distances, cfg.scheme);
      if (cfg.cut_p > 0) {
        if (cfg.cut_p > n) throw ConfigError(fmt::format("cut.p: {} clusters for {} objects", cfg.cut_p, n));
        out.partition = partition_at_step(out.history, n - cfg.cut_p);
        out.rule = "cut";
      }
      return out;
    }
    case Algorithm::bipartial: {
      const DissimilarityStore store = apply_transform(*in.distances, cfg.transform);
      out.offset = store.offset();
      out.clamped = store.clamped_pairs();
      const Partition atoms = Partition::singletons(n);
      if (cfg.objective.kind == ObjectiveKind::facility) {
        const DataTable* data = in.data ? &*in.data : nullptr;
        FacilityObjective objective(cfg.objective.facility, data, &store, atoms);
        FacilityResult result = run_facility(objective);
        out.history = std::move(result.history);
        out.partition = std::move(result.partition);
        out.rule = "no_improving_pair";
        return out;
      }
      auto objective = make_objective(cfg.objective, store, atoms, in.data ? &*in.data : nullptr);
      out.history = run_bipartial(*objective);
      break;
    }
    case Algorithm::kmeans: {
      const DataTable& data = require_data(in, "algorithm=kmeans");
      KMeansMergeOptions mo{cfg.kmeans.metric, cfg.transform, cfg.outer_weight};
      out.offset = kmeans_offset(data, mo.metric, mo.transform);
      out.history = run_bipartial_kmeans(data, mo);
      for (std::size_t t = 0; t <= out.history.records.size(); ++t) {
        const Partition level = partition_at_step(out.history, t);
        out.kmeans_curve.push_back(
            {t, level.cluster_count(), bipartial_kmeans_objective(data, level, mo.metric, out.offset, mo.outer_weight)});
      }
      break;
    }
    case Algorithm::hybrid: {
      const DataTable& data = require_data(in, "algorithm=hybrid");
      const HybridOptions h = hybrid_options(cfg);
      HybridResult result = hybrid_two_stage(data, h);
      out.offset = kmeans_offset(data, h.merge.metric, h.merge.transform);
      out.history = std::move(result.history);
      out.partition = std::move(result.partition);
      out.atoms = std::move(result.atoms);
      out.kmeans_curve = std::move(result.curve);
      if (h.stage == HybridStage::facility) {
        out.rule = "no_improving_pair";
      } else {
        out.decision = result.decision;
        out.rule = std::string(to_string(result.decision.rule));
      }
      return out;
    }
  }
  const auto [partition, decision] = select_partition(out.history);
  out.partition = partition;
  out.decision = decision;
  out.rule = std::string(to_string(decision.rule));
  return out;
}

nlohmann::json json_real(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

int cmd_cluster(const RunConfig& cfg, const ConfigMap& values, std::ostream& out) {
  const Input in = load_input(cfg);
  const Clustering c = run_clustering(cfg, in);
  validate_history(c.history);
  const fs::path dir = prepare_output(cfg);
  const HeightMode height =
      cfg.height.value_or(cfg.algorithm == Algorithm::linkage ? HeightMode::distance : HeightMode::r);
  if (cfg.algorithm == Algorithm::linkage && height == HeightMode::r)
    throw ConfigError("height: classical linkage records no r values; use height=distance");

  std::ostringstream merges, curve, partition, kcurve;
  write_merges_csv(merges, c.history);
  write_file(dir / "merges.csv", merges.str());
  write_file(dir / "dendrogram.json", history_to_json(c.history, in.ids, height).dump(2) + "\n");
  write_file(dir / "dendrogram.nwk", to_newick(c.history, in.ids, height));
  if (!c.history.profile.empty()) {
    write_curve_csv(curve, c.history);
    write_file(dir / "curve.csv", curve.str());
  }
  if (c.partition) {
    write_partition_csv(partition, *c.partition, in.ids);
    write_file(dir / "partition.csv", partition.str());
  }
  if (c.atoms) {
    std::ostringstream atoms;
    write_partition_csv(atoms, *c.atoms, in.ids);
    write_file(dir / "atoms.csv", atoms.str());
  }
  if (!c.kmeans_curve.empty()) {
    kcurve << "t,p,Q_D,Q^S,Q_D^S\n";
    for (const auto& pt : c.kmeans_curve)
      kcurve << pt.t << ',' << pt.p << ',' << format_real(pt.values.qd) << ',' << format_real(pt.values.qs) << ','
             << format_real(pt.values.total) << '\n';
    write_file(dir / "kmeans_curve.csv", kcurve.str());
  }

  nlohmann::json stop;
  stop["algorithm"] = std::string(to_string(cfg.algorithm));
  stop["rule"] = c.rule;
  stop["leaves"] = c.history.leaves;
  stop["mergers"] = c.history.records.size();
  if (c.decision) {
    stop["selected_step"] = c.decision->step;
    stop["r_sequence_monotone"] = c.decision->r_sequence_monotone;
  }
  if (c.partition) stop["clusters"] = c.partition->cluster_count();
  if (cfg.algorithm != Algorithm::linkage) {
    const EnvelopeReport env = envelope_report(c.history);
    stop["r_inversions"] = env.r_inversions;
    stop["envelope_gradient_increasing"] = env.convex();
  }
  stop["height"] = std::string(to_string(height));
  stop["height_inversion"] = has_height_inversion(c.history, height);
  stop["transform_offset"] = json_real(c.offset);
  stop["clamped_pairs"] = c.clamped;
  write_file(dir / "stop.json", stop.dump(2) + "\n");
  write_file(dir / "config.txt", config_echo(values));

  out << fmt::format("{} objects, {} mergers, rule {}", c.history.leaves, c.history.records.size(), c.rule);
  if (c.decision) out << fmt::format(", selected step {}", c.decision->step);
  if (c.partition) out << fmt::format(", {} clusters", c.partition->cluster_count());
  out << fmt::format("\nartifacts written to {}\n", dir.string());
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const ConfigMap& values, std::ostream& out) {
  const Input in = load_input(cfg);
  const DataTable& data = require_data(in, "sweep");
  const auto rows = kmeans_sweep(data, cfg.sweep_p_min, cfg.sweep_p_max, cfg.kmeans, cfg.transform, cfg.outer_weight);
  const std::size_t best = sweep_argmin(rows);
  std::ostringstream csv;
  csv << "p,Q_D^S,Q_D,Q^S,argmin\n";
  for (std::size_t k = 0; k < rows.size(); ++k)
    csv << rows[k].p << ',' << format_real(rows[k].values.total) << ',' << format_real(rows[k].values.qd) << ','
        << format_real(rows[k].values.qs) << ',' << (k == best ? 1 : 0) << '\n';
  const fs::path dir = prepare_output(cfg);
  write_file(dir / "sweep.csv", csv.str());
  write_file(dir / "config.txt", config_echo(values));
  out << fmt::format("{:>4} {:>14} {:>14} {:>14}\n", "p", "Q_D^S", "Q_D", "Q^S");
  for (std::size_t k = 0; k < rows.size(); ++k)
    out << fmt::format("{:>4} {:>14.4f} {:>14.4f} {:>14.4f}{}\n", rows[k].p, rows[k].values.total, rows[k].values.qd,
                       rows[k].values.qs, k == best ? "  <- min" : "");
  return 0;
}

OracleSpec oracle_spec(const RunConfig& cfg, const Input& in) {
  OracleSpec spec;
  if (cfg.algorithm == Algorithm::kmeans) {
    spec.kind = OracleObjective::kmeans;
    spec.metric = cfg.kmeans.metric;
    spec.outer_weight = cfg.outer_weight;
    spec.offset = kmeans_offset(require_data(in, "the kmeans oracle"), spec.metric, cfg.transform);
    return spec;
  }
  if (cfg.algorithm != Algorithm::bipartial)
    throw ConfigError(fmt::format("algorithm: the oracle supports bipartial and kmeans, not {}", to_string(cfg.algorithm)));
  spec.facility = cfg.objective.facility;
  switch (cfg.objective.kind) {
    case ObjectiveKind::additive: spec.kind = OracleObjective::additive; break;
    case ObjectiveKind::minmax: spec.kind = OracleObjective::minmax; break;
    case ObjectiveKind::avg_additive: spec.kind = OracleObjective::avg_additive; break;
    case ObjectiveKind::facility: spec.kind = OracleObjective::facility; break;
  }
  return spec;
}

int cmd_oracle(const RunConfig& cfg, const ConfigMap& values, std::ostream& out) {
  const Input in = load_input(cfg);
  check_oracle_size(in.ids.size(), cfg.oracle_guard);
  const DissimilarityStore store = apply_transform(*in.distances, cfg.transform);
  const OracleSpec spec = oracle_spec(cfg, in);
  const OracleBest best =
      oracle_best(spec, &store, in.data ? &*in.data : nullptr, cfg.oracle_r, {cfg.oracle_guard, cfg.threads});
  const fs::path dir = prepare_output(cfg);
  std::ostringstream partition;
  write_partition_csv(partition, best.partition, in.ids);
  write_file(dir / "partition.csv", partition.str());
  nlohmann::json doc;
  doc["objective"] = std::string(to_string(spec.kind));
  doc["r"] = cfg.oracle_r;
  doc["q"] = best.q;
  doc["qs"] = best.value.qs;
  doc["qd"] = best.value.qd;
  doc["clusters"] = best.partition.cluster_count();
  doc["labels"] = best.partition.labels();
  doc["partitions_evaluated"] = best.evaluated;
  write_file(dir / "oracle.json", doc.dump(2) + "\n");
  write_file(dir / "config.txt", config_echo(values));
  out << fmt::format("optimum of Q(P, {}) over {} partitions: {} ({} clusters)\n", format_real(cfg.oracle_r),
                     best.evaluated, format_real(best.q), best.partition.cluster_count());
  out << "labels:";
  for (int l : best.partition.labels()) out << ' ' << l;
  out << '\n';
  return 0;
}

struct VerifyCounts {
  std::size_t value_mismatches = 0;
  std::size_t switch_mismatches = 0;
  std::size_t switch_checked = 0;
  std::size_t monotonicity = 0;
  std::size_t threshold = 0;
  double gap = 0.0;
  double engine_best = 0.0;
  double oracle_best = 0.0;
};

bool close(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

VerifyCounts verify_history(const MergeHistory& h, const OracleSpec& spec, const DissimilarityStore* store,
                            const DataTable* data, const OracleOptions& options, std::ostream& log) {
  VerifyCounts v;
  validate_history(h);
  const bool maximize = spec.orientation() == Orientation::maximize;
  const bool descending = h.r_scale == RScale::descending;
  if (h.profile.qs.size() != h.records.size() + 1) throw ContractViolation("verify: history carries no objective profile");

  std::vector<Partition> levels;
  for (std::size_t t = 0; t <= h.records.size(); ++t) levels.push_back(partition_at_step(h, t));

  for (std::size_t t = 0; t < levels.size(); ++t) {
    const OracleValue ov = evaluate(spec, store, data, levels[t]);
    if (!close(ov.qs, h.profile.qs[t]) || !close(ov.qd, h.profile.qd[t]) ||
        !close(h.profile.q_half[t], 0.5 * h.profile.qs[t] + 0.5 * h.profile.qd[t])) {
      ++v.value_mismatches;
      log << fmt::format("value mismatch at t={}: qs {} vs {}, qd {} vs {}\n", t, format_real(h.profile.qs[t]),
                         format_real(ov.qs), format_real(h.profile.qd[t]), format_real(ov.qd));
    }
    if (t == 0) continue;
    const double scale = std::max({1.0, std::abs(h.profile.qs[t]), std::abs(h.profile.qd[t])});
    const double dqs = h.profile.qs[t] - h.profile.qs[t - 1];
    const double dqd = h.profile.qd[t] - h.profile.qd[t - 1];
    const bool wrong_way = maximize ? (dqs < -1e-9 * scale || dqd > 1e-9 * scale)
                                    : (dqs > 1e-9 * scale || dqd < -1e-9 * scale);
    if (wrong_way) {
      ++v.monotonicity;
      log << fmt::format("monotonicity violation at t={}: qs change {}, qd change {}\n", t, format_real(dqs),
                         format_real(dqd));
    }
  }

  for (const auto& rec : h.records) {
    const double total = rec.delta_qs + rec.delta_qd;
    const double expected = total > 0.0 ? (descending ? rec.delta_qs : rec.delta_qd) / total : rec.r;
    if (!(rec.r >= 0.0 && rec.r <= 1.0) || rec.delta_qs < 0.0 || rec.delta_qd < 0.0 ||
        (total > 0.0 && rec.r != 0.0 && !close(rec.r, expected, 1e-12))) {
      ++v.threshold;
      log << fmt::format("threshold violation at t={}: r = {}, delta_qs = {}, delta_qd = {}\n", rec.step,
                         format_real(rec.r), format_real(rec.delta_qs), format_real(rec.delta_qd));
    }
    // the k-means merge rule compares pair-restricted similarity, not Q^S;
    // zero-distance pairs are pre-merged at r = 0
    if (spec.kind == OracleObjective::kmeans || (rec.r == 0.0 && rec.delta_qd == 0.0)) continue;
    ++v.switch_checked;
    try {
      const double sp = oracle_switch_point(spec, store, data, levels[rec.step], levels[rec.step - 1]);
      if (!close(sp, rec.r)) {
        ++v.switch_mismatches;
        log << fmt::format("switch point mismatch at t={}: recorded r = {}, oracle = {}\n", rec.step,
                           format_real(rec.r), format_real(sp));
      }
    } catch (const ContractViolation& e) {
      ++v.switch_mismatches;
      log << fmt::format("switch point undefined at t={}: {}\n", rec.step, e.what());
    }
  }

  const OracleBest best = oracle_best(spec, store, data, 0.5, options);
  const auto& q = h.profile.q_half;
  v.engine_best = maximize ? *std::max_element(q.begin(), q.end()) : *std::min_element(q.begin(), q.end());
  v.oracle_best = best.q;
  v.gap = maximize ? v.oracle_best - v.engine_best : v.engine_best - v.oracle_best;
  return v;
}

int cmd_verify(const RunConfig& cfg, const ConfigMap& values, std::ostream& out) {
  const OracleOptions options{cfg.oracle_guard, cfg.threads};
  const fs::path dir = prepare_output(cfg);
  bool breach = false;

  if (cfg.verify_random > 0) {
    if (cfg.algorithm != Algorithm::bipartial && cfg.algorithm != Algorithm::kmeans)
      throw ConfigError("algorithm: random verification supports bipartial and kmeans");
    check_oracle_size(cfg.verify_n, cfg.oracle_guard);
    std::ostringstream csv;
    csv << "seed,n,engine_best,oracle_best,gap,relative_gap\n";
    std::vector<double> rel;
    std::size_t zero = 0;
    for (std::size_t k = 0; k < cfg.verify_random; ++k) {
      const std::uint64_t seed = cfg.verify_seed + k;
      Input in;
      in.data = uniform_cloud(cfg.verify_n, 2, seed);
      in.ids = in.data->object_ids();
      in.distances = compute_distances(*in.data, cfg.metric);
      const Clustering c = run_clustering(cfg, in);
      const DissimilarityStore store = apply_transform(*in.distances, cfg.transform);
      const OracleSpec spec = oracle_spec(cfg, in);
      std::ostringstream log;
      const VerifyCounts v = verify_history(c.history, spec, &store, &*in.data, options, log);
      const double relative = v.gap / std::max(std::abs(v.oracle_best), 1e-300);
      rel.push_back(relative);
      if (v.gap <= 1e-12 * std::max(1.0, std::abs(v.oracle_best))) ++zero;
      if (v.gap < -1e-9 * std::max(1.0, std::abs(v.oracle_best))) breach = true;
      csv << seed << ',' << cfg.verify_n << ',' << format_real(v.engine_best) << ',' << format_real(v.oracle_best) << ','
          << format_real(v.gap) << ',' << format_real(relative) << '\n';
    }
    write_file(dir / "verify_gaps.csv", csv.str());
    std::vector<double> sorted = rel;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted.size() % 2 == 1 ? sorted[sorted.size() / 2]
                                                  : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    out << fmt::format("instances {}, zero gap {}, median relative gap {:.6g}, max relative gap {:.6g}\n", rel.size(),
                       zero, median, sorted.back());
    if (breach) out << "negative gap found: the engine beat the exhaustive optimum\n";
    write_file(dir / "config.txt", config_echo(values));
    return breach ? static_cast<int>(ExitCode::invariant_violation) : 0;
  }

  const Input in = load_input(cfg);
  check_oracle_size(in.ids.size(), cfg.oracle_guard);
  const DissimilarityStore store = apply_transform(*in.distances, cfg.transform);
  const OracleSpec spec = oracle_spec(cfg, in);
  MergeHistory history;
  if (!cfg.verify_history.empty()) {
    history = read_history_json_file(cfg.verify_history);
    if (history.leaves != in.ids.size())
      throw InputError(fmt::format("verify.history: {} leaves for {} objects", history.leaves, in.ids.size()));
  } else {
    history = run_clustering(cfg, in).history;
  }
  std::ostringstream log;
  const VerifyCounts v = verify_history(history, spec, &store, in.data ? &*in.data : nullptr, options, log);
  breach = v.value_mismatches + v.switch_mismatches + v.monotonicity + v.threshold > 0 ||
           v.gap < -1e-9 * std::max(1.0, std::abs(v.oracle_best));
  std::ostringstream report;
  report << log.str();
  report << fmt::format("value mismatches: {}\n", v.value_mismatches);
  report << fmt::format("switch point mismatches: {} of {} checked\n", v.switch_mismatches, v.switch_checked);
  report << fmt::format("monotonicity violations: {}\n", v.monotonicity);
  report << fmt::format("threshold violations: {}\n", v.threshold);
  report << fmt::format("engine best Q(P, 1/2): {}\n", format_real(v.engine_best));
  report << fmt::format("oracle optimum Q(P, 1/2): {}\n", format_real(v.oracle_best));
  report << fmt::format("gap: {}\n", format_real(v.gap));
  report << (breach ? "result: FAIL\n" : "result: ok\n");
  write_file(dir / "verify.txt", report.str());
  write_file(dir / "config.txt", config_echo(values));
  out << report.str();
  return breach ? static_cast<int>(ExitCode::invariant_violation) : 0;
}

int cmd_gen(const RunConfig& cfg, const ConfigMap& values, std::ostream& out) {
  const DataTable data = nested_blobs(cfg.gen);
  std::ostringstream csv;
  write_data_csv(csv, data);
  if (cfg.output == "-") {
    out << csv.str();
    return 0;
  }
  const fs::path dir = prepare_output(cfg);
  write_file(dir / "data.csv", csv.str());
  write_file(dir / "config.txt", config_echo(values));
  out << fmt::format("{} points written to {}\n", data.n_objects(), (dir / "data.csv").string());
  return 0;
}

}  // namespace

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bi-partial objective clustering"};
  app.name("bipartial");
  app.require_subcommand(1, 1);

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&, const ConfigMap&, std::ostream&);
  };
  const Command commands[] = {
      {"cluster", "Run a linkage, bi-partial, k-means merger or hybrid pipeline and write its artifacts", cmd_cluster},
      {"sweep", "Run k-means for a range of p and tabulate the bi-partial k-means objective", cmd_sweep},
      {"verify", "Cross-check a run against exhaustive enumeration", cmd_verify},
      {"oracle", "Find the exact optimum of Q(P, r) by enumerating all partitions", cmd_oracle},
      {"gen", "Write a synthetic nested-blob data set", cmd_gen},
  };

  std::string config_file;
  ConfigMap flag_values;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_file, "key=value configuration file; flags override it");
    for (const auto& [key, def] : config_defaults()) {
      std::string name = "--" + key;
      if (key == "input") name = "-i,--input";
      if (key == "output") name = "-o,--output";
      sub->add_option(name, flag_values[key], fmt::format("(default: {})", def.empty() ? "none" : def));
    }
    subs.emplace_back(sub, &cmd);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::input_error);
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      ConfigMap values;
      if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw InputError(fmt::format("config: cannot open '{}'", config_file));
        values = parse_config_text(in, config_file);
      }
      for (const auto& [key, def] : config_defaults())
        if (sub->get_option("--" + key)->count() > 0) values[key] = flag_values[key];
      const RunConfig cfg = config_from_map(values);
      return cmd->run(cfg, values, out);
    } catch (const InputError& e) {
      err << "input error: " << e.what() << '\n';
      return static_cast<int>(ExitCode::input_error);
    } catch (const ConfigError& e) {
      err << "configuration error: " << e.what() << '\n';
      return static_cast<int>(ExitCode::input_error);
    } catch (const ContractViolation& e) {
      err << "invariant violation: " << e.what() << '\n';
      return static_cast<int>(ExitCode::invariant_violation);
    } catch (const std::exception& e) {
      err << "internal error: " << e.what() << '\n';
      return static_cast<int>(ExitCode::internal_error);
    }
  }
  err << "error: no subcommand\n";
  return static_cast<int>(ExitCode::input_error);
}

}  // namespace bipartial
