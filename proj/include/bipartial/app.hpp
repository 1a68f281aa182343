#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bipartial/core.hpp"
#include "bipartial/io.hpp"
#include "bipartial/kmeans.hpp"
#include "bipartial/linkage.hpp"
#include "bipartial/objectives.hpp"
#include "bipartial/oracle.hpp"
#include "bipartial/synthetic.hpp"

namespace bipartial {

enum class ExitCode : int { ok = 0, input_error = 1, invariant_violation = 2, internal_error = 3 };

enum class Algorithm { linkage, bipartial, kmeans, hybrid };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);

using ConfigMap = std::map<std::string, std::string>;

/// Every recognised key with its default value.
const ConfigMap& config_defaults();

/// key=value lines; '#' starts a comment. Unknown keys are rejected.
ConfigMap parse_config_text(std::istream& in, const std::string& source = "config");

struct RunConfig {
  std::string input;
  std::string format = "data";
  Metric metric = Metric::euclidean;
  ProximityTransform transform;
  Algorithm algorithm = Algorithm::bipartial;
  LinkageScheme scheme = LinkageScheme::upgma;
  ObjectiveOptions objective;
  KMeansOptions kmeans;
  std::size_t kmeans_p = 4;
  std::size_t first_stage_p = 0;
  HybridStage hybrid_stage = HybridStage::kmeans;
  double outer_weight = 0.5;
  std::string output = "out";
  std::optional<HeightMode> height;
  std::size_t threads = 1;
  std::size_t cut_p = 0;
  std::size_t sweep_p_min = 1;
  std::size_t sweep_p_max = 10;
  double oracle_r = 0.5;
  std::size_t oracle_guard = kOracleGuard;
  std::string verify_history;
  std::size_t verify_random = 0;
  std::size_t verify_n = 8;
  std::uint64_t verify_seed = 1;
  NestedBlobOptions gen;
};

/// Values are validated here; errors name the offending key.
RunConfig config_from_map(const ConfigMap& values);

/// Normalised key=value text of the settings that affect results (threads
/// and the output directory are left out).
std::string config_echo(const ConfigMap& values);

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bipartial
