#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bipartial/app.hpp"

using namespace bipartial;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_app(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bipartial_cli_tests") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void put(const fs::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string fixture(const std::string& name) { return std::string(TEST_DATA_DIR) + "/" + name; }

}  // namespace

TEST_CASE("config text parsing") {
  std::istringstream in("# run\nmetric = manhattan\n\nkmeans.p=3 # trailing\n");
  const auto values = parse_config_text(in);
  CHECK(values.at("metric") == "manhattan");
  CHECK(values.at("kmeans.p") == "3");
  std::istringstream bad("colour=red\n");
  CHECK_THROWS_AS(parse_config_text(bad), ConfigError);
  std::istringstream junk("metric\n");
  CHECK_THROWS_AS(parse_config_text(junk), ConfigError);
}

TEST_CASE("config validation names the key") {
  try {
    config_from_map({{"kmeans.restarts", "zero"}});
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("kmeans.restarts") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_map({{"algorithm", "ward"}}), ConfigError);
  CHECK_THROWS_AS(config_from_map({{"kmeans.metric", "euclidean"}}), ConfigError);
  CHECK_THROWS_AS(config_from_map({{"oracle.guard", "15"}}), ConfigError);
  CHECK_THROWS_AS(config_from_map({{"transform", "affine"}, {"transform.c", "x"}}), ConfigError);
  const auto c = config_from_map({{"hybrid.first_stage_p", "5"}, {"height", "distance"}});
  CHECK(c.first_stage_p == 5);
  CHECK(c.height == HeightMode::distance);
}

TEST_CASE("config echo leaves out threads and the output directory") {
  const std::string echo = config_echo({{"threads", "4"}, {"metric", "manhattan"}});
  CHECK(echo.find("threads") == std::string::npos);
  CHECK(config_echo({{"output", "a"}}) == config_echo({{"output", "b"}}));
  CHECK(echo.find("metric=manhattan\n") != std::string::npos);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"cluster", "--no-such-flag", "1"}).code == 1);
  CHECK(run({"cluster"}).code == 1);
  CHECK(run({"cluster", "-i", "/nonexistent.csv"}).code == 1);
  CHECK(run({"cluster", "-i", fixture("six_points.csv"), "--algorithm", "ward"}).code == 1);
  const auto r = run({"cluster", "-i", fixture("six_points.csv"), "--metric", "cosine"});
  CHECK(r.code == 1);
  CHECK(r.err.find("metric") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cluster writes every artifact") {
  const auto dir = scratch_dir("artifacts");
  const auto r = run({"cluster", "-i", fixture("six_points.csv"), "-o", dir.string()});
  REQUIRE(r.code == 0);
  for (const char* name : {"merges.csv", "dendrogram.json", "dendrogram.nwk", "partition.csv", "stop.json",
                           "curve.csv", "config.txt"})
    CHECK(fs::exists(dir / name));
  const auto stop = nlohmann::json::parse(slurp(dir / "stop.json"));
  CHECK(stop["mergers"] == 5);
  CHECK(stop["rule"] == "r_crossing");
  CHECK(slurp(dir / "partition.csv").rfind("object_id,cluster_label\n", 0) == 0);
}

TEST_CASE("three point single linkage through the cli") {
  const auto dir = scratch_dir("toy");
  put(dir / "toy.csv", "a,0\nb,1\nc,10\n");
  const auto r = run({"cluster", "-i", (dir / "toy.csv").string(), "-o", dir.string(), "--algorithm", "linkage",
                      "--linkage.scheme", "single"});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "dendrogram.nwk") == "((a:1,b:1):8,c:9);\n");
  std::istringstream merges(slurp(dir / "merges.csv"));
  std::string row;
  std::size_t rows = 0;
  while (std::getline(merges, row)) ++rows;
  CHECK(rows == 3);
  CHECK_FALSE(fs::exists(dir / "partition.csv"));
  CHECK(run({"cluster", "-i", (dir / "toy.csv").string(), "-o", dir.string(), "--algorithm", "linkage", "--height",
             "r"})
            .code == 1);
}

TEST_CASE("flags override the config file") {
  const auto dir = scratch_dir("override");
  put(dir / "run.cfg", "input=" + fixture("six_points.csv") + "\nalgorithm=linkage\nlinkage.scheme=complete\n");
  REQUIRE(run({"cluster", "--config", (dir / "run.cfg").string(), "-o", (dir / "a").string()}).code == 0);
  CHECK(slurp(dir / "a" / "config.txt").find("linkage.scheme=complete\n") != std::string::npos);
  REQUIRE(run({"cluster", "--config", (dir / "run.cfg").string(), "-o", (dir / "b").string(), "--linkage.scheme",
               "single"})
              .code == 0);
  CHECK(slurp(dir / "b" / "config.txt").find("linkage.scheme=single\n") != std::string::npos);
  put(dir / "bad.cfg", "linkage.sheme=single\n");
  CHECK(run({"cluster", "--config", (dir / "bad.cfg").string()}).code == 1);
}

TEST_CASE("every algorithm runs from the cli") {
  const auto dir = scratch_dir("algorithms");
  REQUIRE(run({"gen", "-o", dir.string(), "--gen.n", "40"}).code == 0);
  const std::string data = (dir / "data.csv").string();
  for (const char* algorithm : {"linkage", "bipartial", "kmeans", "hybrid"}) {
    const auto out = dir / algorithm;
    const auto r = run({"cluster", "-i", data, "-o", out.string(), "--algorithm", algorithm});
    CHECK_MESSAGE(r.code == 0, r.err);
  }
  CHECK(fs::exists(dir / "kmeans" / "kmeans_curve.csv"));
  CHECK(fs::exists(dir / "hybrid" / "atoms.csv"));
  for (const char* objective : {"minmax", "avg_additive", "facility"}) {
    const auto r = run({"cluster", "-i", data, "-o", (dir / objective).string(), "--objective", objective});
    CHECK_MESSAGE(r.code == 0, r.err);
  }
  const auto stop = nlohmann::json::parse(slurp(dir / "facility" / "stop.json"));
  CHECK(stop["rule"] == "no_improving_pair");
}

TEST_CASE("distance matrix input") {
  const auto dir = scratch_dir("matrix");
  put(dir / "m.csv", ",a,b,c,d\na,0,1,5,6\nb,1,0,4,5\nc,5,4,0,1.5\nd,6,5,1.5,0\n");
  const auto r = run({"cluster", "-i", (dir / "m.csv").string(), "--format", "matrix", "-o", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "partition.csv") == "object_id,cluster_label\na,0\nb,0\nc,1\nd,1\n");
  CHECK(run({"cluster", "-i", (dir / "m.csv").string(), "--format", "matrix", "-o", dir.string(), "--algorithm",
             "kmeans"})
            .code == 1);
}

TEST_CASE("same input and config give byte-identical artifacts") {
  const auto dir = scratch_dir("repro");
  REQUIRE(run({"gen", "-o", dir.string()}).code == 0);
  const std::string data = (dir / "data.csv").string();
  for (const char* algorithm : {"hybrid", "kmeans", "bipartial"}) {
    const auto a = dir / (std::string(algorithm) + "_a");
    const auto b = dir / (std::string(algorithm) + "_b");
    REQUIRE(run({"cluster", "-i", data, "-o", a.string(), "--algorithm", algorithm, "--threads", "1"}).code == 0);
    REQUIRE(run({"cluster", "-i", data, "-o", b.string(), "--algorithm", algorithm, "--threads", "4"}).code == 0);
    for (const auto& entry : fs::directory_iterator(a))
      CHECK_MESSAGE(slurp(entry.path()) == slurp(b / entry.path().filename()), entry.path().string());
  }
}

TEST_CASE("sweep table") {
  const auto dir = scratch_dir("sweep");
  REQUIRE(run({"gen", "-o", dir.string()}).code == 0);
  const auto r = run({"sweep", "-i", (dir / "data.csv").string(), "-o", dir.string()});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "sweep.csv"));
  std::string header, row;
  std::getline(csv, header);
  CHECK(header == "p,Q_D^S,Q_D,Q^S,argmin");
  std::string marked;
  while (std::getline(csv, row))
    if (row.back() == '1') marked = row;
  CHECK(marked.rfind("4,", 0) == 0);
  REQUIRE(run({"sweep", "-i", (dir / "data.csv").string(), "-o", dir.string(), "--sweep.p_max", "1"}).code == 0);
  std::istringstream one(slurp(dir / "sweep.csv"));
  std::getline(one, header);
  std::getline(one, row);
  CHECK(row.substr(row.size() - 4) == ",0,1");
  CHECK_FALSE(std::getline(one, row));
}

TEST_CASE("verify accepts an engine run") {
  const auto dir = scratch_dir("verify_ok");
  for (const char* objective : {"additive", "minmax", "avg_additive", "facility"}) {
    const auto r = run({"verify", "-i", fixture("six_points.csv"), "-o", dir.string(), "--objective", objective});
    CHECK_MESSAGE(r.code == 0, (r.out + r.err));
    CHECK(r.out.find("switch point mismatches: 0") != std::string::npos);
  }
  const auto k = run({"verify", "-i", fixture("six_points.csv"), "-o", dir.string(), "--algorithm", "kmeans"});
  CHECK_MESSAGE(k.code == 0, (k.out + k.err));
}

TEST_CASE("verify catches a corrupted threshold") {
  const auto dir = scratch_dir("verify_bad");
  const auto good = run({"verify", "-i", fixture("six_points.csv"), "-o", dir.string(), "--verify.history",
                         fixture("six_points_history.json")});
  CHECK_MESSAGE(good.code == 0, (good.out + good.err));
  const auto r = run({"verify", "-i", fixture("six_points.csv"), "-o", dir.string(), "--verify.history",
                      fixture("six_points_corrupted.json")});
  CHECK(r.code == 2);
  CHECK(r.out.find("switch point mismatch at t=3") != std::string::npos);
  CHECK(fs::exists(dir / "verify.txt"));
}

TEST_CASE("verify refuses large inputs") {
  const auto dir = scratch_dir("verify_big");
  REQUIRE(run({"gen", "-o", dir.string(), "--gen.n", "20"}).code == 0);
  CHECK(run({"verify", "-i", (dir / "data.csv").string(), "-o", dir.string()}).code == 1);
}

TEST_CASE("verify random instances") {
  const auto dir = scratch_dir("verify_random");
  const auto r = run({"verify", "-o", dir.string(), "--verify.random", "5", "--verify.n", "7"});
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("instances 5") != std::string::npos);
  std::istringstream csv(slurp(dir / "verify_gaps.csv"));
  std::string row;
  std::size_t rows = 0;
  while (std::getline(csv, row)) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("oracle subcommand") {
  const auto dir = scratch_dir("oracle");
  put(dir / "four.csv", "0\n1\n10\n11\n");
  const auto r = run({"oracle", "-i", (dir / "four.csv").string(), "-o", dir.string(), "--transform",
                      "max_complement"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "oracle.json"));
  CHECK(doc["labels"] == std::vector<int>{0, 0, 1, 1});
  CHECK(doc["partitions_evaluated"] == 15);
  CHECK(doc["q"] == 30.0);
}

TEST_CASE("gen to standard output") {
  const auto r = run({"gen", "-o", "-", "--gen.n", "8", "--gen.blobs", "2", "--gen.seed", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("id,x0,x1\n", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 9);
  CHECK(run({"gen", "-o", "-", "--gen.n", "8", "--gen.blobs", "2", "--gen.seed", "3"}).out == r.out);
  CHECK(run({"gen", "-o", "-", "--gen.n", "1", "--gen.blobs", "2"}).code == 1);
}
