#include <doctest.h>

#include <random>

#include "bipartial/centroid.hpp"
#include "bipartial/kmeans.hpp"
#include "bipartial/synthetic.hpp"
#include "support.hpp"

using namespace bipartial;
using testing_support::line;

namespace {

KMeansOptions options_with(Metric metric, std::size_t restarts = 5, std::uint64_t seed = 3) {
  KMeansOptions o;
  o.metric = metric;
  o.restarts = restarts;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("k-means with as many clusters as objects") {
  const DataTable data = line({3, 1, 4, 1.5, 9, 2.6});
  for (Metric metric : {Metric::squared_euclidean, Metric::manhattan}) {
    const auto model = kmeans_classic(data, 6, options_with(metric));
    CHECK(model.qd == 0.0);
    CHECK(model.assignment == Partition::singletons(6));
  }
}

TEST_CASE("k-means with one cluster") {
  const DataTable data(2, {0, 0, 2, 0, 4, 3, 2, 5});
  const auto sq = kmeans_classic(data, 1, options_with(Metric::squared_euclidean));
  CHECK(sq.centroid(0)[0] == doctest::Approx(2.0));
  CHECK(sq.centroid(0)[1] == doctest::Approx(2.0));
  // 8 + 4 + 5 + 9
  CHECK(sq.qd == doctest::Approx(26.0));
  const auto l1 = kmeans_classic(data, 1, options_with(Metric::manhattan));
  CHECK(l1.centroid(0)[0] == 2.0);
  CHECK(l1.centroid(0)[1] == 1.5);
}

TEST_CASE("k-means on two separated blobs") {
  const auto model = kmeans_classic(line({0, 1, 100, 101}), 2, options_with(Metric::squared_euclidean));
  CHECK(model.assignment.labels() == std::vector<int>{0, 0, 1, 1});
  CHECK(model.centroid(0)[0] == 0.5);
  CHECK(model.centroid(1)[0] == 100.5);
  CHECK(model.qd == 1.0);
}

TEST_CASE("k-means refuses the plain euclidean metric") {
  CHECK_THROWS_AS(kmeans_classic(line({0, 1}), 1, options_with(Metric::euclidean)), ConfigError);
  CHECK_THROWS_AS(kmeans_classic(line({0, 1}), 3, options_with(Metric::manhattan)), ConfigError);
}

TEST_CASE("empty clusters are repaired") {
  // both starting centres sit far right, so the first assignment leaves one empty
  const auto model = kmeans_from(line({0, 1, 2, 50}), {100, 101}, Metric::squared_euclidean);
  CHECK(model.assignment.cluster_count() == 2);
  CHECK(model.qd == doctest::Approx(2.0));
}

TEST_CASE("property: Q_D never rises between iterations") {
  std::mt19937_64 rng(51);
  for (int rep = 0; rep < 40; ++rep) {
    const DataTable data = testing_support::random_table(30, 3, rng);
    for (Metric metric : {Metric::squared_euclidean, Metric::manhattan})
      for (Seeding seeding : {Seeding::random, Seeding::farthest_point}) {
        KMeansOptions o = options_with(metric, 3, static_cast<std::uint64_t>(rep));
        o.seeding = seeding;
        const auto model = kmeans_classic(data, 2 + static_cast<std::size_t>(rep) % 6, o);
        for (std::size_t k = 1; k < model.qd_trace.size(); ++k)
          REQUIRE(model.qd_trace[k] <= model.qd_trace[k - 1] * (1.0 + 1e-12));
        REQUIRE(model.qd == doctest::Approx(model.qd_trace.back()));
        // centroids are the centres of their groups
        const auto blocks = model.assignment.blocks();
        for (std::size_t q = 0; q < blocks.size(); ++q) {
          const auto c = group_center(data, blocks[q], metric);
          for (std::size_t k = 0; k < c.size(); ++k) REQUIRE(c[k] == doctest::Approx(model.centroid(q)[k]));
        }
      }
  }
}

TEST_CASE("restarts give the same result on any thread count") {
  const DataTable data = gaussian_cloud(80, 2, 5);
  KMeansOptions o = options_with(Metric::squared_euclidean, 12, 9);
  const auto one = kmeans_classic(data, 5, o);
  o.threads = 4;
  const auto four = kmeans_classic(data, 5, o);
  CHECK(one.qd == four.qd);
  CHECK(one.assignment == four.assignment);
  CHECK(one.restart == four.restart);
}

TEST_CASE("bipartial k-means objective at the extremes") {
  const DataTable data = gaussian_cloud(12, 2, 2);
  const double offset = kmeans_offset(data, Metric::manhattan, ProximityTransform::average_preserving());
  const auto one = bipartial_kmeans_objective(data, Partition::single_cluster(12), Metric::manhattan, offset);
  CHECK(one.qs == 0.0);
  CHECK(one.total == one.qd);
  const auto all = bipartial_kmeans_objective(data, Partition::singletons(12), Metric::manhattan, offset);
  CHECK(all.qd == 0.0);
  CHECK(all.total == all.qs);
  CHECK(all.qs > 0.0);
}

TEST_CASE("outer similarity by hand") {
  // clusters {0, 2} (median 1) and {10}, manhattan, offset 12: object 0 sees
  // centre 10 at distance 10, object 2 at 8, object 10 sees centre 1 at 9
  const DataTable data = line({0, 2, 10});
  const auto v = bipartial_kmeans_objective(data, Partition({0, 0, 1}), Metric::manhattan, 12.0);
  // s: 2, 4, 3 -> half of 9
  CHECK(v.qs == 4.5);
  CHECK(v.qd == 2.0);
  CHECK(v.total == 6.5);
}

TEST_CASE("singleton thresholds reduce to s over s plus d") {
  std::mt19937_64 rng(52);
  const DataTable data = testing_support::random_table(9, 2, rng);
  for (Metric metric : {Metric::manhattan, Metric::squared_euclidean}) {
    const double offset = kmeans_offset(data, metric, ProximityTransform::average_preserving());
    KMeansObjective objective(data, metric, offset, 0.5, Partition::singletons(9));
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t j = i + 1; j < 9; ++j) {
        const double d = distance(data.row(i), data.row(j), metric);
        const double s = proximity(offset, d);
        const double expected = metric == Metric::manhattan ? s / (s + d) : s / (s + 0.5 * d);
        REQUIRE(objective.merge_threshold(i, j) == doctest::Approx(expected).epsilon(1e-12));
      }
  }
}

TEST_CASE("closer pair has the larger threshold") {
  const DataTable data = line({0, 2, 10});
  const double offset = kmeans_offset(data, Metric::manhattan, ProximityTransform::average_preserving());
  KMeansObjective objective(data, Metric::manhattan, offset, 0.5, Partition::singletons(3));
  CHECK(objective.merge_threshold(0, 1) > objective.merge_threshold(1, 2));
}

TEST_CASE("two objects merge at s over s plus d") {
  const DataTable data = line({1, 4});
  KMeansMergeOptions mo;
  const auto h = run_bipartial_kmeans(data, mo);
  REQUIRE(h.records.size() == 1);
  // offset = 2 * mean distance = 6
  CHECK(h.records[0].r == doctest::Approx(3.0 / 6.0));
  CHECK(h.r_scale == RScale::descending);
}

TEST_CASE("tight pairs merge inside first and invert later") {
  KMeansMergeOptions mo;
  const auto h = run_bipartial_kmeans(tight_pairs(), mo);
  validate_history(h);
  for (std::size_t t = 0; t < 4; ++t) CHECK(h.records[t].size == 2);
  CHECK_FALSE(envelope_report(h).r_inversions.empty());
}

TEST_CASE("property: k-means merger deltas match from-scratch costs") {
  std::mt19937_64 rng(53);
  for (int rep = 0; rep < 20; ++rep) {
    const DataTable data = testing_support::random_table(10, 2, rng);
    const Metric metric = rep % 2 ? Metric::manhattan : Metric::squared_euclidean;
    const double offset = kmeans_offset(data, metric, ProximityTransform::average_preserving());
    KMeansMergeOptions mo{metric, ProximityTransform::average_preserving(), 0.5};
    const auto h = run_bipartial_kmeans(data, mo);
    for (std::size_t t = 0; t <= h.records.size(); ++t) {
      const auto v = bipartial_kmeans_objective(data, partition_at_step(h, t), metric, offset);
      REQUIRE(testing_support::close(v.qd, h.profile.qd[t]));
      REQUIRE(testing_support::close(v.qs, h.profile.qs[t]));
    }
    for (const auto& rec : h.records) {
      REQUIRE(rec.delta_qs >= 0.0);
      REQUIRE(rec.delta_qd >= 0.0);
      REQUIRE(rec.r >= 0.0);
      REQUIRE(rec.r <= 1.0);
      REQUIRE(h.profile.qd[rec.step] >= h.profile.qd[rec.step - 1] - 1e-9);
      REQUIRE(testing_support::close(h.profile.qd[rec.step] - h.profile.qd[rec.step - 1], rec.delta_qd));
    }
  }
}

TEST_CASE("hybrid with every object its own atom is the plain merger") {
  const DataTable data = gaussian_cloud(15, 2, 4);
  HybridOptions h;
  h.first_stage_p = 15;
  const auto hybrid = hybrid_two_stage(data, h);
  const auto plain = run_bipartial_kmeans(data, h.merge);
  CHECK(hybrid.history.records == plain.records);
  CHECK(hybrid.atoms == Partition::singletons(15));
}

TEST_CASE("hybrid with a single first-stage cluster") {
  const DataTable data = gaussian_cloud(10, 2, 4);
  HybridOptions h;
  h.first_stage_p = 1;
  const auto hybrid = hybrid_two_stage(data, h);
  CHECK(hybrid.history.records.empty());
  CHECK(hybrid.partition == Partition::single_cluster(10));
}

TEST_CASE("hybrid default first stage") {
  CHECK(default_first_stage_p(400) == 20);
  CHECK(default_first_stage_p(60) == 8);
  const auto result = hybrid_two_stage(gaussian_cloud(30, 2, 8), HybridOptions{});
  CHECK(result.atoms.cluster_count() == 6);
  CHECK(result.history.records.size() == 5);
  CHECK(result.curve.size() == 6);
  CHECK(result.curve.front().p == 6);
  CHECK(result.curve.back().p == 1);
}

TEST_CASE("hybrid second stage with a pairwise objective") {
  const DataTable data = nested_blobs({});
  HybridOptions h;
  h.stage = HybridStage::additive;
  h.first_stage_p = 12;
  const auto result = hybrid_two_stage(data, h);
  CHECK(result.history.records.size() == 11);
  CHECK(result.partition.size() == 60);
}

TEST_CASE("sweep on the nested blobs") {
  KMeansOptions o;
  o.restarts = 20;
  const auto rows = kmeans_sweep(nested_blobs({}), 1, 10, o, ProximityTransform::average_preserving());
  REQUIRE(rows.size() == 10);
  CHECK(rows[0].values.qs == 0.0);
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].values.qd < rows[k - 1].values.qd);
  CHECK(rows[sweep_argmin(rows)].p == 4);
  const auto single = kmeans_sweep(nested_blobs({}), 1, 1, o, ProximityTransform::average_preserving());
  CHECK(single.size() == 1);
  CHECK(single[0].values.qs == 0.0);
}
