#include <doctest.h>

#include <random>

#include "bipartial/engine.hpp"
#include "bipartial/linkage.hpp"
#include "bipartial/objectives.hpp"
#include "support.hpp"

using namespace bipartial;
using testing_support::line;

namespace {

DissimilarityStore affine_line(std::vector<double> xs, double factor = 2.0) {
  const auto d = compute_distances(line(std::move(xs)), Metric::euclidean);
  return apply_transform(d, ProximityTransform::affine(factor * d.max_distance()));
}

MergeHistory synthetic_history(const std::vector<double>& r, const std::vector<double>& qs,
                               const std::vector<double>& qd) {
  MergeHistory h;
  h.leaves = r.size() + 1;
  h.profile.orientation = Orientation::maximize;
  std::vector<std::size_t> size(h.leaves, 1);
  // caterpillar tree: each step joins the previous node with the next leaf
  std::size_t current = 0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    MergeRecord rec;
    rec.step = t + 1;
    rec.left = current;
    rec.right = t + 1;
    rec.node = h.leaves + t;
    rec.size = t + 2;
    rec.r = r[t];
    rec.delta_qs = 1.0 - r[t];
    rec.delta_qd = r[t];
    h.records.push_back(rec);
    current = rec.node;
  }
  for (std::size_t t = 0; t < qs.size(); ++t) h.profile.push(qs[t], qd[t]);
  return h;
}

class BrokenObjective final : public BipartialObjective {
 public:
  std::string name() const override { return "broken"; }
  std::size_t atom_count() const override { return 2; }
  Orientation orientation() const override { return Orientation::maximize; }
  double qs_value() const override { return 0.0; }
  double qd_value() const override { return 0.0; }
  Deltas deltas(std::size_t, std::size_t) const override { return {-1.0, 2.0}; }
  void on_merge(std::size_t, std::size_t) override {}
};

}  // namespace

TEST_CASE("merge threshold of a singleton pair") {
  // d = 2, affine c = 8 gives s = 6
  const auto d = compute_distances(line({0, 2}), Metric::euclidean);
  AdditiveObjective additive(apply_transform(d, ProximityTransform::affine(8.0)));
  CHECK(*merge_threshold(additive, 0, 1) == 0.25);
  AdditiveObjective even(apply_transform(d, ProximityTransform::affine(4.0)));
  CHECK(*merge_threshold(even, 0, 1) == 0.5);
}

TEST_CASE("merge threshold of a singleton against a pair") {
  // d_ab = 1, d_ac = 2 with c = 10: cross sums D = 3, S = 17
  const auto d = compute_distances(line({0, 1, 2}), Metric::euclidean);
  const auto store = apply_transform(d, ProximityTransform::affine(10.0));
  AdditiveObjective additive(store, Partition({0, 1, 1}));
  const Deltas deltas = additive.deltas(0, 1);
  CHECK(deltas.qd == 3.0);
  CHECK(deltas.qs == 17.0);
  CHECK(*merge_threshold(additive, 0, 1) == doctest::Approx(0.15));
}

TEST_CASE("two objects give one forced merger") {
  AdditiveObjective additive(affine_line({0, 3}));
  const auto h = run_bipartial(additive);
  REQUIRE(h.records.size() == 1);
  CHECK(h.records[0].r == doctest::Approx(3.0 / (3.0 + 3.0)));
  CHECK(h.profile.qd.back() == 0.0);
}

TEST_CASE("close pairs merge first") {
  const auto store = affine_line({0, 1, 10, 11});
  AdditiveObjective additive(store);
  const auto h = run_bipartial(additive);
  REQUIRE(h.records.size() == 3);
  CHECK(partition_at_step(h, 2).labels() == std::vector<int>{0, 0, 1, 1});
  CHECK(h.records[0].r < h.records[2].r);
  CHECK(h.records[1].r < h.records[2].r);
  // every pair threshold from scratch: d / (d + s) with s = 22 - d
  CHECK(h.records[0].r == doctest::Approx(1.0 / 22.0));
  CHECK(h.profile.qd.front() == doctest::Approx(1 + 10 + 11 + 9 + 10 + 1));
  CHECK(h.profile.qd.back() == 0.0);
}

TEST_CASE("coincident objects are pre-merged at zero") {
  AdditiveObjective additive(affine_line({0, 0, 5, 7}));
  const auto h = run_bipartial(additive);
  CHECK(h.records[0].r == 0.0);
  CHECK(h.records[0].delta_qd == 0.0);
  CHECK(partition_at_step(h, 1).labels() == std::vector<int>{0, 0, 1, 2});
}

TEST_CASE("a negative delta aborts the run") {
  BrokenObjective broken;
  CHECK_THROWS_AS(run_bipartial(broken), ContractViolation);
}

TEST_CASE("stop rule on a monotone sequence") {
  const auto h = synthetic_history({0.1, 0.2, 0.7}, {0, 1, 2, 3}, {3, 2, 1, 0});
  const StopDecision d = select_step(h);
  CHECK(d.rule == StopRule::r_crossing);
  CHECK(d.step == 2);
  CHECK(d.r_sequence_monotone);
  CHECK(select_partition(h).first.cluster_count() == 2);
}

TEST_CASE("stop rule when every threshold is above one half") {
  const auto h = synthetic_history({0.6, 0.7, 0.9}, {0, 1, 2, 3}, {3, 2, 1, 0});
  CHECK(select_step(h).step == 0);
  CHECK(select_partition(h).first.cluster_count() == 4);
}

TEST_CASE("stop rule falls back to the best level") {
  const auto h = synthetic_history({0.1, 0.4, 0.3, 0.6}, {0, 1, 2, 5, 6}, {10, 8, 7, 6, 1});
  const StopDecision d = select_step(h);
  CHECK_FALSE(d.r_sequence_monotone);
  CHECK(d.rule == StopRule::global_argmax_at_half);
  CHECK(d.step == 3);
  CHECK(envelope_report(h).r_inversions == std::vector<std::size_t>{3});
}

TEST_CASE("envelope report on the smallest history") {
  AdditiveObjective additive(affine_line({0, 3}));
  const auto report = envelope_report(run_bipartial(additive));
  CHECK(report.r_inversions.empty());
  CHECK(report.convex());
  CHECK(report.gradient.back() > 0.0);
}

TEST_CASE("compose maps atom partitions to objects") {
  const Partition atoms({0, 1, 1, 2, 0});
  CHECK(compose(atoms, Partition({0, 1, 0})).labels() == std::vector<int>{0, 1, 1, 0, 0});
  CHECK_THROWS_AS(compose(atoms, Partition({0, 1})), InputError);
}

TEST_CASE("property: profile monotone and rebuilt from the deltas") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 60; ++rep) {
    const auto store = apply_transform(testing_support::random_store(10, rng),
                                       rep % 2 ? ProximityTransform::average_preserving()
                                               : ProximityTransform::affine(12.0));
    for (ObjectiveKind kind : {ObjectiveKind::additive, ObjectiveKind::minmax, ObjectiveKind::avg_additive}) {
      auto objective = make_objective({kind, {}}, store, Partition::singletons(10));
      const auto h = run_bipartial(*objective);
      validate_history(h);
      REQUIRE(h.records.size() == 9);
      double qs = h.profile.qs[0], qd = h.profile.qd[0];
      for (std::size_t t = 1; t <= 9; ++t) {
        const auto& rec = h.records[t - 1];
        REQUIRE(rec.r >= 0.0);
        REQUIRE(rec.r <= 1.0);
        REQUIRE(rec.delta_qs >= 0.0);
        REQUIRE(rec.delta_qd >= 0.0);
        REQUIRE(h.profile.qs[t] >= h.profile.qs[t - 1] - 1e-9);
        REQUIRE(h.profile.qd[t] <= h.profile.qd[t - 1] + 1e-9);
        qs += rec.delta_qs;
        qd -= rec.delta_qd;
        REQUIRE(testing_support::close(qs, h.profile.qs[t], 1e-9));
        REQUIRE(testing_support::close(qd, h.profile.qd[t], 1e-9));
        REQUIRE(h.profile.q_half[t] == 0.5 * h.profile.qs[t] + 0.5 * h.profile.qd[t]);
      }
      REQUIRE(h.profile.qd.back() == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("property: additive engine follows average linkage") {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 40; ++rep) {
    const auto d = testing_support::random_store(14, rng);
    AdditiveObjective additive(apply_transform(d, ProximityTransform::affine(2.0 * d.max_distance())));
    const auto bipartial_history = run_bipartial(additive);
    const auto upgma = run_linkage(d, LinkageScheme::upgma);
    for (std::size_t t = 0; t <= 13; ++t)
      REQUIRE(partition_at_step(bipartial_history, t) == partition_at_step(upgma, t));
  }
}

TEST_CASE("property: scaling distances leaves the additive merge order alone") {
  std::mt19937_64 rng(33);
  for (int rep = 0; rep < 30; ++rep) {
    const auto d = testing_support::random_store(9, rng);
    const double lambda = 0.1 + 5.0 * static_cast<double>(rep) / 30.0;
    std::vector<double> scaled = d.distances();
    for (double& v : scaled) v *= lambda;
    const DissimilarityStore ds(9, std::move(scaled));
    AdditiveObjective a(apply_transform(d, ProximityTransform::affine(1.5 * d.max_distance())));
    AdditiveObjective b(apply_transform(ds, ProximityTransform::affine(1.5 * ds.max_distance())));
    const auto ha = run_bipartial(a), hb = run_bipartial(b);
    for (std::size_t t = 0; t <= 8; ++t) REQUIRE(partition_at_step(ha, t) == partition_at_step(hb, t));
  }
}

TEST_CASE("property: crossing rule and best level agree on monotone runs") {
  std::mt19937_64 rng(34);
  std::size_t monotone = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const auto d = testing_support::random_store(9, rng);
    AdditiveObjective additive(apply_transform(d, ProximityTransform::average_preserving()));
    const auto h = run_bipartial(additive);
    if (!r_monotone(h)) continue;
    ++monotone;
    const auto crossing = select_step(h);
    const auto& q = h.profile.q_half;
    const std::size_t best = static_cast<std::size_t>(std::max_element(q.rbegin(), q.rend()) - q.rbegin());
    REQUIRE(q[crossing.step] == doctest::Approx(q[q.size() - 1 - best]));
  }
  CHECK(monotone > 0);
}
