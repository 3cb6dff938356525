#include <gtest/gtest.h>

#include <memory>
#include <numeric>
#include <random>
#include <set>

#include "reference.hpp"
#include "streamann/error.hpp"
#include "streamann/oracle.hpp"
#include "streamann/runbook.hpp"
#include "streamann/updates.hpp"

namespace streamann {
namespace {

using testing::adjacency;
using testing::line;

std::unique_ptr<StreamingIndex> make_index(const Dataset& d, DeleteRegime regime, std::size_t n,
                                           BuildParams build = {8, 16, 1.2f},
                                           DeleteParams del = {16, 10, 3, 1.2f}) {
  auto idx = std::make_unique<StreamingIndex>(d, build, regime, del, ConsolidationPolicy{}, 3);
  for (VectorId i = 0; i < n; ++i) idx->insert(i);
  return idx;
}

std::vector<VectorId> random_subset(std::size_t n, std::size_t k, std::uint64_t seed,
                                    std::optional<VectorId> exclude = std::nullopt) {
  std::vector<VectorId> all;
  for (VectorId i = 0; i < n; ++i) {
    if (i != exclude) all.push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(k);
  return all;
}

double mean_recall(const Graph& g, const Dataset& d, const Dataset& queries, std::size_t beam) {
  const auto truth = brute_force_knn(d, testing::active_ids(g), queries, 10);
  double sum = 0;
  for (VectorId q = 0; q < queries.count(); ++q) {
    sum += recall_at_k(g.search(queries.row(q), 10, beam).answers, truth.rows[q], 10);
  }
  return sum / static_cast<double>(queries.count());
}

TEST(LazyDelete, RemainingNodesOnly) {
  const Dataset d = line({0.0f, 1.0f, 2.0f});
  auto idx_owner = make_index(d, DeleteRegime::kBaseline, 3);
  StreamingIndex& idx = *idx_owner;
  idx.lazy_delete(1);
  const std::vector<float> q{1.0f};
  const auto r = idx.graph().search(q, 2, 3);
  std::set<VectorId> got;
  for (const auto& a : r.answers) got.insert(a.id);
  EXPECT_EQ(got, (std::set<VectorId>{0, 2}));
  EXPECT_EQ(idx.graph().state(1), NodeState::kTombstoned);
}

TEST(LazyDelete, DeletedVectorIsNotReturned) {
  const Dataset d = generate_synthetic(300, 8, 4, 3);
  auto idx_owner = make_index(d, DeleteRegime::kBaseline, 300);
  StreamingIndex& idx = *idx_owner;
  idx.lazy_delete(42);
  const auto r = idx.graph().search(d.row(42), 1, 16);
  ASSERT_EQ(r.answers.size(), 1u);
  EXPECT_NE(r.answers[0].id, 42u);
  const auto truth = testing::sort_all_knn(d, testing::active_ids(idx.graph()), d.row(42), 1);
  EXPECT_EQ(r.answers[0].id, truth[0].id);
}

TEST(LazyDelete, TwentyPercentLeavesAdjacencyUntouched) {
  const Dataset d = generate_synthetic(1000, 8, 4, 4);
  auto idx_owner = make_index(d, DeleteRegime::kBaseline, 1000);
  StreamingIndex& idx = *idx_owner;
  const auto before = adjacency(idx.graph());
  for (VectorId id : random_subset(1000, 200, 5)) idx.lazy_delete(id);
  EXPECT_EQ(idx.tombstones().size(), 200u);
  EXPECT_EQ(idx.graph().tombstoned_count(), 200u);
  EXPECT_EQ(idx.graph().active_count(), 800u);
  EXPECT_EQ(adjacency(idx.graph()), before);
}

TEST(LazyDelete, Errors) {
  const Dataset d = line({0.0f, 1.0f, 2.0f});
  auto idx_owner = make_index(d, DeleteRegime::kBaseline, 2);
  StreamingIndex& idx = *idx_owner;
  idx.lazy_delete(1);
  for (VectorId bad : {VectorId{1}, VectorId{2}, VectorId{9}}) {
    try {
      idx.lazy_delete(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    }
  }
}

TEST(Regimes, MixingIsRejected) {
  const Dataset d = line({0.0f, 1.0f, 2.0f});
  auto base_owner = make_index(d, DeleteRegime::kBaseline, 3);
  StreamingIndex& base = *base_owner;
  auto inplace_owner = make_index(d, DeleteRegime::kInPlace, 3);
  StreamingIndex& inplace = *inplace_owner;
  EXPECT_THROW(base.inplace_delete(1), Error);
  EXPECT_THROW(base.consolidate_light(), Error);
  EXPECT_THROW(inplace.lazy_delete(1), Error);
  EXPECT_THROW(inplace.consolidate_baseline(), Error);
  EXPECT_EQ(base.graph().active_count(), 3u);
  EXPECT_EQ(inplace.graph().active_count(), 3u);
}

TEST(ConsolidateBaseline, EmptyTombstoneSetIsNoOp) {
  const Dataset d = generate_synthetic(200, 8, 4, 6);
  auto idx_owner = make_index(d, DeleteRegime::kBaseline, 200);
  StreamingIndex& idx = *idx_owner;
  const auto before = adjacency(idx.graph());
  const auto dists = idx.graph().counter().total();
  idx.consolidate_baseline();
  EXPECT_EQ(adjacency(idx.graph()), before);
  EXPECT_EQ(idx.graph().counter().total(), dists);
}

TEST(ConsolidateBaseline, SplicesPath) {
  const Dataset d = line({0.0f, 1.0f, 2.0f});
  StreamingIndex idx(d, {4, 4, 1.2f}, DeleteRegime::kBaseline);
  Graph& g = idx.graph();
  for (VectorId i = 0; i < 3; ++i) g.set_state(i, NodeState::kActive);
  g.set_neighbors(0, {1});
  g.set_neighbors(1, {2});
  g.set_start(0);
  idx.lazy_delete(1);
  idx.consolidate_baseline();
  EXPECT_EQ(g.neighbors(0), (std::vector<VectorId>{2}));
  EXPECT_EQ(g.state(1), NodeState::kAbsent);
  EXPECT_TRUE(idx.tombstones().empty());
}

TEST(ConsolidateBaseline, AuditAfterTwoHundredDeletes) {
  const Dataset d = generate_synthetic(1000, 8, 4, 7);
  auto idx_owner = make_index(d, DeleteRegime::kBaseline, 1000);
  StreamingIndex& idx = *idx_owner;
  const auto gone = random_subset(1000, 200, 8);
  for (VectorId id : gone) idx.lazy_delete(id);
  idx.consolidate_baseline();
  const Graph& g = idx.graph();
  EXPECT_EQ(g.dangling_edge_count(), 0u);
  EXPECT_LE(g.max_degree(), 8u);
  EXPECT_EQ(g.active_count(), 800u);
  EXPECT_EQ(g.tombstoned_count(), 0u);
  for (VectorId id : gone) EXPECT_TRUE(g.neighbors(id).empty());
}

TEST(ConsolidateBaseline, MatchesReferenceOnSmallGraphs) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = generate_synthetic(120, 4, 3, 100 + seed);
    auto idx_owner = make_index(d, DeleteRegime::kBaseline, 120, {6, 12, 1.2f});
    StreamingIndex& idx = *idx_owner;
    for (VectorId id : random_subset(120, 30, seed)) idx.lazy_delete(id);
    const auto expected = testing::reference_consolidate(
        d, adjacency(idx.graph()), testing::states(idx.graph()), 6, 1.2);
    idx.consolidate_baseline();
    EXPECT_EQ(adjacency(idx.graph()), expected) << "seed " << seed;
  }
}

TEST(ConsolidateBaseline, DeletedStartIsReplaced) {
  const Dataset d = generate_synthetic(200, 8, 4, 9);
  auto idx_owner = make_index(d, DeleteRegime::kBaseline, 200);
  StreamingIndex& idx = *idx_owner;
  const VectorId start = *idx.graph().start();
  idx.lazy_delete(start);
  EXPECT_EQ(idx.graph().start(), start);
  idx.consolidate_baseline();
  ASSERT_TRUE(idx.graph().start());
  EXPECT_TRUE(idx.graph().is_active(*idx.graph().start()));
  EXPECT_EQ(testing::reachable(idx.graph()).size(), 199u);
}

TEST(InPlaceDelete, TwoNodeGraph) {
  const Dataset d = line({0.0f, 1.0f});
  auto idx_owner = make_index(d, DeleteRegime::kInPlace, 2, {4, 4, 1.2f}, {4, 2, 3, 1.2f});
  StreamingIndex& idx = *idx_owner;
  idx.inplace_delete(1);
  const Graph& g = idx.graph();
  EXPECT_EQ(g.node_count(), 1u);
  EXPECT_TRUE(g.neighbors(0).empty());
  EXPECT_EQ(g.state(1), NodeState::kAbsent);
}

TEST(InPlaceDelete, Errors) {
  const Dataset d = line({0.0f, 1.0f, 2.0f});
  auto idx_owner = make_index(d, DeleteRegime::kInPlace, 2, {4, 4, 1.2f}, {4, 2, 3, 1.2f});
  StreamingIndex& idx = *idx_owner;
  idx.inplace_delete(1);
  for (VectorId bad : {VectorId{1}, VectorId{2}, VectorId{7}}) {
    try {
      idx.inplace_delete(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    }
  }
}

TEST(InPlaceDelete, EdgeBudgetAndDegreeBound) {
  const Dataset d = generate_synthetic(1500, 8, 4, 10);
  const DeleteParams del{32, 20, 3, 1.2f};
  auto idx_owner = make_index(d, DeleteRegime::kInPlace, 1500, {12, 24, 1.2f}, del);
  StreamingIndex& idx = *idx_owner;
  for (VectorId id : random_subset(1500, 300, 11, idx.graph().start())) {
    const auto out = idx.graph().neighbors(id).size();
    const DeleteStats s = idx.inplace_delete(id);
    EXPECT_EQ(s.out_neighbors, out);
    EXPECT_LE(s.edges_added, del.edge_copies * (s.in_neighbors + s.out_neighbors));
    EXPECT_LE(idx.graph().max_degree(), 12u);
  }
}

TEST(InPlaceDelete, RecallCloseToRebuild) {
  const Dataset d = generate_synthetic(2000, 16, 8, 12);
  const BuildParams build{16, 32, 1.2f};
  auto idx_owner = make_index(d, DeleteRegime::kInPlace, 2000, build, {32, 20, 3, 1.2f});
  StreamingIndex& idx = *idx_owner;
  for (VectorId id : random_subset(2000, 400, 13)) idx.inplace_delete(id);
  idx.consolidate_light();
  const Dataset queries = testing::mixture_queries(100, 16, 8, 12);
  const auto survivors = testing::active_ids(idx.graph());
  ASSERT_EQ(survivors.size(), 1600u);
  const Graph fresh = rebuild_from_scratch(d, survivors, build, 15);
  const double streamed = mean_recall(idx.graph(), d, queries, 32);
  const double rebuilt = mean_recall(fresh, d, queries, 32);
  EXPECT_NEAR(streamed, rebuilt, 0.02) << streamed << " vs " << rebuilt;
}

TEST(ConsolidateLight, EmptyRemovedIsNoOp) {
  const Dataset d = generate_synthetic(200, 8, 4, 16);
  auto idx_owner = make_index(d, DeleteRegime::kInPlace, 200);
  StreamingIndex& idx = *idx_owner;
  const auto before = adjacency(idx.graph());
  const auto dists = idx.graph().counter().total();
  idx.consolidate_light();
  EXPECT_EQ(adjacency(idx.graph()), before);
  EXPECT_EQ(idx.graph().counter().total(), dists);
}

TEST(ConsolidateLight, StripsDanglingEdgesWithoutDistances) {
  const Dataset d = generate_synthetic(1000, 8, 4, 17);
  auto idx_owner = make_index(d, DeleteRegime::kInPlace, 1000);
  StreamingIndex& idx = *idx_owner;
  for (std::uint64_t round = 0; round < 3; ++round) {
    for (VectorId id : random_subset(1000, 1000, 18 + round)) {
      if (idx.graph().is_active(id) && idx.pending_removals().size() < 100) idx.inplace_delete(id);
    }
    EXPECT_GT(idx.graph().dangling_edge_count(), 0u);
    const auto dists = idx.graph().counter().total();
    idx.consolidate_light();
    EXPECT_EQ(idx.graph().counter().total(), dists);
    EXPECT_EQ(idx.graph().dangling_edge_count(), 0u);
    EXPECT_TRUE(idx.pending_removals().empty());
    EXPECT_LE(idx.graph().max_degree(), 8u);
  }
}

TEST(ConsolidateLight, PinnedStartHandOff) {
  const Dataset d = generate_synthetic(300, 8, 4, 19);
  auto idx_owner = make_index(d, DeleteRegime::kInPlace, 300);
  StreamingIndex& idx = *idx_owner;
  const VectorId start = *idx.graph().start();
  idx.inplace_delete(start);
  EXPECT_EQ(idx.graph().start(), start);
  EXPECT_EQ(idx.graph().state(start), NodeState::kTombstoned);
  EXPECT_EQ(idx.graph().active_count(), 299u);
  const auto r = idx.graph().search(d.row(start), 5, 16);
  for (const auto& a : r.answers) EXPECT_NE(a.id, start);
  const auto dists = idx.graph().counter().total();
  idx.consolidate_light();
  EXPECT_EQ(idx.graph().counter().total(), dists);
  ASSERT_TRUE(idx.graph().start());
  EXPECT_NE(*idx.graph().start(), start);
  EXPECT_TRUE(idx.graph().is_active(*idx.graph().start()));
  EXPECT_EQ(idx.graph().state(start), NodeState::kAbsent);
  EXPECT_EQ(idx.graph().dangling_edge_count(), 0u);
}

TEST(ConsolidateLight, ReinsertBeforeSweepSurvives) {
  const Dataset d = generate_synthetic(300, 8, 4, 20);
  auto idx_owner = make_index(d, DeleteRegime::kInPlace, 300);
  StreamingIndex& idx = *idx_owner;
  const VectorId id = *idx.graph().start() == 7 ? 8 : 7;
  idx.inplace_delete(id);
  idx.insert(id);
  idx.consolidate_light();
  EXPECT_TRUE(idx.graph().is_active(id));
  EXPECT_FALSE(idx.graph().neighbors(id).empty());
  EXPECT_EQ(idx.graph().dangling_edge_count(), 0u);
}

TEST(MaybeConsolidate, ThresholdBoundary) {
  const Dataset d = generate_synthetic(100, 8, 4, 21);
  auto idx_owner = make_index(d, DeleteRegime::kBaseline, 100);
  StreamingIndex& idx = *idx_owner;
  const auto ids = random_subset(100, 20, 22);
  for (std::size_t i = 0; i < 19; ++i) idx.lazy_delete(ids[i]);
  EXPECT_EQ(idx.graph().node_count(), 100u);
  EXPECT_FALSE(idx.maybe_consolidate());
  idx.lazy_delete(ids[19]);
  EXPECT_TRUE(idx.maybe_consolidate());
  EXPECT_EQ(idx.graph().node_count(), 80u);
  EXPECT_EQ(idx.deletions_since_consolidation(), 0u);
  EXPECT_FALSE(idx.maybe_consolidate());
}

class SlidingWindowFiring : public ::testing::TestWithParam<DeleteRegime> {};

TEST_P(SlidingWindowFiring, CountMatchesSchedule) {
  const std::size_t n = 2000;
  const Dataset d = generate_synthetic(n, 8, 4, 23);
  const Runbook rb = gen_sliding_window(n, 200, 24);
  StreamingIndex idx(d, {8, 16, 1.2f}, GetParam(), {16, 10, 3, 1.2f}, {0.2}, 25);
  std::size_t total_deletes = 0;
  for (const Step& s : rb.steps) {
    for (VectorId id : s.inserts) idx.insert(id);
    for (VectorId id : s.deletes) idx.remove(id);
    total_deletes += s.deletes.size();
    idx.maybe_consolidate();
  }
  const auto expected = static_cast<long>(total_deletes / (0.2 * (n / 2)));
  EXPECT_NEAR(static_cast<long>(idx.consolidation_count()), expected, 1);
}

INSTANTIATE_TEST_SUITE_P(Regimes, SlidingWindowFiring,
                         ::testing::Values(DeleteRegime::kBaseline, DeleteRegime::kInPlace),
                         [](const auto& info) {
                           return info.param == DeleteRegime::kBaseline ? "Baseline" : "InPlace";
                         });

TEST(Params, Validation) {
  EXPECT_THROW((DeleteParams{8, 9, 3, 1.2f}.validate()), Error);
  EXPECT_THROW((DeleteParams{8, 4, 0, 1.2f}.validate()), Error);
  EXPECT_THROW((DeleteParams{8, 4, 3, 0.9f}.validate()), Error);
  EXPECT_THROW(ConsolidationPolicy{0.0}.validate(), Error);
  EXPECT_THROW(ConsolidationPolicy{1.5}.validate(), Error);
  EXPECT_NO_THROW(ConsolidationPolicy{1.0}.validate());
  EXPECT_THROW((BuildParams{1, 4, 1.2f}.validate()), Error);
}

}  // namespace
}  // namespace streamann
