#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "streamann/error.hpp"
#include "streamann/kmeans.hpp"
#include "streamann/runbook.hpp"

namespace streamann {
namespace {

// Active set after replaying steps [0, upto).
std::set<VectorId> replay(const Runbook& rb, std::size_t upto) {
  std::set<VectorId> live;
  for (std::size_t s = 0; s < upto; ++s) {
    for (VectorId id : rb.steps[s].inserts) live.insert(id);
    for (VectorId id : rb.steps[s].deletes) live.erase(id);
  }
  return live;
}

TEST(SlidingWindow, OnePointPerStep) {
  const Runbook rb = gen_sliding_window(200, 200, 1);
  ASSERT_EQ(rb.steps.size(), 200u);
  for (std::size_t t = 1; t <= 200; ++t) {
    EXPECT_EQ(rb.steps[t - 1].inserts.size(), 1u);
    EXPECT_EQ(rb.steps[t - 1].checkpoint, t > 100);
    if (t > 100) EXPECT_EQ(replay(rb, t).size(), 100u) << t;
  }
  EXPECT_TRUE(validate(rb).empty());
}

TEST(SlidingWindow, DeletesBatchFromHalfWindowEarlier) {
  const Runbook rb = gen_sliding_window(1000, 10, 2);
  for (std::size_t t = 6; t <= 10; ++t) {
    auto del = rb.steps[t - 1].deletes;
    auto ins = rb.steps[t - 6].inserts;
    std::sort(del.begin(), del.end());
    std::sort(ins.begin(), ins.end());
    EXPECT_EQ(del, ins);
  }
  std::set<VectorId> tail;
  for (std::size_t t = 6; t <= 10; ++t) {
    tail.insert(rb.steps[t - 1].inserts.begin(), rb.steps[t - 1].inserts.end());
  }
  EXPECT_EQ(replay(rb, 10), tail);
}

TEST(SlidingWindow, EachIdOnceAndSteadyState) {
  const std::size_t n = 1003, t_max = 20;
  const Runbook rb = gen_sliding_window(n, t_max, 3);
  std::vector<int> inserted(n, 0), deleted(n, 0);
  for (const auto& s : rb.steps) {
    for (VectorId id : s.inserts) ++inserted[id];
    for (VectorId id : s.deletes) ++deleted[id];
  }
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(inserted[i], 1);
  std::size_t deleted_total = std::accumulate(deleted.begin(), deleted.end(), std::size_t{0});
  std::size_t first_half = 0;
  for (std::size_t t = 0; t < t_max / 2; ++t) first_half += rb.steps[t].inserts.size();
  EXPECT_EQ(deleted_total, first_half);
  const double part = std::ceil(static_cast<double>(n) / t_max);
  for (std::size_t t = t_max / 2 + 1; t <= t_max; ++t) {
    EXPECT_LE(std::abs(static_cast<double>(replay(rb, t).size()) - n / 2.0), part);
  }
}

TEST(SlidingWindow, Errors) {
  EXPECT_THROW(gen_sliding_window(100, 11, 1), Error);
  EXPECT_THROW(gen_sliding_window(5, 10, 1), Error);
}

TEST(ExpirationTime, UnitLifespanDeletedNextStep) {
  const std::size_t n = 1300, t_max = 10;
  const ExpirationSchedule s = expiration_schedule(n, t_max, 4);
  const Runbook rb = gen_expiration_time(n, t_max, 4);
  std::set<VectorId> step4(rb.steps[3].deletes.begin(), rb.steps[3].deletes.end());
  std::size_t checked = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (s.insert_step[i] == 3 && s.lifespan[i] == 1) {
      EXPECT_TRUE(step4.count(s.order[i])) << s.order[i];
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
  for (const auto& step : rb.steps) {
    EXPECT_TRUE(step.checkpoint);
    EXPECT_EQ(step.inserts.size(), 130u);
  }
}

TEST(ExpirationTime, DeletesAreExactlyTheExpiredPoints) {
  const std::size_t n = 5000, t_max = 40;
  const ExpirationSchedule s = expiration_schedule(n, t_max, 5);
  const Runbook rb = gen_expiration_time(n, t_max, 5);
  EXPECT_TRUE(validate(rb).empty());
  std::map<VectorId, std::size_t> delete_step;
  for (std::size_t t = 0; t < rb.steps.size(); ++t) {
    for (VectorId id : rb.steps[t].deletes) {
      EXPECT_TRUE(delete_step.emplace(id, t + 1).second) << "deleted twice: " << id;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t expiry = s.insert_step[i] + s.lifespan[i];
    const auto it = delete_step.find(s.order[i]);
    if (expiry <= t_max) {
      ASSERT_NE(it, delete_step.end());
      EXPECT_EQ(it->second, expiry);
    } else {
      EXPECT_EQ(it, delete_step.end());
    }
  }
}

TEST(ExpirationTime, ClassFrequenciesWithinThreeSigma) {
  const std::size_t n = 20000, t_max = 100;
  const ExpirationSchedule s = expiration_schedule(n, t_max, 6);
  std::map<std::size_t, double> counts;
  for (auto l : s.lifespan) counts[l] += 1;
  const std::pair<std::size_t, double> classes[] = {{100, 1.0 / 13}, {50, 2.0 / 13}, {10, 10.0 / 13}};
  for (const auto& [life, p] : classes) {
    const double mu = n * p, sigma = std::sqrt(n * p * (1 - p));
    EXPECT_LE(std::abs(counts[life] - mu), 3 * sigma) << life;
  }
  EXPECT_EQ(counts.size(), 3u);
}

TEST(ExpirationTime, Errors) {
  EXPECT_THROW(gen_expiration_time(1000, 15, 1), Error);
  EXPECT_THROW(gen_expiration_time(5, 10, 1), Error);
}

TEST(Clustered, StepCountAndValidity) {
  const Dataset d = generate_synthetic(3000, 8, 6, 7);
  const ClusteredOptions opt{6, 3, 20, std::nullopt};
  const Runbook rb = gen_clustered(d, opt, 8);
  EXPECT_EQ(rb.steps.size(), 3u * 6u * 2u);
  EXPECT_TRUE(validate(rb).empty());
  for (const auto& s : rb.steps) {
    EXPECT_TRUE(s.checkpoint);
    EXPECT_TRUE(s.inserts.empty() || s.deletes.empty());
  }
}

TEST(Clustered, DeleteStepsStayInOneCluster) {
  const Dataset d = generate_synthetic(3000, 8, 6, 9);
  const ClusteredOptions opt{6, 2, 20, std::nullopt};
  const Runbook rb = gen_clustered(d, opt, 10);
  const KMeansModel m = kmeans(d, 6, 20, 10);
  for (std::size_t round = 0; round < 2; ++round) {
    for (std::size_t c = 0; c < 6; ++c) {
      for (const auto* s : {&rb.steps[round * 12 + c], &rb.steps[round * 12 + 6 + c]}) {
        for (VectorId id : s->inserts) EXPECT_EQ(m.assignment[id], c);
        for (VectorId id : s->deletes) EXPECT_EQ(m.assignment[id], c);
      }
    }
  }
}

TEST(Clustered, DegenerateSingleCluster) {
  const Dataset d = generate_synthetic(50, 4, 1, 11);
  const ClusteredOptions opt{1, 1, 10, 1.0};
  const Runbook rb = gen_clustered(d, opt, 12);
  ASSERT_EQ(rb.steps.size(), 2u);
  EXPECT_EQ(rb.steps[0].inserts.size(), 50u);
  EXPECT_TRUE(rb.steps[0].deletes.empty());
  EXPECT_EQ(rb.steps[1].deletes.size(), 50u);
  EXPECT_TRUE(replay(rb, 2).empty());
}

TEST(Generators, Deterministic) {
  EXPECT_EQ(gen_sliding_window(500, 10, 1), gen_sliding_window(500, 10, 1));
  EXPECT_NE(gen_sliding_window(500, 10, 1), gen_sliding_window(500, 10, 2));
  EXPECT_EQ(gen_expiration_time(500, 10, 1), gen_expiration_time(500, 10, 1));
  const Dataset d = generate_synthetic(500, 4, 4, 1);
  EXPECT_EQ(gen_clustered(d, {4, 2, 10, std::nullopt}, 3), gen_clustered(d, {4, 2, 10, std::nullopt}, 3));
}

TEST(Validate, ReportsViolations) {
  Runbook rb;
  rb.count = 10;
  rb.steps = {Step{{1, 2}, {}, false}, Step{{}, {3}, false}, Step{{2}, {}, false},
              Step{{12}, {}, false}, Step{{4}, {4}, false}};
  const auto report = validate(rb);
  const std::vector<Violation> expected{
      {2, 3, ViolationKind::kDeleteInactive},
      {3, 2, ViolationKind::kDoubleInsert},
      {4, 12, ViolationKind::kOutOfRange},
      {5, 4, ViolationKind::kInsertDeleteOverlap},
  };
  EXPECT_EQ(report, expected);
  EXPECT_EQ(validate(rb, 20).size(), 3u);
}

TEST(Validate, DeleteBeforeInsertIsOneViolation) {
  Runbook rb;
  rb.count = 5;
  rb.steps = {Step{{}, {0}, true}, Step{{0}, {}, true}};
  const auto report = validate(rb);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].step, 1u);
  EXPECT_EQ(report[0].kind, ViolationKind::kDeleteInactive);
}

TEST(Format, RoundTripIsByteIdentical) {
  const Dataset d = generate_synthetic(400, 4, 4, 13);
  for (const Runbook& rb : {gen_sliding_window(400, 10, 1), gen_expiration_time(400, 20, 2),
                            gen_clustered(d, {4, 2, 10, std::nullopt}, 3), Runbook{}}) {
    const std::string text = serialize(rb);
    const Runbook back = parse_runbook(text);
    EXPECT_EQ(back, rb);
    EXPECT_EQ(serialize(back), text);
  }
}

TEST(Format, Layout) {
  Runbook rb;
  rb.dataset_name = "toy";
  rb.count = 4;
  rb.dim = 2;
  rb.t_max = 2;
  rb.seed = 9;
  rb.generator = "custom";
  rb.steps = {Step{{0, 1}, {}, false}, Step{{2}, {0}, true}};
  EXPECT_EQ(serialize(rb), "runbook toy 4 2 2 9 custom\n1 I 0 1 D C 0\n2 I 2 D 0 C 1\n");
}

TEST(Format, RejectsMalformed) {
  EXPECT_THROW(parse_runbook(""), Error);
  EXPECT_THROW(parse_runbook("runbook toy 4 2 2 9 custom\n1 I 0 D C 2\n"), Error);
  EXPECT_THROW(parse_runbook("runbook toy 4 2 2 9 custom\n1 I x D C 0\n"), Error);
  EXPECT_THROW(parse_runbook("runbook toy 4 2 2 9 custom\n2 I 0 D C 0\n"), Error);
  EXPECT_THROW(parse_runbook("runbook toy four 2 2 9 custom\n"), Error);
}

TEST(Format, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "streamann_runbook.txt";
  const Runbook rb = gen_expiration_time(300, 10, 4);
  save_runbook(rb, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), serialize(rb));
  EXPECT_EQ(load_runbook(path), rb);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace streamann
