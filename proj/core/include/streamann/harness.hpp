#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streamann/dataset.hpp"
#include "streamann/graph.hpp"
#include "streamann/runbook.hpp"
#include "streamann/updates.hpp"

namespace streamann {

enum class Regime : std::uint8_t { kInPlace, kBaseline, kStaticRebuild };

std::string_view to_string(Regime regime) noexcept;
Regime parse_regime(std::string_view name);

struct RunConfig {
  Regime regime = Regime::kInPlace;
  BuildParams build;
  DeleteParams del;
  ConsolidationPolicy policy;
  std::size_t threads = 1;
  std::size_t recall_k = 10;
  /// Query beam; defaults to build.beam_width.
  std::optional<std::uint32_t> search_beam;
  /// Measure every n-th checkpoint (1 = all of them).
  std::size_t checkpoint_stride = 1;
  std::uint64_t seed = 0;
  /// When false, wall-clock columns are reported as zero so traces are
  /// byte-reproducible.
  bool record_timings = true;
  /// After every step, check the degree bound and, after a consolidation,
  /// the absence of edges into removed nodes. Throws Error(kValidation) on a
  /// violation.
  bool audit = false;

  void validate() const;
};

struct StepMetrics {
  std::size_t step = 0;  // 1-based
  std::size_t active = 0;
  std::size_t inserts = 0;
  std::size_t deletes = 0;
  bool measured = false;
  bool consolidated = false;
  double recall = 0.0;
  double dist_per_query = 0.0;
  double qps = 0.0;
  double insert_s = 0.0;
  double delete_s = 0.0;
  double consolidate_s = 0.0;
  double search_s = 0.0;
  std::uint64_t insert_distances = 0;
  std::uint64_t delete_distances = 0;
  std::uint64_t consolidate_distances = 0;
  std::uint64_t query_distances = 0;
  std::uint64_t cumulative_distances = 0;
};

struct RunSummary {
  double delete_s = 0.0;  // deletions plus consolidation
  double insert_s = 0.0;
  double search_s = 0.0;
  double mean_recall = 0.0;
  std::size_t insert_ops = 0;
  std::size_t delete_ops = 0;
  std::size_t consolidations = 0;
  std::size_t lazy_deletes = 0;
  std::size_t inplace_deletes = 0;
  std::size_t rebuilds = 0;
  std::size_t measured_steps = 0;
  std::uint64_t update_distances = 0;
  std::uint64_t consolidate_distances = 0;
  std::uint64_t query_distances = 0;
};

struct RunResult {
  std::vector<StepMetrics> steps;  // one entry per runbook step
  RunSummary summary;
};

/// Replays `runbook` against an index configured by `config`, measuring
/// recall@k against brute-force ground truth at checkpoints. Ground-truth
/// computation is excluded from all timings. Throws Error(kValidation) if the
/// runbook does not validate against `dataset`.
RunResult run(const Runbook& runbook, const Dataset& dataset, const Dataset& queries,
              const RunConfig& config);

/// Columns of the per-checkpoint CSV trace, in order.
inline constexpr std::string_view kTraceColumns =
    "step,active,recall,dist_per_query,qps,insert_s,delete_s,consolidate_s,"
    "update_dists,consolidate_dists,cumulative_dists";

struct TraceRow {
  std::size_t step = 0;
  std::size_t active = 0;
  double recall = 0.0;
  double dist_per_query = 0.0;
  double qps = 0.0;
  double insert_s = 0.0;
  double delete_s = 0.0;
  double consolidate_s = 0.0;
  std::uint64_t update_dists = 0;
  std::uint64_t consolidate_dists = 0;
  std::uint64_t cumulative_dists = 0;
};

std::string format_trace_csv(const std::vector<StepMetrics>& steps);
std::vector<TraceRow> parse_trace_csv(std::string_view text);
std::string format_summary_json(const RunSummary& summary, const RunConfig& config);

/// Writes `<path>` (CSV, one row per measured checkpoint) and
/// `<path>.summary.json`.
void emit_trace(const RunResult& result, const RunConfig& config,
                const std::filesystem::path& path);
std::vector<TraceRow> load_trace(const std::filesystem::path& path);

struct CompareTolerance {
  /// Fail if mean(recall_b - recall_a), in percentage points, is below this.
  double min_mean_recall_delta = -1e300;
  /// Fail if any per-step delta, in points, is below this.
  double min_step_recall_delta = -1e300;
};

struct StepComparison {
  std::size_t step = 0;
  double recall_delta = 0.0;  // points, b - a
  double dist_ratio = 1.0;    // b / a
};

struct CompareReport {
  std::vector<StepComparison> steps;
  double mean_recall_delta = 0.0;
  double mean_dist_ratio = 1.0;
  double insert_time_ratio = 1.0;
  double delete_time_ratio = 1.0;
  bool ok = true;
};

/// Aligns two traces step by step. Throws Error(kAlignment) if their
/// checkpoint steps differ.
CompareReport compare(const std::vector<TraceRow>& a, const std::vector<TraceRow>& b,
                      const CompareTolerance& tolerance = {});
CompareReport compare(const std::filesystem::path& trace_a,
                      const std::filesystem::path& trace_b,
                      const CompareTolerance& tolerance = {});
std::string format_report(const CompareReport& report);

}  // namespace streamann
