#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streamann/dataset.hpp"
#include "streamann/types.hpp"

namespace streamann {

struct Step {
  std::vector<VectorId> inserts;
  std::vector<VectorId> deletes;
  bool checkpoint = false;

  friend bool operator==(const Step&, const Step&) = default;
};

/// A fully materialized update schedule over a dataset of `count` rows.
struct Runbook {
  std::string dataset_name = "dataset";
  std::size_t count = 0;
  std::size_t dim = 0;
  std::size_t t_max = 0;
  std::uint64_t seed = 0;
  std::string generator = "custom";
  std::vector<Step> steps;

  friend bool operator==(const Runbook&, const Runbook&) = default;
};

/// Random permutation cut into t_max near-equal parts. Step T inserts part T;
/// past the midpoint, step T also deletes part T - t_max/2. Only steps past
/// the midpoint are checkpoints. Requires an even t_max and n >= t_max.
Runbook gen_sliding_window(std::size_t n, std::size_t t_max, std::uint64_t seed);

/// Per-point arrival step and lifespan behind an ExpirationTime runbook.
struct ExpirationSchedule {
  std::vector<VectorId> order;             // arrival order
  std::vector<std::size_t> insert_step;    // 1-based, indexed by position in `order`
  std::vector<std::size_t> lifespan;       // t_max, t_max/2 or t_max/10
};

/// Lifespan classes {t_max, t_max/2, t_max/10} drawn with weights 1:2:10.
ExpirationSchedule expiration_schedule(std::size_t n, std::size_t t_max, std::uint64_t seed);

/// Inserts a 1/t_max slice per step; a point inserted at step T with lifespan
/// L is deleted at step T+L when T+L <= t_max. Every step is a checkpoint.
/// Requires t_max divisible by 10 and n >= t_max.
Runbook gen_expiration_time(std::size_t n, std::size_t t_max, std::uint64_t seed);

struct ClusteredOptions {
  std::size_t clusters = 64;
  std::size_t rounds = 5;
  std::size_t kmeans_iters = 25;
  /// Overrides the per-(round, cluster) uniform proportion draw.
  std::optional<double> fixed_proportion;
};

/// Per round: one insert step per k-means cluster taking a random proportion
/// of that cluster's never-inserted points, then one delete step per cluster
/// taking a random proportion of its active points. Every step is a
/// checkpoint.
Runbook gen_clustered(const Dataset& dataset, const ClusteredOptions& options,
                      std::uint64_t seed);

enum class ViolationKind : std::uint8_t {
  kOutOfRange,
  kDoubleInsert,
  kDeleteInactive,
  kInsertDeleteOverlap,
};

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
  std::size_t step = 0;  // 1-based
  VectorId id = kInvalidId;
  ViolationKind kind = ViolationKind::kOutOfRange;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Replays the schedule (inserts before deletes within a step) against a set
/// simulator. `dataset_count` bounds ids; by default the runbook's own count.
std::vector<Violation> validate(const Runbook& runbook,
                                std::optional<std::size_t> dataset_count = std::nullopt);

/// Text format:
///   runbook <name> <count> <dim> <t_max> <seed> <generator>
///   <index> I <ids...> D <ids...> C <0|1>
std::string serialize(const Runbook& runbook);
Runbook parse_runbook(std::string_view text);

void save_runbook(const Runbook& runbook, const std::filesystem::path& path);
Runbook load_runbook(const std::filesystem::path& path);

}  // namespace streamann
