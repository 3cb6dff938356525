#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "streamann/graph.hpp"

namespace streamann {

/// How an index handles deletions. Fixed at construction.
enum class DeleteRegime : std::uint8_t {
  kBaseline,  // tombstone, then periodic splice-and-prune consolidation
  kInPlace,   // repair neighborhoods at delete time, periodic dangling-edge sweep
};

struct DeleteParams {
  std::uint32_t beam_width = 128;  // l_d
  std::uint32_t candidates = 50;   // k
  std::uint32_t edge_copies = 3;   // c
  float alpha = 1.2f;

  void validate() const;
};

struct ConsolidationPolicy {
  /// Consolidate once deletions since the last consolidation reach this
  /// fraction of the current node count (Active + Tombstoned).
  double threshold = 0.2;

  void validate() const;
};

/// Instrumentation for a single in-place deletion.
struct DeleteStats {
  std::size_t in_neighbors = 0;   // |N'_in(p)|
  std::size_t out_neighbors = 0;  // |N_out(p)| at delete time
  std::size_t edges_added = 0;    // new adjacency entries created by the repair loops
  std::size_t nodes_pruned = 0;
  std::uint64_t distances = 0;
};

/// A Graph plus the bookkeeping of one deletion regime.
///
/// The start node is pinned: deleting it (either regime) keeps it as a
/// Tombstoned navigation node until the next consolidation, which moves the
/// start to the Active node closest to the centroid of a seeded sample of at
/// most 1000 Active nodes and only then drops the old start.
class StreamingIndex {
 public:
  StreamingIndex(const Dataset& data, const BuildParams& build, DeleteRegime regime,
                 const DeleteParams& del = {}, const ConsolidationPolicy& policy = {},
                 std::uint64_t seed = 0);

  Graph& graph() noexcept { return graph_; }
  const Graph& graph() const noexcept { return graph_; }
  DeleteRegime regime() const noexcept { return regime_; }
  const BuildParams& build_params() const noexcept { return build_; }
  const DeleteParams& delete_params() const noexcept { return delete_; }
  const ConsolidationPolicy& policy() const noexcept { return policy_; }

  void set_threads(std::size_t threads) noexcept { threads_ = threads == 0 ? 1 : threads; }

  void insert(VectorId p);

  /// Regime-appropriate deletion.
  void remove(VectorId p);

  /// Marks p deleted; searches keep navigating it but never return it.
  /// Baseline regime only. Throws Error(kNotFound) unless p is Active.
  void lazy_delete(VectorId p);

  /// Repairs p's neighborhood with at most c replacement edges per affected
  /// node, then removes p immediately. InPlace regime only. Throws
  /// Error(kNotFound) unless p is Active.
  DeleteStats inplace_delete(VectorId p);

  /// Splices each tombstone's surviving out-neighbors into every live node
  /// pointing at it, re-prunes the live nodes, and drops all tombstones.
  /// No-op when there are no tombstones.
  void consolidate_baseline();

  /// Strips every edge into nodes removed in place since the last sweep.
  /// Performs no distance computations.
  void consolidate_light();

  /// Runs the regime's consolidation iff the policy threshold is reached.
  bool maybe_consolidate();

  std::vector<VectorId> tombstones() const;
  std::vector<VectorId> pending_removals() const;
  std::size_t deletions_since_consolidation() const;

  std::size_t lazy_delete_count() const noexcept { return lazy_deletes_; }
  std::size_t inplace_delete_count() const noexcept { return inplace_deletes_; }
  std::size_t consolidation_count() const noexcept { return consolidations_; }

 private:
  void require_regime(DeleteRegime expected, const char* op) const;
  std::optional<VectorId> choose_start(std::optional<VectorId> exclude);
  void prune_if_over(VectorId v, float alpha, std::size_t& pruned);

  const Dataset* data_;
  Graph graph_;
  BuildParams build_;
  DeleteRegime regime_;
  DeleteParams delete_;
  ConsolidationPolicy policy_;
  std::size_t threads_ = 1;

  mutable std::mutex mutex_;  // guards the sets, successor, and rng
  std::vector<VectorId> tombstones_;
  std::vector<VectorId> removed_;
  std::optional<VectorId> start_successor_;
  std::size_t deletions_since_ = 0;
  std::mt19937_64 rng_;
  std::atomic<std::size_t> lazy_deletes_{0};
  std::atomic<std::size_t> inplace_deletes_{0};
  std::atomic<std::size_t> consolidations_{0};
};

}  // namespace streamann
