#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "streamann/dataset.hpp"
#include "streamann/distance.hpp"
#include "streamann/types.hpp"

namespace streamann {

enum class NodeState : std::uint8_t {
  kAbsent = 0,
  kActive = 1,
  kTombstoned = 2,
};

struct BuildParams {
  std::uint32_t degree_bound = 64;  // R
  std::uint32_t beam_width = 128;   // l_b
  float alpha = 1.2f;

  /// Throws Error(kInvalidParameter) unless R >= 2, l_b >= 1, alpha >= 1.
  void validate() const;
};

struct VisitedNode {
  VectorId id = kInvalidId;
  float distance = 0.0f;
  bool tombstoned = false;
};

struct SearchResult {
  /// Every expanded node, in expansion order.
  std::vector<VisitedNode> visited;
  /// Up to k closest Active expanded nodes, ascending by (distance, id).
  std::vector<Neighbor> answers;
};

/// Bounded-degree proximity graph over the rows of a Dataset.
///
/// Node slots are preallocated for every dataset row; a slot is a graph node
/// while its state is Active or Tombstoned. Each adjacency list is guarded by
/// its own mutex: readers copy a list under the lock and writers replace it
/// under the lock, so a reader never observes a torn list and two writers never
/// interleave on one node. No operation holds two node locks at once.
class Graph {
 public:
  Graph(const Dataset& data, std::uint32_t degree_bound);

  Graph(Graph&&) noexcept = default;
  Graph& operator=(Graph&&) noexcept = default;

  const Dataset& dataset() const noexcept { return *data_; }
  std::uint32_t degree_bound() const noexcept { return degree_bound_; }
  std::size_t capacity() const noexcept { return adjacency_.size(); }

  std::optional<VectorId> start() const noexcept;
  void set_start(std::optional<VectorId> id) noexcept;

  NodeState state(VectorId id) const noexcept;
  bool is_node(VectorId id) const noexcept { return state(id) != NodeState::kAbsent; }
  bool is_active(VectorId id) const noexcept { return state(id) == NodeState::kActive; }
  /// Updates the state and the Active/Tombstoned tallies.
  void set_state(VectorId id, NodeState next) noexcept;

  std::size_t active_count() const noexcept;
  std::size_t tombstoned_count() const noexcept;
  /// Active + Tombstoned.
  std::size_t node_count() const noexcept { return active_count() + tombstoned_count(); }
  bool empty() const noexcept { return node_count() == 0; }

  /// Snapshot of N_out(id).
  std::vector<VectorId> neighbors(VectorId id) const;
  void set_neighbors(VectorId id, std::vector<VectorId> list);
  /// Runs fn(std::vector<VectorId>&) on N_out(id) while holding the node lock.
  template <typename Fn>
  decltype(auto) with_neighbors(VectorId id, Fn&& fn) {
    std::lock_guard lock(locks_[id]);
    return fn(adjacency_[id]);
  }

  DistanceCounter& counter() const noexcept { return *counter_; }

  /// Counted distance between two dataset rows.
  float distance(VectorId a, VectorId b) const noexcept;
  /// Counted distance between a query and a dataset row.
  float distance(std::span<const float> query, VectorId b) const noexcept;

  /// Best-first beam search from the start node. Tombstoned nodes are
  /// expanded but never returned as answers; neighbors whose slot is Absent
  /// are skipped. Throws Error(kEmptyIndex) on an empty graph and
  /// Error(kInvalidParameter) unless 1 <= k <= beam_width.
  SearchResult search(std::span<const float> query, std::size_t k,
                      std::size_t beam_width) const;

  /// Alpha-pruning neighbor selection for `p`. Duplicates and `p` itself are
  /// dropped from `candidates`. Output is at most `degree` ids, the first
  /// being the candidate closest to p.
  std::vector<VectorId> robust_prune(VectorId p, std::span<const VectorId> candidates,
                                     std::uint32_t degree, float alpha) const;

  /// Adds dataset row `p` to the graph. Throws Error(kDuplicateId) if p is
  /// already a node.
  void insert(VectorId p, const BuildParams& params);

  /// Largest out-degree over all node slots.
  std::size_t max_degree() const;
  /// Number of (node, neighbor) entries whose neighbor slot is Absent.
  std::size_t dangling_edge_count() const;

  /// Snapshot file:
  ///   u32 slots, u32 R, u32 start (0xFFFFFFFF if none), u32 metric tag,
  ///   then per slot: u8 state, u32 degree, degree x u32 neighbor ids.
  void save(const std::filesystem::path& path) const;
  /// Validates slot count, degree bound, and neighbor ids against `data`.
  static Graph load(const std::filesystem::path& path, const Dataset& data);

 private:
  const Dataset* data_;
  std::uint32_t degree_bound_;
  std::vector<std::vector<VectorId>> adjacency_;
  std::unique_ptr<std::mutex[]> locks_;
  std::vector<NodeState> states_;
  std::unique_ptr<std::mutex> start_mutex_;
  // Scalars below are accessed through std::atomic_ref.
  VectorId start_ = kInvalidId;
  std::size_t active_ = 0;
  std::size_t tombstoned_ = 0;
  std::unique_ptr<DistanceCounter> counter_;
};

/// Builds a fresh graph over `active` by inserting in a seed-determined
/// random order. Single-threaded, so identical inputs give identical graphs.
Graph rebuild_from_scratch(const Dataset& data, std::span<const VectorId> active,
                           const BuildParams& params, std::uint64_t seed);

}  // namespace streamann
