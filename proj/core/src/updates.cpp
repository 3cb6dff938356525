#include "streamann/updates.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "streamann/error.hpp"
#include "streamann/parallel.hpp"

namespace streamann {

void DeleteParams::validate() const {
  if (beam_width < 1) throw Error(ErrorCode::kInvalidParameter, "l_delete must be >= 1");
  if (candidates < 1 || candidates > beam_width) {
    throw Error(ErrorCode::kInvalidParameter, "candidate list size must be in [1, l_delete]");
  }
  if (edge_copies < 1) throw Error(ErrorCode::kInvalidParameter, "c must be >= 1");
  if (!(alpha >= 1.0f)) throw Error(ErrorCode::kInvalidParameter, "alpha must be >= 1");
}

void ConsolidationPolicy::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "consolidation threshold must be in (0, 1]");
  }
}

namespace {

constexpr std::size_t kStartSample = 1000;

bool contains(const std::vector<VectorId>& list, VectorId id) {
  return std::find(list.begin(), list.end(), id) != list.end();
}

}  // namespace

StreamingIndex::StreamingIndex(const Dataset& data, const BuildParams& build,
                               DeleteRegime regime, const DeleteParams& del,
                               const ConsolidationPolicy& policy, std::uint64_t seed)
    : data_(&data),
      graph_(data, build.degree_bound),
      build_(build),
      regime_(regime),
      delete_(del),
      policy_(policy),
      rng_(seed) {
  build_.validate();
  delete_.validate();
  policy_.validate();
}

void StreamingIndex::require_regime(DeleteRegime expected, const char* op) const {
  if (regime_ != expected) {
    throw Error(ErrorCode::kInvalidParameter,
                std::string(op) + " is not available in this index's deletion regime");
  }
}

void StreamingIndex::insert(VectorId p) {
  if (regime_ == DeleteRegime::kInPlace) {
    // A re-inserted id is live again; edges that still point at its slot are
    // valid and must survive the next sweep.
    std::lock_guard lock(mutex_);
    std::erase(removed_, p);
  }
  graph_.insert(p, build_);
}

void StreamingIndex::remove(VectorId p) {
  if (regime_ == DeleteRegime::kBaseline) {
    lazy_delete(p);
  } else {
    inplace_delete(p);
  }
}

void StreamingIndex::lazy_delete(VectorId p) {
  require_regime(DeleteRegime::kBaseline, "lazy_delete");
  std::lock_guard lock(mutex_);
  if (p >= graph_.capacity() || !graph_.is_active(p)) {
    throw Error(ErrorCode::kNotFound, "lazy_delete: id " + std::to_string(p) + " is not active");
  }
  graph_.set_state(p, NodeState::kTombstoned);
  tombstones_.push_back(p);
  ++deletions_since_;
  ++lazy_deletes_;
}

// Requires mutex_. Squared Euclidean is used for centroid proximity under
// either metric; the evaluations go through the graph's counter.
std::optional<VectorId> StreamingIndex::choose_start(std::optional<VectorId> exclude) {
  std::vector<VectorId> active;
  for (VectorId id = 0; id < graph_.capacity(); ++id) {
    if (graph_.is_active(id) && id != exclude) active.push_back(id);
  }
  if (active.empty()) return std::nullopt;

  std::vector<VectorId> sample;
  sample.reserve(std::min(active.size(), kStartSample));
  std::sample(active.begin(), active.end(), std::back_inserter(sample), kStartSample, rng_);

  const std::size_t dim = data_->dim();
  std::vector<double> sum(dim, 0.0);
  for (const VectorId id : sample) {
    const auto row = data_->row(id);
    for (std::size_t d = 0; d < dim; ++d) sum[d] += row[d];
  }
  std::vector<float> centroid(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    centroid[d] = static_cast<float>(sum[d] / static_cast<double>(sample.size()));
  }

  Neighbor best;
  bool have = false;
  for (const VectorId id : sample) {
    const Neighbor cand{id, squared_l2(centroid.data(), data_->row(id).data(), dim)};
    if (!have || cand < best) {
      best = cand;
      have = true;
    }
  }
  graph_.counter().add(sample.size());
  return best.id;
}

void StreamingIndex::prune_if_over(VectorId v, float alpha, std::size_t& pruned) {
  const std::uint32_t R = graph_.degree_bound();
  graph_.with_neighbors(v, [&](std::vector<VectorId>& list) {
    if (!graph_.is_node(v) || list.size() <= R) return;
    std::erase_if(list, [this](VectorId id) { return !graph_.is_node(id); });
    if (list.size() <= R) return;
    list = graph_.robust_prune(v, list, R, alpha);
    ++pruned;
  });
}

DeleteStats StreamingIndex::inplace_delete(VectorId p) {
  require_regime(DeleteRegime::kInPlace, "inplace_delete");
  if (p >= graph_.capacity() || !graph_.is_active(p)) {
    throw Error(ErrorCode::kNotFound, "inplace_delete: id " + std::to_string(p) + " is not active");
  }
  DeleteStats stats;
  const std::uint64_t counter_before = graph_.counter().total();

  const SearchResult found =
      graph_.search(data_->row(p), delete_.candidates, delete_.beam_width);

  // The k closest returnable nodes, never p itself.
  std::vector<Neighbor> candidates;
  for (const auto& v : found.visited) {
    if (!v.tombstoned && v.id != p && graph_.is_active(v.id)) {
      candidates.push_back({v.id, v.distance});
    }
  }
  const std::size_t keep = std::min<std::size_t>(delete_.candidates, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end());
  candidates.resize(keep);

  // Approximate in-neighbors: expanded nodes holding an edge to p.
  std::vector<VectorId> in_neighbors;
  for (const auto& v : found.visited) {
    if (v.id != p && contains(graph_.neighbors(v.id), p)) in_neighbors.push_back(v.id);
  }
  stats.in_neighbors = in_neighbors.size();

  const std::size_t copies = delete_.edge_copies;
  std::vector<Neighbor> scratch;
  auto closest_to = [&](VectorId x) {
    scratch.clear();
    for (const auto& c : candidates) {
      if (c.id != x) scratch.push_back({c.id, graph_.distance(x, c.id)});
    }
    const std::size_t n = std::min(copies, scratch.size());
    std::partial_sort(scratch.begin(), scratch.begin() + n, scratch.end());
    std::vector<VectorId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = scratch[i].id;
    return ids;
  };

  std::vector<VectorId> touched;
  for (const VectorId z : in_neighbors) {
    const auto replacements = closest_to(z);
    graph_.with_neighbors(z, [&](std::vector<VectorId>& list) {
      std::erase(list, p);
      for (const VectorId y : replacements) {
        if (!contains(list, y)) {
          list.push_back(y);
          ++stats.edges_added;
        }
      }
    });
    touched.push_back(z);
  }

  const std::vector<VectorId> out = graph_.neighbors(p);
  stats.out_neighbors = out.size();
  for (const VectorId w : out) {
    if (!graph_.is_node(w)) continue;
    for (const VectorId y : closest_to(w)) {
      graph_.with_neighbors(y, [&](std::vector<VectorId>& list) {
        if (!contains(list, w)) {
          list.push_back(w);
          ++stats.edges_added;
        }
      });
      touched.push_back(y);
    }
  }

  {
    std::lock_guard lock(mutex_);
    if (graph_.start() == p) {
      // Pinned start: keep navigating through it until the next sweep.
      graph_.set_state(p, NodeState::kTombstoned);
      start_successor_ = choose_start(p);
    } else {
      graph_.set_state(p, NodeState::kAbsent);
      graph_.set_neighbors(p, {});
      if (start_successor_ == p) start_successor_ = choose_start(std::nullopt);
    }
    removed_.push_back(p);
    ++deletions_since_;
  }
  ++inplace_deletes_;

  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (const VectorId v : touched) {
    if (v != p) prune_if_over(v, delete_.alpha, stats.nodes_pruned);
  }
  stats.distances = graph_.counter().total() - counter_before;
  return stats;
}

void StreamingIndex::consolidate_light() {
  require_regime(DeleteRegime::kInPlace, "consolidate_light");
  std::lock_guard lock(mutex_);
  std::vector<VectorId> removed = std::move(removed_);
  removed_.clear();

  const auto start = graph_.start();
  if (start && graph_.state(*start) == NodeState::kTombstoned) {
    graph_.set_start(start_successor_);
    start_successor_.reset();
    graph_.set_state(*start, NodeState::kAbsent);
    graph_.set_neighbors(*start, {});
  }

  if (!removed.empty()) {
    std::vector<char> gone(graph_.capacity(), 0);
    for (const VectorId id : removed) gone[id] = 1;
    parallel_for(graph_.capacity(), threads_, [&](std::size_t i) {
      const auto id = static_cast<VectorId>(i);
      if (!graph_.is_node(id)) return;
      graph_.with_neighbors(id, [&](std::vector<VectorId>& list) {
        std::erase_if(list, [&](VectorId n) { return gone[n] != 0; });
      });
    });
  }
  deletions_since_ = 0;
  ++consolidations_;
}

void StreamingIndex::consolidate_baseline() {
  require_regime(DeleteRegime::kBaseline, "consolidate_baseline");
  std::lock_guard lock(mutex_);
  std::vector<VectorId> deleted = std::move(tombstones_);
  tombstones_.clear();
  deletions_since_ = 0;
  if (deleted.empty()) return;

  std::vector<char> in_d(graph_.capacity(), 0);
  for (const VectorId id : deleted) in_d[id] = 1;

  auto start = graph_.start();
  if (start && in_d[*start]) start = choose_start(std::nullopt);

  std::vector<VectorId> live;
  for (VectorId id = 0; id < graph_.capacity(); ++id) {
    if (graph_.is_active(id)) live.push_back(id);
  }

  // Each live node reads only its own list and tombstone lists, which are not
  // rewritten here, so the result does not depend on processing order.
  const std::uint32_t R = graph_.degree_bound();
  const float alpha = build_.alpha;
  parallel_for(live.size(), threads_, [&](std::size_t i) {
    const VectorId p = live[i];
    const std::vector<VectorId> list = graph_.neighbors(p);
    std::vector<VectorId> candidates;
    candidates.reserve(list.size() * 2);
    for (const VectorId v : list) {
      if (in_d[v]) {
        for (const VectorId u : graph_.neighbors(v)) {
          if (!in_d[u] && graph_.is_node(u)) candidates.push_back(u);
        }
      } else if (graph_.is_node(v)) {
        candidates.push_back(v);
      }
    }
    graph_.set_neighbors(p, graph_.robust_prune(p, candidates, R, alpha));
  });

  for (const VectorId v : deleted) {
    graph_.set_state(v, NodeState::kAbsent);
    graph_.set_neighbors(v, {});
  }
  graph_.set_start(start);
  ++consolidations_;
}

bool StreamingIndex::maybe_consolidate() {
  std::size_t deletions = 0;
  {
    std::lock_guard lock(mutex_);
    deletions = deletions_since_;
  }
  if (deletions == 0) return false;
  const double nodes = static_cast<double>(graph_.node_count());
  if (static_cast<double>(deletions) < policy_.threshold * nodes - 1e-9) return false;
  if (regime_ == DeleteRegime::kBaseline) {
    consolidate_baseline();
  } else {
    consolidate_light();
  }
  return true;
}

std::vector<VectorId> StreamingIndex::tombstones() const {
  std::lock_guard lock(mutex_);
  return tombstones_;
}

std::vector<VectorId> StreamingIndex::pending_removals() const {
  std::lock_guard lock(mutex_);
  return removed_;
}

std::size_t StreamingIndex::deletions_since_consolidation() const {
  std::lock_guard lock(mutex_);
  return deletions_since_;
}

}  // namespace streamann
