#include "streamann/graph.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <random>
#include <string>

#include "binary_io.hpp"
#include "streamann/error.hpp"

namespace streamann {

void BuildParams::validate() const {
  if (degree_bound < 2) throw Error(ErrorCode::kInvalidParameter, "R must be >= 2");
  if (beam_width < 1) throw Error(ErrorCode::kInvalidParameter, "l_build must be >= 1");
  if (!(alpha >= 1.0f)) throw Error(ErrorCode::kInvalidParameter, "alpha must be >= 1");
}

namespace {

// Per-thread "seen" marks for search. Bumping the epoch invalidates every
// mark in O(1); the array is only cleared when the epoch wraps.
class SeenSet {
 public:
  void begin(std::size_t capacity) {
    if (tags_.size() < capacity) tags_.resize(capacity, 0);
    if (++epoch_ == 0) {
      std::fill(tags_.begin(), tags_.end(), 0);
      epoch_ = 1;
    }
  }
  // True if `id` was not yet marked.
  bool mark(VectorId id) noexcept {
    if (tags_[id] == epoch_) return false;
    tags_[id] = epoch_;
    return true;
  }

 private:
  std::vector<std::uint32_t> tags_;
  std::uint32_t epoch_ = 0;
};

thread_local SeenSet tls_seen;

template <typename T>
std::atomic_ref<T> atomic(T& v) noexcept {
  return std::atomic_ref<T>(v);
}

template <typename T>
T atomic_load(const T& v) noexcept {
  return std::atomic_ref<T>(const_cast<T&>(v)).load(std::memory_order_acquire);
}

}  // namespace

Graph::Graph(const Dataset& data, std::uint32_t degree_bound)
    : data_(&data),
      degree_bound_(degree_bound),
      adjacency_(data.count()),
      locks_(std::make_unique<std::mutex[]>(data.count())),
      states_(data.count(), NodeState::kAbsent),
      start_mutex_(std::make_unique<std::mutex>()),
      counter_(std::make_unique<DistanceCounter>()) {
  if (degree_bound < 2) throw Error(ErrorCode::kInvalidParameter, "R must be >= 2");
}

std::optional<VectorId> Graph::start() const noexcept {
  const VectorId s = atomic_load(start_);
  if (s == kInvalidId) return std::nullopt;
  return s;
}

void Graph::set_start(std::optional<VectorId> id) noexcept {
  atomic(start_).store(id.value_or(kInvalidId), std::memory_order_release);
}

NodeState Graph::state(VectorId id) const noexcept { return atomic_load(states_[id]); }

void Graph::set_state(VectorId id, NodeState next) noexcept {
  const NodeState prev = atomic(states_[id]).exchange(next, std::memory_order_acq_rel);
  if (prev == next) return;
  auto tally = [this](NodeState s, std::ptrdiff_t delta) {
    if (s == NodeState::kActive) {
      atomic(active_).fetch_add(static_cast<std::size_t>(delta), std::memory_order_relaxed);
    } else if (s == NodeState::kTombstoned) {
      atomic(tombstoned_).fetch_add(static_cast<std::size_t>(delta), std::memory_order_relaxed);
    }
  };
  tally(prev, -1);
  tally(next, +1);
}

std::size_t Graph::active_count() const noexcept { return atomic_load(active_); }
std::size_t Graph::tombstoned_count() const noexcept { return atomic_load(tombstoned_); }

std::vector<VectorId> Graph::neighbors(VectorId id) const {
  std::lock_guard lock(locks_[id]);
  return adjacency_[id];
}

void Graph::set_neighbors(VectorId id, std::vector<VectorId> list) {
  std::lock_guard lock(locks_[id]);
  adjacency_[id] = std::move(list);
}

float Graph::distance(VectorId a, VectorId b) const noexcept {
  counter_->add(1);
  return raw_distance(data_->metric(), data_->row(a).data(), data_->row(b).data(),
                      data_->dim());
}

float Graph::distance(std::span<const float> query, VectorId b) const noexcept {
  counter_->add(1);
  return raw_distance(data_->metric(), query.data(), data_->row(b).data(), data_->dim());
}

SearchResult Graph::search(std::span<const float> query, std::size_t k,
                           std::size_t beam_width) const {
  if (query.size() != data_->dim()) {
    throw Error(ErrorCode::kInvalidInput, "search: query dimension " +
                                              std::to_string(query.size()) + " != " +
                                              std::to_string(data_->dim()));
  }
  if (k == 0 || k > beam_width) {
    throw Error(ErrorCode::kInvalidParameter, "search requires 1 <= k <= beam width");
  }
  const auto entry = start();
  if (!entry || empty()) throw Error(ErrorCode::kEmptyIndex, "search on an empty index");

  const Metric metric = data_->metric();
  const std::size_t dim = data_->dim();
  std::uint64_t computed = 0;
  auto dist_to = [&](VectorId id) {
    ++computed;
    return raw_distance(metric, query.data(), data_->row(id).data(), dim);
  };

  struct Entry {
    Neighbor n;
    bool expanded;
  };
  std::vector<Entry> pool;
  pool.reserve(beam_width + 1);
  auto& seen = tls_seen;
  seen.begin(capacity());

  seen.mark(*entry);
  pool.push_back({{*entry, dist_to(*entry)}, false});

  SearchResult result;
  std::vector<VectorId> nbrs;
  std::size_t cursor = 0;
  while (cursor < pool.size()) {
    pool[cursor].expanded = true;
    const Neighbor current = pool[cursor].n;
    std::size_t next = cursor + 1;

    const NodeState st = state(current.id);
    if (st != NodeState::kAbsent) {
      result.visited.push_back({current.id, current.distance, st == NodeState::kTombstoned});
      {
        std::lock_guard lock(locks_[current.id]);
        nbrs.assign(adjacency_[current.id].begin(), adjacency_[current.id].end());
      }
      for (const VectorId id : nbrs) {
        if (!seen.mark(id) || state(id) == NodeState::kAbsent) continue;
        const Neighbor cand{id, dist_to(id)};
        if (pool.size() == beam_width && !(cand < pool.back().n)) continue;
        auto pos = std::upper_bound(pool.begin(), pool.end(), cand,
                                    [](const Neighbor& c, const Entry& e) { return c < e.n; });
        const auto idx = static_cast<std::size_t>(pos - pool.begin());
        pool.insert(pos, Entry{cand, false});
        if (pool.size() > beam_width) pool.pop_back();
        next = std::min(next, idx);
      }
    }
    cursor = next;
    while (cursor < pool.size() && pool[cursor].expanded) ++cursor;
  }
  counter_->add(computed);

  for (const auto& v : result.visited) {
    if (!v.tombstoned) result.answers.push_back({v.id, v.distance});
  }
  const std::size_t take = std::min(k, result.answers.size());
  std::partial_sort(result.answers.begin(), result.answers.begin() + take,
                    result.answers.end());
  result.answers.resize(take);
  return result;
}

// Keeps u unless some already selected v alpha-dominates it. Under squared
// Euclidean the rule alpha*|uv| > |up| is applied as alpha^2*d(u,v) > d(u,p).
// Under negated inner product, u is kept iff d(u,v) > alpha*d(u,p), i.e. the
// inner product <u,v> stays below alpha*<u,p>.
std::vector<VectorId> Graph::robust_prune(VectorId p, std::span<const VectorId> candidates,
                                          std::uint32_t degree, float alpha) const {
  std::vector<Neighbor> pool;
  pool.reserve(candidates.size());
  for (const VectorId id : candidates) {
    if (id != p) pool.push_back({id, 0.0f});
  }
  std::sort(pool.begin(), pool.end(), [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
  pool.erase(std::unique(pool.begin(), pool.end(),
                         [](const Neighbor& a, const Neighbor& b) { return a.id == b.id; }),
             pool.end());

  std::vector<VectorId> out;
  if (pool.empty() || degree == 0) return out;

  const Metric metric = data_->metric();
  const std::size_t dim = data_->dim();
  const float* xp = data_->row(p).data();
  for (auto& n : pool) n.distance = raw_distance(metric, xp, data_->row(n.id).data(), dim);
  std::uint64_t computed = pool.size();
  std::sort(pool.begin(), pool.end());

  const bool l2 = metric == Metric::kSquaredEuclidean;
  const float alpha_sq = alpha * alpha;
  std::vector<char> dropped(pool.size(), 0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (dropped[i]) continue;
    out.push_back(pool[i].id);
    if (out.size() >= degree) break;
    const float* xv = data_->row(pool[i].id).data();
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      if (dropped[j]) continue;
      const float d_uv = raw_distance(metric, data_->row(pool[j].id).data(), xv, dim);
      ++computed;
      const float d_up = pool[j].distance;
      const bool keep = l2 ? alpha_sq * d_uv > d_up : d_uv > alpha * d_up;
      if (!keep) dropped[j] = 1;
    }
  }
  counter_->add(computed);
  return out;
}

void Graph::insert(VectorId p, const BuildParams& params) {
  params.validate();
  if (params.degree_bound != degree_bound_) {
    throw Error(ErrorCode::kInvalidParameter, "build R does not match the graph's degree bound");
  }
  if (p >= capacity()) {
    throw Error(ErrorCode::kInvalidInput, "insert: id " + std::to_string(p) + " out of range");
  }
  {
    std::lock_guard lock(*start_mutex_);
    if (is_node(p)) {
      throw Error(ErrorCode::kDuplicateId, "insert: id " + std::to_string(p) + " is already in the graph");
    }
    if (!start()) {
      set_neighbors(p, {});
      set_state(p, NodeState::kActive);
      set_start(p);
      return;
    }
  }

  const SearchResult found = search(data_->row(p), 1, params.beam_width);
  std::vector<VectorId> candidates;
  candidates.reserve(found.visited.size());
  for (const auto& v : found.visited) candidates.push_back(v.id);
  std::vector<VectorId> out = robust_prune(p, candidates, degree_bound_, params.alpha);

  set_neighbors(p, out);
  set_state(p, NodeState::kActive);

  for (const VectorId v : out) {
    with_neighbors(v, [&](std::vector<VectorId>& list) {
      if (!is_node(v) || std::find(list.begin(), list.end(), p) != list.end()) return;
      list.push_back(p);
      if (list.size() > degree_bound_) {
        std::erase_if(list, [this](VectorId id) { return !is_node(id); });
        list = robust_prune(v, list, degree_bound_, params.alpha);
      }
    });
  }
}

std::size_t Graph::max_degree() const {
  std::size_t best = 0;
  for (VectorId id = 0; id < capacity(); ++id) {
    std::lock_guard lock(locks_[id]);
    best = std::max(best, adjacency_[id].size());
  }
  return best;
}

std::size_t Graph::dangling_edge_count() const {
  std::size_t count = 0;
  for (VectorId id = 0; id < capacity(); ++id) {
    if (!is_node(id)) continue;
    std::lock_guard lock(locks_[id]);
    for (const VectorId n : adjacency_[id]) count += !is_node(n);
  }
  return count;
}

void Graph::save(const std::filesystem::path& path) const {
  detail::Writer out;
  out.put(static_cast<std::uint32_t>(capacity()));
  out.put(degree_bound_);
  out.put(start().value_or(kInvalidId));
  out.put(static_cast<std::uint32_t>(data_->metric()));
  for (VectorId id = 0; id < capacity(); ++id) {
    const auto list = neighbors(id);
    out.put(static_cast<std::uint8_t>(state(id)));
    out.put(static_cast<std::uint32_t>(list.size()));
    out.put_array(list.data(), list.size());
  }
  detail::write_file(path, out.bytes());
}

Graph Graph::load(const std::filesystem::path& path, const Dataset& data) {
  const auto bytes = detail::read_file(path);
  detail::Reader in(bytes, path.string());
  const auto slots = in.get<std::uint32_t>();
  const auto degree = in.get<std::uint32_t>();
  const auto start = in.get<std::uint32_t>();
  const auto metric = in.get<std::uint32_t>();
  if (slots != data.count()) {
    in.fail("snapshot has " + std::to_string(slots) + " slots but dataset has " +
            std::to_string(data.count()) + " rows");
  }
  if (metric != static_cast<std::uint32_t>(data.metric())) in.fail("metric tag mismatch");
  if (degree < 2) in.fail("degree bound below 2");

  Graph g(data, degree);
  for (VectorId id = 0; id < slots; ++id) {
    const auto raw_state = in.get<std::uint8_t>();
    if (raw_state > static_cast<std::uint8_t>(NodeState::kTombstoned)) {
      in.fail("invalid membership byte for slot " + std::to_string(id));
    }
    const auto count = in.get<std::uint32_t>();
    if (count > degree) {
      in.fail("slot " + std::to_string(id) + " has degree " + std::to_string(count) +
              " above bound " + std::to_string(degree));
    }
    std::vector<VectorId> list(count);
    in.get_array(list.data(), count);
    for (const VectorId n : list) {
      if (n >= slots || n == id) {
        in.fail("slot " + std::to_string(id) + " has invalid neighbor " + std::to_string(n));
      }
    }
    g.set_state(id, static_cast<NodeState>(raw_state));
    g.adjacency_[id] = std::move(list);
  }
  if (in.remaining() != 0) in.fail("trailing bytes after last slot");
  if (start != kInvalidId) {
    if (start >= slots || !g.is_node(start)) in.fail("start id is not a graph node");
    g.set_start(start);
  } else if (!g.empty()) {
    in.fail("non-empty graph without a start node");
  }
  return g;
}

Graph rebuild_from_scratch(const Dataset& data, std::span<const VectorId> active,
                           const BuildParams& params, std::uint64_t seed) {
  params.validate();
  Graph g(data, params.degree_bound);
  std::vector<VectorId> order(active.begin(), active.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (const VectorId id : order) g.insert(id, params);
  return g;
}

}  // namespace streamann
