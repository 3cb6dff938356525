#include "streamann/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "streamann/error.hpp"
#include "streamann/parallel.hpp"

namespace streamann {

GroundTruth brute_force_knn(const Dataset& dataset, std::span<const VectorId> active,
                            const Dataset& queries, std::size_t k, std::size_t threads) {
  if (active.empty()) throw Error(ErrorCode::kInvalidInput, "ground truth over an empty active set");
  if (queries.dim() != dataset.dim()) {
    throw Error(ErrorCode::kInvalidInput, "query dimension does not match dataset");
  }
  if (k == 0) throw Error(ErrorCode::kInvalidParameter, "k must be >= 1");

  GroundTruth truth;
  truth.k = k;
  truth.rows.resize(queries.count());
  const std::size_t take = std::min(k, active.size());
  const Metric metric = dataset.metric();
  const std::size_t dim = dataset.dim();

  parallel_for(queries.count(), threads, [&](std::size_t q) {
    const float* xq = queries.row(static_cast<VectorId>(q)).data();
    // Max-heap of the best `take` so far, ordered by (distance, id).
    std::vector<Neighbor> heap;
    heap.reserve(take + 1);
    for (const VectorId id : active) {
      const Neighbor n{id, raw_distance(metric, xq, dataset.row(id).data(), dim)};
      if (heap.size() < take) {
        heap.push_back(n);
        std::push_heap(heap.begin(), heap.end());
      } else if (n < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = n;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    std::sort_heap(heap.begin(), heap.end());
    truth.rows[q] = std::move(heap);
  });
  return truth;
}

double recall_at_k(std::span<const Neighbor> answers, std::span<const Neighbor> truth,
                   std::size_t k) {
  const std::size_t g = std::min(k, truth.size());
  if (g == 0) return 0.0;
  const float kth = truth[g - 1].distance;
  const float window = kth + 1e-6f * std::fabs(kth);
  std::size_t hits = 0;
  const std::size_t considered = std::min(k, answers.size());
  for (std::size_t i = 0; i < considered && hits < g; ++i) {
    const Neighbor& a = answers[i];
    const auto seen = answers.begin() + static_cast<std::ptrdiff_t>(i);
    if (std::any_of(answers.begin(), seen, [&](const Neighbor& b) { return b.id == a.id; })) continue;
    const bool by_id = std::any_of(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(g),
                                   [&](const Neighbor& t) { return t.id == a.id; });
    if (by_id || a.distance <= window) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(g);
}

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  detail::Writer out;
  out.put(static_cast<std::uint32_t>(truth.rows.size()));
  out.put(static_cast<std::uint32_t>(truth.k));
  for (const auto& row : truth.rows) {
    for (std::size_t i = 0; i < truth.k; ++i) out.put(i < row.size() ? row[i].id : kInvalidId);
  }
  for (const auto& row : truth.rows) {
    for (std::size_t i = 0; i < truth.k; ++i) {
      out.put(i < row.size() ? row[i].distance : std::numeric_limits<float>::infinity());
    }
  }
  detail::write_file(path, out.bytes());
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::Reader in(bytes, path.string());
  const auto queries = in.get<std::uint32_t>();
  const auto k = in.get<std::uint32_t>();
  const std::size_t cells = static_cast<std::size_t>(queries) * k;
  if (in.remaining() != cells * 8) {
    in.fail("expected " + std::to_string(cells * 8) + " payload bytes, have " +
            std::to_string(in.remaining()));
  }
  std::vector<std::uint32_t> ids(cells);
  std::vector<float> dists(cells);
  in.get_array(ids.data(), cells);
  in.get_array(dists.data(), cells);

  GroundTruth truth;
  truth.k = k;
  truth.rows.resize(queries);
  for (std::size_t q = 0; q < queries; ++q) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t cell = q * k + i;
      if (ids[cell] == kInvalidId) break;
      truth.rows[q].push_back({ids[cell], dists[cell]});
    }
  }
  return truth;
}

}  // namespace streamann
