#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string_view>

namespace streamann {

/// Both metrics are min-ordered: a smaller value means "closer".
enum class Metric : std::uint8_t {
  kSquaredEuclidean = 0,
  kNegativeInnerProduct = 1,
};

std::string_view to_string(Metric metric) noexcept;
Metric parse_metric(std::string_view name);

/// Counts distance evaluations. Concurrent increments are exact. Copying
/// snapshots the current total.
class DistanceCounter {
 public:
  DistanceCounter() = default;
  DistanceCounter(const DistanceCounter& other) noexcept : total_(other.total()) {}
  DistanceCounter& operator=(const DistanceCounter& other) noexcept {
    total_.store(other.total(), std::memory_order_relaxed);
    return *this;
  }

  void add(std::uint64_t n) noexcept { total_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t total() const noexcept { return total_.load(std::memory_order_relaxed); }
  void reset() noexcept { total_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> total_{0};
};

/// Uncounted kernels. Dimensions must already agree.
float squared_l2(const float* a, const float* b, std::size_t dim) noexcept;
float inner_product(const float* a, const float* b, std::size_t dim) noexcept;

inline float raw_distance(Metric metric, const float* a, const float* b,
                          std::size_t dim) noexcept {
  return metric == Metric::kSquaredEuclidean ? squared_l2(a, b, dim)
                                             : -inner_product(a, b, dim);
}

/// Checked, counted distance. Throws Error(kInvalidInput) on a dimension
/// mismatch.
float distance(std::span<const float> a, std::span<const float> b, Metric metric,
               DistanceCounter& counter);

}  // namespace streamann
