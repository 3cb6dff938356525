#pragma once

#include <compare>
#include <cstdint>
#include <limits>

namespace streamann {

/// Dense row index into a Dataset.
using VectorId = std::uint32_t;

inline constexpr VectorId kInvalidId = std::numeric_limits<VectorId>::max();

/// A point id paired with its distance to some reference vector. Ordered by
/// (distance, id) so that equal distances break ties by ascending id.
struct Neighbor {
  VectorId id = kInvalidId;
  float distance = 0.0f;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
  friend bool operator<(const Neighbor& a, const Neighbor& b) noexcept {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  }
};

}  // namespace streamann
