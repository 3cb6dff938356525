#include "streamann/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

#include "streamann/error.hpp"

namespace streamann {

namespace {

class Lloyd {
 public:
  Lloyd(const Dataset& data, KMeansModel& model) : data_(data), model_(model) {}

  float dist(std::size_t point, std::size_t cluster) const {
    return squared_l2(data_.row(static_cast<VectorId>(point)).data(),
                      model_.centroid(cluster).data(), data_.dim());
  }

  // k-means++: each new center is drawn with probability proportional to the
  // squared distance to the nearest center chosen so far.
  void seed_centers(std::mt19937_64& rng) {
    const std::size_t n = data_.count();
    const std::size_t dim = data_.dim();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto place = [&](std::size_t cluster, std::size_t point) {
      const auto row = data_.row(static_cast<VectorId>(point));
      std::copy(row.begin(), row.end(), model_.centroids.begin() + cluster * dim);
    };
    place(0, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    std::vector<double> nearest(n, std::numeric_limits<double>::max());
    for (std::size_t c = 1; c < model_.k; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = std::min(nearest[i], static_cast<double>(dist(i, c - 1)));
        total += nearest[i];
      }
      std::size_t chosen = n - 1;
      if (total > 0.0) {
        double target = unit(rng) * total;
        for (std::size_t i = 0; i < n; ++i) {
          target -= nearest[i];
          if (target < 0.0) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      }
      place(c, chosen);
    }
  }

  // Returns true if any assignment changed.
  bool assign() {
    bool changed = false;
    for (std::size_t i = 0; i < data_.count(); ++i) {
      std::uint32_t best = 0;
      float best_d = dist(i, 0);
      for (std::size_t c = 1; c < model_.k; ++c) {
        const float d = dist(i, c);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(c);
        }
      }
      if (model_.assignment[i] != best) {
        model_.assignment[i] = best;
        changed = true;
      }
    }
    return changed;
  }

  void update() {
    const std::size_t dim = data_.dim();
    std::vector<double> sums(model_.k * dim, 0.0);
    std::vector<std::size_t> sizes(model_.k, 0);
    for (std::size_t i = 0; i < data_.count(); ++i) {
      const std::size_t c = model_.assignment[i];
      const auto row = data_.row(static_cast<VectorId>(i));
      for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] += row[d];
      ++sizes[c];
    }
    for (std::size_t c = 0; c < model_.k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        model_.centroids[c * dim + d] =
            static_cast<float>(sums[c * dim + d] / static_cast<double>(sizes[c]));
      }
    }
    repair_empty(sizes);
  }

 private:
  void repair_empty(std::vector<std::size_t>& sizes) {
    const std::size_t dim = data_.dim();
    for (std::size_t empty = 0; empty < model_.k; ++empty) {
      if (sizes[empty] != 0) continue;
      const auto largest = static_cast<std::size_t>(
          std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      if (sizes[largest] < 2) return;
      std::size_t far = 0;
      float far_d = -1.0f;
      for (std::size_t i = 0; i < data_.count(); ++i) {
        if (model_.assignment[i] != largest) continue;
        const float d = dist(i, largest);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      model_.assignment[far] = static_cast<std::uint32_t>(empty);
      --sizes[largest];
      sizes[empty] = 1;
      const auto row = data_.row(static_cast<VectorId>(far));
      std::copy(row.begin(), row.end(), model_.centroids.begin() + empty * dim);
    }
  }

  const Dataset& data_;
  KMeansModel& model_;
};

}  // namespace

KMeansModel kmeans(const Dataset& dataset, std::size_t k, std::size_t max_iters,
                   std::uint64_t seed) {
  if (k == 0 || k > dataset.count()) {
    throw Error(ErrorCode::kInvalidParameter,
                "kmeans: k=" + std::to_string(k) + " must be in [1, " +
                    std::to_string(dataset.count()) + "]");
  }
  KMeansModel model;
  model.k = k;
  model.dim = dataset.dim();
  model.centroids.assign(k * dataset.dim(), 0.0f);
  model.assignment.assign(dataset.count(), std::numeric_limits<std::uint32_t>::max());

  Lloyd lloyd(dataset, model);
  std::mt19937_64 rng(seed);
  lloyd.seed_centers(rng);

  bool converged = false;
  for (std::size_t it = 0; it < max_iters; ++it) {
    const bool changed = lloyd.assign();
    model.iterations = it + 1;
    if (!changed && it > 0) {
      converged = true;
      break;
    }
    lloyd.update();
  }
  if (!converged) lloyd.assign();
  return model;
}

}  // namespace streamann
