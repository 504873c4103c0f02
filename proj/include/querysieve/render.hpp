#pragma once

// Cluster map: the dissimilarity matrix with rows and columns permuted so
// that clusters are contiguous, largest first from the top-left corner.
// Off-diagonal cells are gray (white = identical, black = dissimilarity 1);
// diagonal cells carry the true class: red for TMN, blue for User.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "querysieve/clustering.hpp"
#include "querysieve/error.hpp"
#include "querysieve/ingest.hpp"
#include "querysieve/similarity.hpp"

namespace querysieve {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kTmnColor{255, 0, 0};
inline constexpr Rgb kUserColor{0, 0, 255};
inline constexpr Rgb kUnknownColor{0, 160, 0};

struct ClusterMapSpec {
  std::vector<std::size_t> order;   // empty: derive with cluster_order()
  std::size_t pixel_scale = 1;
};

/// Clusters by size descending (ties: lowest cluster id), members ascending.
inline std::vector<std::size_t> cluster_order(const std::vector<std::size_t>& assignment,
                                              std::size_t k) {
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) members.at(assignment[i]).push_back(i);
  std::vector<std::size_t> clusters(k);
  for (std::size_t c = 0; c < k; ++c) clusters[c] = c;
  std::stable_sort(clusters.begin(), clusters.end(), [&](std::size_t a, std::size_t b) {
    return members[a].size() > members[b].size();
  });
  std::vector<std::size_t> order;
  order.reserve(assignment.size());
  for (std::size_t c : clusters) order.insert(order.end(), members[c].begin(), members[c].end());
  return order;
}

inline std::vector<std::size_t> cluster_order(const Clustering& clustering) {
  return cluster_order(clustering.assignment, clustering.k);
}

/// round(255 * (1 - d)) for d in [0, 1].
inline std::uint8_t gray_level(double dissimilarity) {
  const double v = std::round(255.0 * (1.0 - std::clamp(dissimilarity, 0.0, 1.0)));
  return static_cast<std::uint8_t>(v);
}

/// Binary PPM (P6) of n*s x n*s pixels, row-major from the top-left corner.
inline std::string render_map(const DissimilarityMatrix& d, const Clustering& clustering,
                              const LabeledDataset& truth, const ClusterMapSpec& spec = {}) {
  const std::size_t n = d.size();
  if (clustering.size() != n || truth.size() != n)
    throw InputError("render: matrix has " + std::to_string(n) + " elements, clustering " +
                     std::to_string(clustering.size()) + ", dataset " +
                     std::to_string(truth.size()));
  if (spec.pixel_scale < 1) throw UsageError("pixel scale must be >= 1");
  std::vector<std::size_t> order = spec.order.empty() ? cluster_order(clustering) : spec.order;
  {
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    bool ok = sorted.size() == n;
    for (std::size_t i = 0; ok && i < n; ++i) ok = sorted[i] == i;
    if (!ok) throw UsageError("render: order is not a permutation of the elements");
  }

  const std::size_t s = spec.pixel_scale;
  const std::size_t side = n * s;
  const std::string header = "P6\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  std::string out;
  out.reserve(header.size() + side * side * 3);
  out += header;
  std::string row(side * 3, '\0');
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Rgb c;
      if (i == j) {
        const Label l = truth.records[order[i]].label;
        c = l == Label::TMN ? kTmnColor : l == Label::User ? kUserColor : kUnknownColor;
      } else {
        const std::uint8_t g = gray_level(d(order[i], order[j]));
        c = {g, g, g};
      }
      for (std::size_t x = 0; x < s; ++x) {
        const std::size_t p = (j * s + x) * 3;
        row[p] = static_cast<char>(c.r);
        row[p + 1] = static_cast<char>(c.g);
        row[p + 2] = static_cast<char>(c.b);
      }
    }
    for (std::size_t y = 0; y < s; ++y) out += row;
  }
  return out;
}

}  // namespace querysieve
