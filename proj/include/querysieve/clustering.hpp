#pragma once

// Partitioning Around Medoids (Kaufman & Rousseeuw BUILD + SWAP), silhouette
// widths, and choice of k by maximum average silhouette.
//
// Every tie is broken toward the lowest index, so identical matrices always
// produce identical clusterings.

#include <algorithm>
#include <cstddef>
#include <future>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "querysieve/error.hpp"
#include "querysieve/similarity.hpp"
#include "querysieve/text.hpp"

namespace querysieve {

struct Clustering {
  std::size_t k = 0;
  std::vector<std::size_t> medoids;     // ascending; cluster c is represented by medoids[c]
  std::vector<std::size_t> assignment;  // element -> cluster id in [0, k)
  std::vector<double> silhouettes;      // per element, in [-1, 1]
  double avg_silhouette = 0.0;
  double total_cost = 0.0;

  std::size_t size() const noexcept { return assignment.size(); }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t c : assignment) ++sizes.at(c);
    return sizes;
  }
};

namespace detail {

inline void check_k(const DissimilarityMatrix& d, std::size_t k) {
  if (k < 1 || k > d.size())
    throw UsageError("k = " + std::to_string(k) + " is outside [1, " + std::to_string(d.size()) +
                     "]");
}

/// Cost of a medoid set: sum over elements of the distance to the nearest medoid.
inline double medoid_cost(const DissimilarityMatrix& d, const std::vector<std::size_t>& medoids) {
  double cost = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, d(j, m));
    cost += best;
  }
  return cost;
}

}  // namespace detail

/// Greedy BUILD seeding. The first medoid minimizes the total dissimilarity
/// to all elements; each further medoid maximizes the total decrease in cost.
inline std::vector<std::size_t> pam_build(const DissimilarityMatrix& d, std::size_t k) {
  detail::check_k(d, k);
  const std::size_t n = d.size();
  std::vector<bool> is_medoid(n, false);
  std::vector<std::size_t> medoids;
  medoids.reserve(k);

  std::size_t first = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += d(j, i);
    if (sum < best_sum) {
      best_sum = sum;
      first = i;
    }
  }
  medoids.push_back(first);
  is_medoid[first] = true;

  std::vector<double> nearest(n);
  for (std::size_t j = 0; j < n; ++j) nearest[j] = d(j, first);

  while (medoids.size() < k) {
    std::size_t chosen = n;
    double best_gain = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_medoid[i]) continue;
      double gain = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (is_medoid[j] || j == i) continue;
        gain += std::max(nearest[j] - d(j, i), 0.0);
      }
      if (gain > best_gain) {
        best_gain = gain;
        chosen = i;
      }
    }
    medoids.push_back(chosen);
    is_medoid[chosen] = true;
    for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], d(j, chosen));
  }
  return medoids;
}

/// Assigns every element to its nearest medoid (ties: lowest medoid index).
/// Medoids always belong to their own cluster. `medoids` must be ascending.
inline std::vector<std::size_t> assign_to_medoids(const DissimilarityMatrix& d,
                                                  const std::vector<std::size_t>& medoids) {
  std::vector<std::size_t> assignment(d.size(), 0);
  for (std::size_t j = 0; j < d.size(); ++j) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < medoids.size(); ++c)
      if (d(j, medoids[c]) < d(j, medoids[best])) best = c;
    assignment[j] = best;
  }
  for (std::size_t c = 0; c < medoids.size(); ++c) assignment[medoids[c]] = c;
  return assignment;
}

/// Silhouette width of every element:
///   a(i) = mean dissimilarity to the other members of its cluster
///   b(i) = min over other clusters C of the mean dissimilarity to C
///   s(i) = (b(i) - a(i)) / max(a(i), b(i))
/// Elements of singleton clusters get s(i) = 0, as do a(i) = b(i) = 0 cases.
inline std::vector<double> silhouette(const DissimilarityMatrix& d,
                                      const std::vector<std::size_t>& assignment) {
  if (assignment.size() != d.size())
    throw UsageError("silhouette: assignment size does not match the matrix");
  if (assignment.empty()) throw UsageError("silhouette: no elements");
  const std::size_t k = *std::max_element(assignment.begin(), assignment.end()) + 1;
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t c : assignment) ++sizes[c];
  if (k < 2) throw UsageError("silhouette needs at least two clusters");
  for (std::size_t c = 0; c < k; ++c)
    if (sizes[c] == 0) throw UsageError("silhouette: cluster " + std::to_string(c) + " is empty");

  const std::size_t n = d.size();
  std::vector<double> s(n, 0.0);
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = assignment[i];
    if (sizes[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[assignment[j]] += d(i, j);
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return s;
}

namespace detail {

inline Clustering finish_clustering(const DissimilarityMatrix& d, std::vector<std::size_t> medoids) {
  std::sort(medoids.begin(), medoids.end());
  Clustering c;
  c.k = medoids.size();
  c.assignment = assign_to_medoids(d, medoids);
  c.medoids = std::move(medoids);
  c.total_cost = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) c.total_cost += d(j, c.medoids[c.assignment[j]]);
  if (c.k >= 2) {
    c.silhouettes = silhouette(d, c.assignment);
    c.avg_silhouette = std::accumulate(c.silhouettes.begin(), c.silhouettes.end(), 0.0) /
                       static_cast<double>(c.silhouettes.size());
  } else {
    c.silhouettes.assign(d.size(), 0.0);
    c.avg_silhouette = 0.0;
  }
  return c;
}

}  // namespace detail

struct PamTrace {
  std::vector<double> costs;   // total cost after BUILD and after every accepted swap
};

/// PAM: BUILD seeding, then the single best strictly cost-decreasing
/// (medoid, non-medoid) swap is applied until no swap improves the cost.
/// Swap ties go to the lowest medoid index, then the lowest candidate index.
inline Clustering pam(const DissimilarityMatrix& d, std::size_t k, PamTrace* trace = nullptr) {
  detail::check_k(d, k);
  const std::size_t n = d.size();
  std::vector<std::size_t> medoids = pam_build(d, k);
  std::sort(medoids.begin(), medoids.end());

  std::vector<bool> is_medoid(n, false);
  for (std::size_t m : medoids) is_medoid[m] = true;

  // nearest[j]: distance to the closest medoid; second[j]: to the next closest.
  std::vector<double> nearest(n);
  std::vector<double> second(n);
  std::vector<std::size_t> nearest_slot(n);
  const auto refresh = [&] {
    for (std::size_t j = 0; j < n; ++j) {
      double best = std::numeric_limits<double>::infinity();
      double next = std::numeric_limits<double>::infinity();
      std::size_t slot = 0;
      for (std::size_t s = 0; s < medoids.size(); ++s) {
        const double v = d(j, medoids[s]);
        if (v < best) {
          next = best;
          best = v;
          slot = s;
        } else if (v < next) {
          next = v;
        }
      }
      nearest[j] = best;
      second[j] = next;
      nearest_slot[j] = slot;
    }
  };
  refresh();
  double cost = 0.0;
  for (std::size_t j = 0; j < n; ++j) cost += nearest[j];
  if (trace) trace->costs.push_back(cost);

  if (k < n) {
    for (;;) {
      double best_cost = cost;
      std::size_t best_slot = k;
      std::size_t best_candidate = n;
      // medoids is ascending, so slot order is medoid-index order.
      for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t h = 0; h < n; ++h) {
          if (is_medoid[h]) continue;
          // Cost after replacing medoids[s] by h, summed in element order.
          double swapped = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double to_h = d(j, h);
            const double kept = nearest_slot[j] == s ? second[j] : nearest[j];
            swapped += std::min(kept, to_h);
          }
          if (swapped < best_cost) {
            best_cost = swapped;
            best_slot = s;
            best_candidate = h;
          }
        }
      }
      if (best_slot == k) break;
      is_medoid[medoids[best_slot]] = false;
      is_medoid[best_candidate] = true;
      medoids[best_slot] = best_candidate;
      std::sort(medoids.begin(), medoids.end());
      refresh();
      cost = 0.0;
      for (std::size_t j = 0; j < n; ++j) cost += nearest[j];
      if (trace) trace->costs.push_back(cost);
    }
  }
  return detail::finish_clustering(d, std::move(medoids));
}

inline constexpr std::size_t kDefaultMaxK = 25;

struct KRange {
  std::size_t min = 2;
  std::size_t max = 2;
};

/// [2, min(n - 1, 25)].
inline KRange default_k_range(std::size_t n) {
  return {2, std::min(n > 0 ? n - 1 : 0, kDefaultMaxK)};
}

struct KSelection {
  Clustering best;
  std::vector<std::pair<std::size_t, double>> scores;   // (k, average silhouette)
};

/// Runs pam for every k in [k_min, k_max] and keeps the clustering with the
/// largest average silhouette (ties: smaller k). Runs for distinct k are
/// independent and evaluated on up to `threads` worker threads.
inline KSelection select_k_detail(const DissimilarityMatrix& d, std::size_t k_min,
                                  std::size_t k_max, unsigned threads = 0) {
  if (k_min < 2 || k_min > k_max || d.size() < 1 || k_max > d.size() - 1)
    throw UsageError("k range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                     "] invalid for " + std::to_string(d.size()) +
                     " elements (need 2 <= k_min <= k_max <= n - 1)");
  const std::size_t count = k_max - k_min + 1;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));

  std::vector<Clustering> runs(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) runs[i] = pam(d, k_min + i);
  } else {
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < threads; ++w)
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < count; i += threads) runs[i] = pam(d, k_min + i);
      }));
    for (auto& f : workers) f.get();
  }

  KSelection out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < count; ++i) {
    out.scores.emplace_back(runs[i].k, runs[i].avg_silhouette);
    if (runs[i].avg_silhouette > runs[best].avg_silhouette) best = i;
  }
  out.best = std::move(runs[best]);
  return out;
}

inline Clustering select_k(const DissimilarityMatrix& d, std::size_t k_min, std::size_t k_max,
                           unsigned threads = 0) {
  return select_k_detail(d, k_min, k_max, threads).best;
}

// ---------------------------------------------------------------------------
// Clustering file format
//
//   # medoids <m0> <m1> ...        (optional comments)
//   # total_cost <c>
//   k <k>
//   avg_silhouette <s>
//   <index> <cluster_id> <silhouette>     (one line per element, index order)

inline void write_clustering(std::ostream& out, const Clustering& c) {
  out << "# medoids";
  for (std::size_t m : c.medoids) out << ' ' << m;
  out << '\n' << "# total_cost " << format_double(c.total_cost) << '\n';
  out << "k " << c.k << '\n' << "avg_silhouette " << format_double(c.avg_silhouette) << '\n';
  for (std::size_t i = 0; i < c.size(); ++i)
    out << i << ' ' << c.assignment[i] << ' ' << format_double(c.silhouettes[i]) << '\n';
}

inline Clustering read_clustering(const std::vector<std::string>& lines,
                                  const std::string& source = {}) {
  Clustering c;
  bool have_k = false;
  bool have_avg = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view t = trim(lines[i]);
    if (t.empty()) continue;
    const auto fields = split_ws(t);
    if (t.front() == '#') {
      if (fields.size() >= 2 && fields[1] == "medoids") {
        for (std::size_t f = 2; f < fields.size(); ++f) {
          const auto m = parse_int<std::size_t>(fields[f]);
          if (!m) throw ParseError(source, line_no, "malformed medoid index");
          c.medoids.push_back(*m);
        }
      } else if (fields.size() == 3 && fields[1] == "total_cost") {
        const auto v = parse_double(fields[2]);
        if (!v) throw ParseError(source, line_no, "malformed total_cost");
        c.total_cost = *v;
      }
      continue;
    }
    if (!have_k) {
      const auto k = fields.size() == 2 && fields[0] == "k" ? parse_int<std::size_t>(fields[1])
                                                            : std::nullopt;
      if (!k || *k == 0) throw ParseError(source, line_no, "expected 'k <count>' header line");
      c.k = *k;
      have_k = true;
      continue;
    }
    if (!have_avg) {
      const auto s = fields.size() == 2 && fields[0] == "avg_silhouette" ? parse_double(fields[1])
                                                                         : std::nullopt;
      if (!s) throw ParseError(source, line_no, "expected 'avg_silhouette <value>' header line");
      c.avg_silhouette = *s;
      have_avg = true;
      continue;
    }
    if (fields.size() != 3) throw ParseError(source, line_no, "expected '<index> <cluster> <silhouette>'");
    const auto idx = parse_int<std::size_t>(fields[0]);
    const auto cid = parse_int<std::size_t>(fields[1]);
    const auto sil = parse_double(fields[2]);
    if (!idx || !cid || !sil) throw ParseError(source, line_no, "malformed element line");
    if (*idx != c.assignment.size())
      throw ParseError(source, line_no, "element indices must be consecutive from 0");
    if (*cid >= c.k) throw ParseError(source, line_no, "cluster id out of range [0, k)");
    if (*sil < -1.0 || *sil > 1.0) throw ParseError(source, line_no, "silhouette outside [-1, 1]");
    c.assignment.push_back(*cid);
    c.silhouettes.push_back(*sil);
  }
  if (!have_k || !have_avg) throw ParseError(source, lines.size(), "missing clustering header");
  if (c.assignment.empty()) throw ParseError(source, lines.size(), "clustering has no elements");
  if (!c.medoids.empty() && c.medoids.size() != c.k)
    throw ParseError(source, 0, "medoid count does not match k");
  return c;
}

}  // namespace querysieve
