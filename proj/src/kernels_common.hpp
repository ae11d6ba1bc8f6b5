#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "cast/kernels.hpp"

namespace cast::kernels::detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
  return s;
}

// Row i of a cosine kNN: all other points ordered by (distance, index), first k kept.
inline void knn_row(const MatrixD& unit_rows, std::size_t i, std::size_t k,
                    std::vector<std::pair<double, std::size_t>>& scratch, NeighborLists& out) {
  const std::size_t n = unit_rows.rows();
  scratch.clear();
  const auto ri = unit_rows.row(i);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    scratch.emplace_back(std::max(0.0, 1.0 - dot(ri, unit_rows.row(j))), j);
  }
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                    scratch.end());
  for (std::size_t r = 0; r < k; ++r) {
    out.distances[i * k + r] = scratch[r].first;
    out.indices[i * k + r] = scratch[r].second;
  }
}

inline double kth_row(const MatrixD& points, std::size_t i, std::size_t k,
                      std::vector<double>& scratch) {
  scratch.clear();
  const auto ri = points.row(i);
  for (std::size_t j = 0; j < points.rows(); ++j) {
    if (j != i) scratch.push_back(euclidean(ri, points.row(j)));
  }
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   scratch.end());
  return scratch[k - 1];
}

inline double mutual_reachability(const MatrixD& points, std::span<const double> core,
                                  std::size_t a, std::size_t b) {
  return std::max({core[a], core[b], euclidean(points.row(a), points.row(b))});
}

inline void accumulate_occurrence(std::span<const float> v, std::span<double> sum,
                                  std::span<double> unit_sum, double& unit_sq) {
  double n2 = 0.0;
  for (float x : v) n2 += static_cast<double>(x) * x;
  const double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
  double u2 = 0.0;
  for (std::size_t d = 0; d < v.size(); ++d) {
    sum[d] += v[d];
    const double u = v[d] * inv;
    unit_sum[d] += u;
    u2 += u * u;
  }
  unit_sq += u2;
}

// Bucket occurrences by word, preserving stream order inside each bucket.
inline std::vector<std::size_t> group_offsets(std::span<const std::size_t> word_of,
                                              std::size_t n_words,
                                              std::vector<std::size_t>& order) {
  std::vector<std::size_t> offsets(n_words + 1, 0);
  for (auto w : word_of) ++offsets[w + 1];
  for (std::size_t w = 0; w < n_words; ++w) offsets[w + 1] += offsets[w];
  order.assign(word_of.size(), 0);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t k = 0; k < word_of.size(); ++k) order[cursor[word_of[k]]++] = k;
  return offsets;
}

}  // namespace cast::kernels::detail
