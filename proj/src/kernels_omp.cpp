#include <stdexcept>

#include <omp.h>

#include "kernels_common.hpp"

namespace cast::kernels::omp {

NeighborLists knn_cosine(const MatrixD& unit_rows, std::size_t k) {
  const std::size_t n = unit_rows.rows();
  if (k == 0 || k >= n) throw std::invalid_argument("knn_cosine: need 0 < k < n");
  NeighborLists out{k, std::vector<std::size_t>(n * k), std::vector<double>(n * k)};
#pragma omp parallel
  {
    std::vector<std::pair<double, std::size_t>> scratch;
    scratch.reserve(n);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) detail::knn_row(unit_rows, i, k, scratch, out);
  }
  return out;
}

std::vector<double> kth_neighbor_distance(const MatrixD& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (k == 0 || k >= n) throw std::invalid_argument("kth_neighbor_distance: need 0 < k < n");
  std::vector<double> out(n);
#pragma omp parallel
  {
    std::vector<double> scratch;
    scratch.reserve(n);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) out[i] = detail::kth_row(points, i, k, scratch);
  }
  return out;
}

std::vector<Edge> prim_mst(const MatrixD& points, std::span<const double> core) {
  const std::size_t n = points.rows();
  std::vector<Edge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, 0);

  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    // Relaxation touches disjoint entries per j.
#pragma omp parallel for schedule(static)
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = detail::mutual_reachability(points, core, current, j);
      if (w < best[j]) {
        best[j] = w;
        parent[j] = current;
      }
    }
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && (next == n || best[j] < best[next])) next = j;
    }
    in_tree[next] = 1;
    edges.push_back({parent[next], next, best[next]});
    current = next;
  }
  return edges;
}

WordSums word_sums(const MatrixF& vectors, std::span<const std::size_t> word_of,
                   std::size_t n_words) {
  const std::size_t dim = vectors.cols();
  WordSums out{MatrixD(n_words, dim), MatrixD(n_words, dim), std::vector<double>(n_words, 0.0),
               std::vector<std::size_t>(n_words, 0)};
  std::vector<std::size_t> order;
  const auto offsets = detail::group_offsets(word_of, n_words, order);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t w = 0; w < n_words; ++w) {
    for (std::size_t p = offsets[w]; p < offsets[w + 1]; ++p) {
      detail::accumulate_occurrence(vectors.row(order[p]), out.sums.row(w), out.unit_sums.row(w),
                                    out.unit_sq_norms[w]);
    }
    out.counts[w] = offsets[w + 1] - offsets[w];
  }
  return out;
}

}  // namespace cast::kernels::omp
