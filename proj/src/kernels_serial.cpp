#include <stdexcept>

#include "kernels_common.hpp"

namespace cast {

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

namespace kernels::serial {

NeighborLists knn_cosine(const MatrixD& unit_rows, std::size_t k) {
  const std::size_t n = unit_rows.rows();
  if (k == 0 || k >= n) throw std::invalid_argument("knn_cosine: need 0 < k < n");
  NeighborLists out{k, std::vector<std::size_t>(n * k), std::vector<double>(n * k)};
  std::vector<std::pair<double, std::size_t>> scratch;
  scratch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) detail::knn_row(unit_rows, i, k, scratch, out);
  return out;
}

std::vector<double> kth_neighbor_distance(const MatrixD& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (k == 0 || k >= n) throw std::invalid_argument("kth_neighbor_distance: need 0 < k < n");
  std::vector<double> out(n);
  std::vector<double> scratch;
  scratch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::kth_row(points, i, k, scratch);
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
  for (std::size_t k = 0; k < word_of.size(); ++k) {
    const auto w = word_of[k];
    detail::accumulate_occurrence(vectors.row(k), out.sums.row(w), out.unit_sums.row(w),
                                  out.unit_sq_norms[w]);
    ++out.counts[w];
  }
  return out;
}

}  // namespace kernels::serial
}  // namespace cast
