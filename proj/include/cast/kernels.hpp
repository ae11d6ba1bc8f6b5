#pragma once

// Data-parallel inner loops of the pipeline. Every kernel exists twice:
// `serial` is the plain reference, `omp` distributes independent per-point
// (or per-word) work across OpenMP threads. Each output element is computed
// by exactly one thread in a fixed order, so both variants agree bit-for-bit.

#include <cstddef>
#include <span>
#include <vector>

#include "cast/matrix.hpp"

namespace cast {

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

/// k nearest neighbours per row, self excluded, ascending by distance with
/// ties broken by lower index.
struct NeighborLists {
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // n x k
  std::vector<double> distances;     // n x k

  std::size_t size() const noexcept { return k == 0 ? 0 : indices.size() / k; }
  std::span<const std::size_t> neighbors(std::size_t i) const { return {indices.data() + i * k, k}; }
  std::span<const double> dists(std::size_t i) const { return {distances.data() + i * k, k}; }

  bool operator==(const NeighborLists&) const = default;
};

/// Per-word running sums over an occurrence stream, accumulated in stream order.
struct WordSums {
  MatrixD sums;                       // n_words x dim, sum of occurrence vectors as stored
  MatrixD unit_sums;                  // n_words x dim, sum after re-normalizing in double
  std::vector<double> unit_sq_norms;  // per word, sum of squared norms of the re-normalized vectors
  std::vector<std::size_t> counts;    // per word, number of occurrences
};

double euclidean(std::span<const double> a, std::span<const double> b);

namespace kernels::serial {

NeighborLists knn_cosine(const MatrixD& unit_rows, std::size_t k);
std::vector<double> kth_neighbor_distance(const MatrixD& points, std::size_t k);
std::vector<Edge> prim_mst(const MatrixD& points, std::span<const double> core);
WordSums word_sums(const MatrixF& vectors, std::span<const std::size_t> word_of,
                   std::size_t n_words);

}  // namespace kernels::serial

namespace kernels::omp {

NeighborLists knn_cosine(const MatrixD& unit_rows, std::size_t k);
std::vector<double> kth_neighbor_distance(const MatrixD& points, std::size_t k);
std::vector<Edge> prim_mst(const MatrixD& points, std::span<const double> core);
WordSums word_sums(const MatrixF& vectors, std::span<const std::size_t> word_of,
                   std::size_t n_words);

}  // namespace kernels::omp

}  // namespace cast
