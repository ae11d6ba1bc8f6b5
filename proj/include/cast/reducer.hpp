#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cast/kernels.hpp"
#include "cast/matrix.hpp"
#include "cast/word_aggregation.hpp"

namespace cast {

enum class ReduceMethod { pca, umap };

std::string to_string(ReduceMethod method);
ReduceMethod parse_reduce_method(const std::string& name);

struct ReduceParams {
  ReduceMethod method = ReduceMethod::umap;
  std::size_t n_components = 5;
  std::size_t n_neighbors = 15;  // cosine metric
  double min_dist = 0.1;
  double spread = 1.0;
  std::size_t n_epochs = 200;
  double negative_sample_rate = 5.0;
  std::uint64_t seed = 42;
  bool parallel_layout = false;  // multi-threaded SGD, not bit-reproducible

  void validate() const;
};

struct ReducedEmbeddings {
  MatrixD points;  // n x n_components
  ReduceMethod method = ReduceMethod::pca;
  ReduceParams params;
  std::vector<double> component_variances;  // PCA only
  bool spectral_init_failed = false;        // UMAP only
};

/// Mean-centres the rows and projects them on the leading principal axes.
/// Each axis is signed so its largest-magnitude loading is positive; axes
/// without variance (rank deficiency) come out as zero columns.
ReducedEmbeddings reduce_pca(const MatrixF& doc_embeddings, std::size_t n_components);

/// Fuzzy k-NN graph used by the UMAP reducer.
struct FuzzyGraph {
  NeighborLists knn;
  std::vector<double> rho;    // distance to nearest neighbour
  std::vector<double> sigma;  // per-point bandwidth
  // Symmetrized memberships in CSR form; rows sorted by column.
  std::vector<std::size_t> row_offsets;
  std::vector<std::size_t> columns;
  std::vector<double> weights;

  std::size_t size() const noexcept { return rho.size(); }
  /// Symmetrized membership of (i, j); 0 when no edge.
  double weight(std::size_t i, std::size_t j) const;
};

namespace umap {

struct SmoothKnn {
  std::vector<double> rho;
  std::vector<double> sigma;
};

/// Per-point rho and sigma such that sum_j exp(-(d_j - rho) / sigma) = log2(k).
SmoothKnn smooth_knn(const NeighborLists& knn);

FuzzyGraph build_fuzzy_graph(const MatrixD& unit_rows, std::size_t n_neighbors,
                             Exec exec = Exec::parallel);

struct CurveParams {
  double a = 0.0;
  double b = 0.0;
};

/// Least-squares fit of 1 / (1 + a x^(2b)) to the min_dist/spread target curve.
CurveParams fit_ab(double spread, double min_dist);

/// Leading non-trivial eigenvectors of the normalized graph adjacency, rescaled
/// to [0, 10] per axis. Returns nullopt when the eigensolve fails.
std::optional<MatrixD> spectral_layout(const FuzzyGraph& graph, std::size_t n_components,
                                       std::uint64_t seed);

MatrixD random_layout(std::size_t n, std::size_t n_components, std::uint64_t seed);

/// Negative-sampling SGD on the fuzzy cross-entropy, learning rate 1 -> 0.
MatrixD optimize_layout(const FuzzyGraph& graph, MatrixD embedding, const CurveParams& curve,
                        const ReduceParams& params);

/// Fuzzy set cross-entropy between graph memberships and the layout's
/// low-dimensional memberships, summed over all unordered pairs.
double cross_entropy(const FuzzyGraph& graph, const MatrixD& embedding, const CurveParams& curve);

MatrixD normalize_rows(const MatrixF& rows);

}  // namespace umap

/// Neighbourhood-preserving reduction: exact cosine kNN graph, fuzzy union,
/// spectral initialisation, seeded SGD layout. Requires n > n_neighbors.
ReducedEmbeddings reduce_umap(const MatrixF& doc_embeddings, const ReduceParams& params);

/// Dispatches on params.method.
ReducedEmbeddings reduce(const MatrixF& doc_embeddings, const ReduceParams& params);

}  // namespace cast
