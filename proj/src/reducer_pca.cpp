#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "cast/error.hpp"
#include "cast/reducer.hpp"

namespace cast {

std::string to_string(ReduceMethod method) { return method == ReduceMethod::pca ? "pca" : "umap"; }

ReduceMethod parse_reduce_method(const std::string& name) {
  if (name == "pca") return ReduceMethod::pca;
  if (name == "umap") return ReduceMethod::umap;
  throw usage_error("unknown reducer '" + name + "' (expected umap or pca)");
}

void ReduceParams::validate() const {
  if (n_components < 2) throw usage_error("n_components must be >= 2");
  if (n_neighbors < 2) throw usage_error("n_neighbors must be >= 2");
  if (!(min_dist >= 0.0) || !(spread > 0.0) || min_dist > spread) {
    throw usage_error("need 0 <= min_dist <= spread and spread > 0");
  }
  if (n_epochs < 1) throw usage_error("n_epochs must be >= 1");
  if (!(negative_sample_rate > 0.0)) throw usage_error("negative_sample_rate must be > 0");
}

ReducedEmbeddings reduce_pca(const MatrixF& doc_embeddings, std::size_t n_components) {
  const std::size_t n = doc_embeddings.rows();
  const std::size_t dim = doc_embeddings.cols();
  if (n_components < 1) throw usage_error("n_components must be >= 1");
  if (n < n_components) {
    throw usage_error("PCA needs at least n_components points (" + std::to_string(n) + " < " +
                      std::to_string(n_components) + ")");
  }

  Eigen::MatrixXd x(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) x(i, d) = doc_embeddings(i, d);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const Eigen::MatrixXd cov = (x.transpose() * x) / denom;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw data_error("PCA eigendecomposition failed");
  const auto& values = solver.eigenvalues();  // ascending
  const auto& vectors = solver.eigenvectors();
  const double top = dim > 0 ? std::max(values(dim - 1), 0.0) : 0.0;
  const double floor = 1e-12 * std::max(1.0, top);

  ReducedEmbeddings out;
  out.method = ReduceMethod::pca;
  out.params.method = ReduceMethod::pca;
  out.params.n_components = n_components;
  out.points = MatrixD(n, n_components, 0.0);
  out.component_variances.assign(n_components, 0.0);
  for (std::size_t c = 0; c < n_components && c < dim; ++c) {
    const auto col = static_cast<Eigen::Index>(dim - 1 - c);
    const double variance = values(col);
    if (variance <= floor) break;  // trailing axes stay zero
    Eigen::VectorXd axis = vectors.col(col);
    Eigen::Index argmax = 0;
    axis.cwiseAbs().maxCoeff(&argmax);
    if (axis(argmax) < 0) axis = -axis;
    const Eigen::VectorXd projected = x * axis;
    for (std::size_t i = 0; i < n; ++i) out.points(i, c) = projected(static_cast<Eigen::Index>(i));
    out.component_variances[c] = variance;
  }
  return out;
}

ReducedEmbeddings reduce(const MatrixF& doc_embeddings, const ReduceParams& params) {
  params.validate();
  if (params.method == ReduceMethod::pca) {
    auto out = reduce_pca(doc_embeddings, params.n_components);
    out.params = params;
    return out;
  }
  return reduce_umap(doc_embeddings, params);
}

}  // namespace cast
