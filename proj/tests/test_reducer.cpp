#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cast/error.hpp"
#include "cast/reducer.hpp"
#include "support.hpp"

namespace {

// Cyclic Jacobi eigen-decomposition of a symmetric matrix: eigenvalues
// descending, eigenvectors as columns of `vectors`.
void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& values,
                  std::vector<std::vector<double>>& vectors) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
  values.clear();
  vectors.assign(n, std::vector<double>(n));
  for (std::size_t c = 0; c < n; ++c) {
    values.push_back(a[order[c]][order[c]]);
    for (std::size_t k = 0; k < n; ++k) vectors[k][c] = v[k][order[c]];
  }
}

cast::MatrixF blobs(std::size_t per_blob, std::size_t n_blobs, std::size_t dim, std::uint64_t seed,
                    std::vector<int>* truth = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const auto centres = testing::unit_rows(testing::gaussian_rows(n_blobs, dim, seed + 1));
  cast::MatrixD m(per_blob * n_blobs, dim);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto b = i % n_blobs;
    for (std::size_t d = 0; d < dim; ++d) m(i, d) = centres(b, d) + 0.08 * g(rng);
    if (truth) truth->push_back(static_cast<int>(b));
  }
  return testing::to_float(testing::unit_rows(m));
}

}  // namespace

TEST_CASE("PCA matches a Jacobi eigensolver oracle") {
  const auto x = testing::to_float(testing::gaussian_rows(80, 6, 4));
  const std::size_t n = x.rows(), dim = x.cols();
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += x(i, d) / static_cast<double>(n);
  std::vector<std::vector<double>> cov(dim, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < dim; ++p)
      for (std::size_t q = 0; q < dim; ++q)
        cov[p][q] += (x(i, p) - mean[p]) * (x(i, q) - mean[q]) / static_cast<double>(n - 1);
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  jacobi_eigen(cov, values, vectors);

  const auto pca = cast::reduce_pca(x, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(pca.component_variances[c] == doctest::Approx(values[c]).epsilon(1e-9));
    std::size_t argmax = 0;
    for (std::size_t k = 0; k < dim; ++k)
      if (std::abs(vectors[k][c]) > std::abs(vectors[argmax][c])) argmax = k;
    const double sign = vectors[argmax][c] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double proj = 0.0;
      for (std::size_t k = 0; k < dim; ++k) proj += (x(i, k) - mean[k]) * vectors[k][c] * sign;
      CHECK(std::abs(pca.points(i, c) - proj) < 1e-9);
    }
  }
}

TEST_CASE("PCA output has descending variances and zero rank-deficient axes") {
  cast::MatrixD m(10, 4);
  for (std::size_t i = 0; i < 10; ++i) {
    m(i, 0) = static_cast<double>(i);
    m(i, 1) = 2.0 * static_cast<double>(i);  // collinear: rank 1
  }
  const auto pca = cast::reduce_pca(testing::to_float(m), 3);
  CHECK(pca.component_variances[0] > 0.0);
  CHECK(pca.component_variances[1] == 0.0);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(pca.points(i, 1) == 0.0);
    CHECK(pca.points(i, 2) == 0.0);
  }
  CHECK_THROWS_AS(cast::reduce_pca(testing::to_float(m), 0), cast::Error);
}

TEST_CASE("fit_ab matches scipy curve_fit") {
  const struct {
    double min_dist, a, b;
  } cases[] = {{0.1, 1.5769434602697652, 0.8950608778515733},
               {0.0, 1.93280839734315, 0.7904949732233831},
               {0.5, 0.5830300203414425, 1.3341669924314914}};
  for (const auto& c : cases) {
    const auto ab = cast::umap::fit_ab(1.0, c.min_dist);
    CHECK(ab.a == doctest::Approx(c.a).epsilon(1e-5));
    CHECK(ab.b == doctest::Approx(c.b).epsilon(1e-5));
  }
}

TEST_CASE("smooth kNN calibrates each neighbourhood to log2(k)") {
  const auto x = testing::unit_rows(testing::gaussian_rows(100, 10, 8));
  const auto knn = cast::kernels::serial::knn_cosine(x, 15);
  const auto s = cast::umap::smooth_knn(knn);
  for (std::size_t i = 0; i < knn.size(); ++i) {
    double sum = 0.0;
    for (double d : knn.dists(i)) sum += std::exp(-std::max(0.0, d - s.rho[i]) / s.sigma[i]);
    CHECK(std::abs(sum - std::log2(15.0)) < 1e-6);
    CHECK(s.rho[i] == knn.dists(i)[0]);
  }
}

TEST_CASE("fuzzy graph is symmetric with memberships in (0, 1]") {
  const auto x = testing::unit_rows(testing::gaussian_rows(90, 6, 12));
  const auto g = cast::umap::build_fuzzy_graph(x, 10);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
      const auto j = g.columns[e];
      CHECK(g.weights[e] > 0.0);
      CHECK(g.weights[e] <= 1.0);
      CHECK(g.weight(j, i) == g.weights[e]);
    }
    CHECK(g.weight(i, g.knn.neighbors(i)[0]) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(cast::umap::build_fuzzy_graph(x, 10, cast::Exec::serial).weights == g.weights);
}

TEST_CASE("spectral layout is scaled to [0, 10]") {
  const auto x = cast::umap::normalize_rows(blobs(30, 3, 12, 3));
  const auto g = cast::umap::build_fuzzy_graph(x, 10);
  const auto layout = cast::umap::spectral_layout(g, 2, 1);
  REQUIRE(layout.has_value());
  for (std::size_t c = 0; c < 2; ++c) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < layout->rows(); ++i) {
      lo = std::min(lo, (*layout)(i, c));
      hi = std::max(hi, (*layout)(i, c));
    }
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(10.0));
  }
}

TEST_CASE("UMAP is seed-deterministic and lowers the cross-entropy") {
  std::vector<int> truth;
  const auto x = blobs(40, 3, 16, 5, &truth);
  cast::ReduceParams params;
  params.n_components = 2;
  params.seed = 3;
  const auto a = cast::reduce_umap(x, params);
  const auto b = cast::reduce_umap(x, params);
  CHECK(a.points == b.points);
  CHECK_FALSE(a.spectral_init_failed);
  params.seed = 4;
  CHECK(cast::reduce_umap(x, params).points != a.points);

  const auto unit = cast::umap::normalize_rows(x);
  const auto g = cast::umap::build_fuzzy_graph(unit, params.n_neighbors);
  const auto curve = cast::umap::fit_ab(1.0, 0.1);
  const auto init = *cast::umap::spectral_layout(g, 2, 3);
  CHECK(cast::umap::cross_entropy(g, a.points, curve) < cast::umap::cross_entropy(g, init, curve));

  // Nearest neighbour in the layout shares the blob.
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.points.rows(); ++i) {
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < a.points.rows(); ++j) {
      if (j != i && cast::euclidean(a.points.row(i), a.points.row(j)) <
                        cast::euclidean(a.points.row(i), a.points.row(best)))
        best = j;
    }
    agree += truth[i] == truth[best];
  }
  CHECK(agree == a.points.rows());
}

TEST_CASE("reducer parameter validation") {
  const auto x = blobs(5, 2, 8, 1);
  cast::ReduceParams params;
  CHECK_THROWS_AS(cast::reduce_umap(x, params), cast::Error);  // 10 points <= 15 neighbours
  params.n_components = 1;
  CHECK_THROWS_AS(params.validate(), cast::Error);
  CHECK(cast::parse_reduce_method("pca") == cast::ReduceMethod::pca);
  CHECK_THROWS_AS(cast::parse_reduce_method("tsne"), cast::Error);
}
