#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <omp.h>

#include "cast/error.hpp"
#include "cast/reducer.hpp"

namespace cast {

double FuzzyGraph::weight(std::size_t i, std::size_t j) const {
  const auto begin = columns.begin() + static_cast<std::ptrdiff_t>(row_offsets[i]);
  const auto end = columns.begin() + static_cast<std::ptrdiff_t>(row_offsets[i + 1]);
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return weights[static_cast<std::size_t>(it - columns.begin())];
}

namespace umap {
namespace {

constexpr double kSigmaTolerance = 1e-7;
constexpr int kSigmaIterations = 200;
constexpr double kGradientClip = 4.0;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

double clip(double v) { return std::clamp(v, -kGradientClip, kGradientClip); }

double membership_sum(std::span<const double> dists, double rho, double sigma) {
  double s = 0.0;
  for (double d : dists) s += std::exp(-std::max(0.0, d - rho) / sigma);
  return s;
}

void rescale_columns(MatrixD& m, double extent) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      lo = std::min(lo, m(i, c));
      hi = std::max(hi, m(i, c));
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      m(i, c) = span > 0.0 ? extent * (m(i, c) - lo) / span : 0.0;
    }
  }
}

struct DirectedEdge {
  std::size_t head;
  std::size_t tail;
  double epochs_per_sample;
};

}  // namespace

MatrixD normalize_rows(const MatrixF& rows) {
  MatrixD out(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    double n2 = 0.0;
    for (float x : rows.row(i)) n2 += static_cast<double>(x) * x;
    const double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
    auto dst = out.row(i);
    const auto src = rows.row(i);
    for (std::size_t d = 0; d < rows.cols(); ++d) dst[d] = src[d] * inv;
  }
  return out;
}

SmoothKnn smooth_knn(const NeighborLists& knn) {
  const std::size_t n = knn.size();
  const double target = std::log2(static_cast<double>(knn.k));
  SmoothKnn out{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto dists = knn.dists(i);
    const double rho = dists[0];
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double mid = 1.0;
    for (int it = 0; it < kSigmaIterations; ++it) {
      const double s = membership_sum(dists, rho, mid);
      if (std::abs(s - target) < kSigmaTolerance) break;
      if (s > target) {
        hi = mid;
        mid = 0.5 * (lo + hi);
      } else {
        lo = mid;
        mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
      }
    }
    // Degenerate neighbourhoods (many ties at rho) cannot reach the target;
    // keep sigma away from zero.
    mid = std::max(mid, 1e-12);
    out.rho[i] = rho;
    out.sigma[i] = mid;
  }
  return out;
}

FuzzyGraph build_fuzzy_graph(const MatrixD& unit_rows, std::size_t n_neighbors, Exec exec) {
  const std::size_t n = unit_rows.rows();
  FuzzyGraph g;
  g.knn = exec == Exec::parallel ? kernels::omp::knn_cosine(unit_rows, n_neighbors)
                                 : kernels::serial::knn_cosine(unit_rows, n_neighbors);
  auto smooth = smooth_knn(g.knn);
  g.rho = std::move(smooth.rho);
  g.sigma = std::move(smooth.sigma);

  // Directed memberships, rows sorted by column for lookup.
  std::vector<std::vector<std::pair<std::size_t, double>>> directed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = g.knn.neighbors(i);
    const auto ds = g.knn.dists(i);
    for (std::size_t r = 0; r < g.knn.k; ++r) {
      directed[i].emplace_back(nb[r], std::exp(-std::max(0.0, ds[r] - g.rho[i]) / g.sigma[i]));
    }
    std::sort(directed[i].begin(), directed[i].end());
  }
  auto directed_weight = [&](std::size_t i, std::size_t j) {
    const auto& row = directed[i];
    const auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(j, -1.0));
    return (it != row.end() && it->first == j) ? it->second : 0.0;
  };

  std::vector<std::vector<std::size_t>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : directed[i]) {
      adjacency[i].push_back(j);
      adjacency[j].push_back(i);
    }
  }
  g.row_offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = adjacency[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (std::size_t j : row) {
      const double a = directed_weight(i, j);
      const double b = directed_weight(j, i);
      // (a + b) - a * b is bitwise symmetric in a and b.
      const double w = (a + b) - a * b;
      if (w <= 0.0) continue;
      g.columns.push_back(j);
      g.weights.push_back(w);
    }
    g.row_offsets[i + 1] = g.columns.size();
  }
  return g;
}

CurveParams fit_ab(double spread, double min_dist) {
  constexpr int kSamples = 300;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (int s = 0; s < kSamples; ++s) {
    xs[s] = 3.0 * spread * s / (kSamples - 1);
    ys[s] = xs[s] < min_dist ? 1.0 : std::exp(-(xs[s] - min_dist) / spread);
  }
  auto residual_sq = [&](double a, double b) {
    double r = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      const double f = 1.0 / (1.0 + a * std::pow(xs[s], 2.0 * b));
      r += (f - ys[s]) * (f - ys[s]);
    }
    return r;
  };

  // Levenberg-Marquardt on (a, b).
  double a = 1.0, b = 1.0, lambda = 1e-3;
  double cost = residual_sq(a, b);
  for (int it = 0; it < 500; ++it) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (int s = 0; s < kSamples; ++s) {
      const double x = xs[s];
      const double p = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double denom = 1.0 + a * p;
      const double f = 1.0 / denom;
      const double da = -p / (denom * denom);
      const double db = x > 0.0 ? -a * p * 2.0 * std::log(x) / (denom * denom) : 0.0;
      const Eigen::Vector2d j(da, db);
      jtj += j * j.transpose();
      jtr += j * (f - ys[s]);
    }
    Eigen::Matrix2d damped = jtj;
    damped.diagonal() *= (1.0 + lambda);
    const Eigen::Vector2d step = damped.ldlt().solve(-jtr);
    const double na = a + step(0), nb = b + step(1);
    const double ncost = (na > 0.0 && nb > 0.0) ? residual_sq(na, nb)
                                                : std::numeric_limits<double>::infinity();
    if (ncost < cost) {
      const bool converged = cost - ncost < 1e-16 * std::max(1.0, cost) && step.norm() < 1e-12;
      a = na;
      b = nb;
      cost = ncost;
      lambda *= 0.3;
      if (converged) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

std::optional<MatrixD> spectral_layout(const FuzzyGraph& graph, std::size_t n_components,
                                       std::uint64_t seed) {
  const std::size_t n = graph.size();
  if (n <= n_components + 1) return std::nullopt;

  Eigen::VectorXd inv_sqrt_deg(n);
  Eigen::VectorXd trivial(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t p = graph.row_offsets[i]; p < graph.row_offsets[i + 1]; ++p) {
      deg += graph.weights[p];
    }
    if (!(deg > 0.0)) return std::nullopt;
    inv_sqrt_deg(i) = 1.0 / std::sqrt(deg);
    trivial(i) = std::sqrt(deg);
  }
  trivial.normalize();

  // Subspace iteration on (I + D^-1/2 W D^-1/2) / 2, whose top eigenvectors are
  // the bottom eigenvectors of the normalized Laplacian. The trivial
  // eigenvector sqrt(deg) is projected out.
  const auto block = static_cast<Eigen::Index>(std::min(n - 1, n_components + 4));
  auto apply = [&](const Eigen::MatrixXd& v) {
    Eigen::MatrixXd scaled = inv_sqrt_deg.asDiagonal() * v;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(v.rows(), v.cols());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = graph.row_offsets[i]; p < graph.row_offsets[i + 1]; ++p) {
        out.row(static_cast<Eigen::Index>(i)) +=
            graph.weights[p] * scaled.row(static_cast<Eigen::Index>(graph.columns[p]));
      }
    }
    out = inv_sqrt_deg.asDiagonal() * out;
    return Eigen::MatrixXd(0.5 * (v + out));
  };
  auto deflate_orthonormalize = [&](Eigen::MatrixXd& v) {
    v -= trivial * (trivial.transpose() * v);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
    v = qr.householderQ() * Eigen::MatrixXd::Identity(v.rows(), v.cols());
  };

  std::mt19937_64 rng(seed ^ 0x5DEECE66Dull);
  Eigen::MatrixXd v(static_cast<Eigen::Index>(n), block);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index c = 0; c < block; ++c) v(i, c) = uniform01(rng) - 0.5;
  }
  deflate_orthonormalize(v);
  const int iterations = 300;
  for (int it = 0; it < iterations; ++it) {
    v = apply(v);
    deflate_orthonormalize(v);
  }
  // Rayleigh-Ritz to order the block by eigenvalue.
  const Eigen::MatrixXd mv = apply(v);
  const Eigen::MatrixXd small = v.transpose() * mv;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (small + small.transpose()));
  if (solver.info() != Eigen::Success) return std::nullopt;
  const Eigen::MatrixXd ritz = v * solver.eigenvectors();  // ascending eigenvalues

  MatrixD out(n, n_components);
  for (std::size_t c = 0; c < n_components; ++c) {
    const auto col = block - 1 - static_cast<Eigen::Index>(c);
    Eigen::VectorXd vec = ritz.col(col);
    Eigen::Index argmax = 0;
    vec.cwiseAbs().maxCoeff(&argmax);
    if (vec(argmax) < 0) vec = -vec;
    for (std::size_t i = 0; i < n; ++i) out(i, c) = vec(static_cast<Eigen::Index>(i));
  }
  for (double x : out.data()) {
    if (!std::isfinite(x)) return std::nullopt;
  }
  rescale_columns(out, 10.0);
  return out;
}

MatrixD random_layout(std::size_t n, std::size_t n_components, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5A5A5A5A5ull);
  MatrixD out(n, n_components);
  for (double& x : out.data()) x = 20.0 * uniform01(rng) - 10.0;
  rescale_columns(out, 10.0);
  return out;
}

MatrixD optimize_layout(const FuzzyGraph& graph, MatrixD embedding, const CurveParams& curve,
                        const ReduceParams& params) {
  const std::size_t n = graph.size();
  const std::size_t dim = embedding.cols();
  const double a = curve.a;
  const double b = curve.b;
  const double n_epochs = static_cast<double>(params.n_epochs);

  double max_w = 0.0;
  for (double w : graph.weights) max_w = std::max(max_w, w);
  std::vector<DirectedEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = graph.row_offsets[i]; p < graph.row_offsets[i + 1]; ++p) {
      const double w = graph.weights[p];
      if (w < max_w / n_epochs) continue;
      edges.push_back({i, graph.columns[p], max_w / w});
    }
  }
  const std::size_t n_edges = edges.size();
  std::vector<double> next_sample(n_edges), per_negative(n_edges), next_negative(n_edges);
  for (std::size_t e = 0; e < n_edges; ++e) {
    next_sample[e] = edges[e].epochs_per_sample;
    per_negative[e] = edges[e].epochs_per_sample / params.negative_sample_rate;
    next_negative[e] = per_negative[e];
  }

  auto attract = [&](std::size_t e, double alpha) {
    auto current = embedding.row(edges[e].head);
    auto other = embedding.row(edges[e].tail);
    double dist2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) dist2 += (current[d] - other[d]) * (current[d] - other[d]);
    double coeff = 0.0;
    if (dist2 > 0.0) {
      coeff = -2.0 * a * b * std::pow(dist2, b - 1.0) / (a * std::pow(dist2, b) + 1.0);
    }
    for (std::size_t d = 0; d < dim; ++d) {
      const double grad = clip(coeff * (current[d] - other[d]));
      current[d] += grad * alpha;
      other[d] -= grad * alpha;
    }
  };
  auto repel = [&](std::size_t head, std::size_t k, double alpha) {
    auto current = embedding.row(head);
    const auto other = embedding.row(k);
    double dist2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) dist2 += (current[d] - other[d]) * (current[d] - other[d]);
    double coeff = 0.0;
    if (dist2 > 0.0) {
      coeff = 2.0 * b / ((0.001 + dist2) * (a * std::pow(dist2, b) + 1.0));
    } else if (head == k) {
      return;
    }
    for (std::size_t d = 0; d < dim; ++d) {
      const double grad = coeff > 0.0 ? clip(coeff * (current[d] - other[d])) : kGradientClip;
      current[d] += grad * alpha;
    }
  };
  auto process_edge = [&](std::size_t e, double epoch, double alpha, std::mt19937_64& rng) {
    if (next_sample[e] > epoch) return;
    attract(e, alpha);
    next_sample[e] += edges[e].epochs_per_sample;
    const auto n_neg = static_cast<std::size_t>((epoch - next_negative[e]) / per_negative[e]);
    for (std::size_t s = 0; s < n_neg; ++s) repel(edges[e].head, rng() % n, alpha);
    next_negative[e] += static_cast<double>(n_neg) * per_negative[e];
  };

  std::mt19937_64 rng(params.seed);
  for (std::size_t epoch = 0; epoch < params.n_epochs; ++epoch) {
    const double alpha = 1.0 - static_cast<double>(epoch) / n_epochs;
    const auto ep = static_cast<double>(epoch);
    if (params.parallel_layout) {
#pragma omp parallel
      {
        std::mt19937_64 local(params.seed + 0x9E3779B97F4A7C15ull * (epoch + 1) +
                              static_cast<std::uint64_t>(omp_get_thread_num()));
#pragma omp for schedule(static)
        for (std::size_t e = 0; e < n_edges; ++e) process_edge(e, ep, alpha, local);
      }
    } else {
      for (std::size_t e = 0; e < n_edges; ++e) process_edge(e, ep, alpha, rng);
    }
  }
  return embedding;
}

double cross_entropy(const FuzzyGraph& graph, const MatrixD& embedding, const CurveParams& curve) {
  constexpr double kEps = 1e-12;
  const std::size_t n = graph.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t p = graph.row_offsets[i];
    const std::size_t end = graph.row_offsets[i + 1];
    for (std::size_t j = i + 1; j < n; ++j) {
      while (p < end && graph.columns[p] < j) ++p;
      const double w = (p < end && graph.columns[p] == j) ? graph.weights[p] : 0.0;
      double dist2 = 0.0;
      for (std::size_t d = 0; d < embedding.cols(); ++d) {
        const double diff = embedding(i, d) - embedding(j, d);
        dist2 += diff * diff;
      }
      const double q = std::clamp(1.0 / (1.0 + curve.a * std::pow(dist2, curve.b)), kEps, 1.0 - kEps);
      total -= w * std::log(q) + (1.0 - w) * std::log(1.0 - q);
    }
  }
  return total;
}

}  // namespace umap

ReducedEmbeddings reduce_umap(const MatrixF& doc_embeddings, const ReduceParams& params) {
  params.validate();
  const std::size_t n = doc_embeddings.rows();
  if (n <= params.n_neighbors) {
    throw usage_error("UMAP needs more points than n_neighbors (" + std::to_string(n) +
                      " <= " + std::to_string(params.n_neighbors) + ")");
  }
  const auto unit = umap::normalize_rows(doc_embeddings);
  const auto graph = umap::build_fuzzy_graph(unit, params.n_neighbors);
  const auto curve = umap::fit_ab(params.spread, params.min_dist);

  ReducedEmbeddings out;
  out.method = ReduceMethod::umap;
  out.params = params;
  auto init = umap::spectral_layout(graph, params.n_components, params.seed);
  if (!init) {
    out.spectral_init_failed = true;
    init = umap::random_layout(n, params.n_components, params.seed);
  }
  out.points = umap::optimize_layout(graph, std::move(*init), curve, params);
  for (double x : out.points.data()) {
    if (!std::isfinite(x)) throw data_error("UMAP layout produced non-finite coordinates");
  }
  return out;
}

}  // namespace cast
