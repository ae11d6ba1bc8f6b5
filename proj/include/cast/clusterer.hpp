#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cast/kernels.hpp"
#include "cast/matrix.hpp"
#include "cast/word_aggregation.hpp"

namespace cast {

struct ClusterParams {
  std::size_t min_cluster_size = 15;
  std::optional<std::size_t> min_samples;  // defaults to min_cluster_size
  Exec exec = Exec::parallel;

  /// min_samples actually used for n points (clamped to n - 1).
  std::size_t effective_min_samples(std::size_t n) const;
  void validate() const;
};

/// Node of the single-linkage dendrogram; node n + k is the k-th merge.
struct LinkageNode {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

/// Condensed tree record. Ids below n are points, ids from n up are clusters
/// (n is the root).
struct CondensedEdge {
  std::size_t parent = 0;
  std::size_t child = 0;
  double lambda = 0.0;
  std::size_t child_size = 0;

  bool operator==(const CondensedEdge&) const = default;
};

struct ClusterResult {
  std::vector<int> labels;  // -1 noise, else 0..C-1 by descending size
  std::vector<std::size_t> cluster_sizes;
  std::vector<std::size_t> cluster_nodes;  // condensed-tree id of each cluster label
  std::vector<double> probabilities;
  std::vector<CondensedEdge> condensed_tree;
  std::map<std::size_t, double> stability;  // per condensed cluster id, before selection
  std::vector<Edge> mst;

  std::size_t n_clusters() const noexcept { return cluster_sizes.size(); }
  std::size_t n_noise() const;
};

/// Distance from each point to its k-th nearest other point (Euclidean).
std::vector<double> core_distances(const MatrixD& points, std::size_t min_samples,
                                   Exec exec = Exec::parallel);

/// Exact minimum spanning tree of the complete mutual-reachability graph
/// (Prim). Returns n - 1 edges in insertion order.
std::vector<Edge> mst_mutual_reachability(const MatrixD& points, const std::vector<double>& core,
                                          Exec exec = Exec::parallel);

/// Dendrogram from MST edges (stable-sorted by weight, merged with union-find).
std::vector<LinkageNode> single_linkage(std::size_t n, std::vector<Edge> mst);

/// Prunes the dendrogram: splits with a side smaller than min_cluster_size
/// shed points instead of spawning clusters. Zero-distance merges are
/// treated as points shed at lambda = infinity.
std::vector<CondensedEdge> condense_tree(const std::vector<LinkageNode>& linkage, std::size_t n,
                                         std::size_t min_cluster_size);

std::map<std::size_t, double> cluster_stability(const std::vector<CondensedEdge>& tree,
                                                std::size_t n);

/// Excess-of-mass selection. The root is only selectable when it has no
/// child clusters.
std::vector<std::size_t> select_clusters_eom(const std::vector<CondensedEdge>& tree,
                                             const std::map<std::size_t, double>& stability,
                                             std::size_t n);

ClusterResult hdbscan(const MatrixD& points, const ClusterParams& params);

std::string condensed_tree_json(const ClusterResult& result);

}  // namespace cast
