#include "cast/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "cast/error.hpp"

namespace cast {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double to_lambda(double distance) { return distance > 0.0 ? 1.0 / distance : kInf; }

// (lambda - birth) * size with inf - inf taken as 0.
double excess(double lambda, double birth, std::size_t size) {
  if (std::isinf(lambda) && std::isinf(birth)) return 0.0;
  return (lambda - birth) * static_cast<double>(size);
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // Attaches both roots under `label` (a fresh node id).
  void link(std::size_t a, std::size_t b, std::size_t label) {
    parent_[a] = label;
    parent_[b] = label;
    size_[label] = size_[a] + size_[b];
  }
  std::size_t size(std::size_t x) const { return size_[x]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

void collect_leaves(const std::vector<LinkageNode>& linkage, std::size_t n, std::size_t node,
                    std::vector<std::size_t>& out) {
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    const auto x = stack.back();
    stack.pop_back();
    if (x < n) {
      out.push_back(x);
    } else {
      // right pushed first so leaves come out left-to-right
      stack.push_back(linkage[x - n].right);
      stack.push_back(linkage[x - n].left);
    }
  }
}

}  // namespace

std::size_t ClusterParams::effective_min_samples(std::size_t n) const {
  const std::size_t wanted = min_samples.value_or(min_cluster_size);
  return n > 1 ? std::min(wanted, n - 1) : wanted;
}

void ClusterParams::validate() const {
  if (min_cluster_size < 2) throw usage_error("min_cluster_size must be >= 2");
  if (min_samples && *min_samples < 1) throw usage_error("min_samples must be >= 1");
}

std::size_t ClusterResult::n_noise() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
}

std::vector<double> core_distances(const MatrixD& points, std::size_t min_samples, Exec exec) {
  if (min_samples >= points.rows()) {
    throw usage_error("min_samples (" + std::to_string(min_samples) +
                      ") must be smaller than the number of points (" +
                      std::to_string(points.rows()) + ")");
  }
  if (min_samples == 0) throw usage_error("min_samples must be >= 1");
  return exec == Exec::parallel ? kernels::omp::kth_neighbor_distance(points, min_samples)
                                : kernels::serial::kth_neighbor_distance(points, min_samples);
}

std::vector<Edge> mst_mutual_reachability(const MatrixD& points, const std::vector<double>& core,
                                          Exec exec) {
  if (core.size() != points.rows()) throw usage_error("core distances do not match point count");
  return exec == Exec::parallel ? kernels::omp::prim_mst(points, core)
                                : kernels::serial::prim_mst(points, core);
}

std::vector<LinkageNode> single_linkage(std::size_t n, std::vector<Edge> mst) {
  std::stable_sort(mst.begin(), mst.end(),
                   [](const Edge& x, const Edge& y) { return x.weight < y.weight; });
  std::vector<LinkageNode> nodes;
  nodes.reserve(mst.size());
  UnionFind uf(2 * n);
  for (const auto& e : mst) {
    const auto ra = uf.find(e.a);
    const auto rb = uf.find(e.b);
    const auto label = n + nodes.size();
    uf.link(ra, rb, label);
    nodes.push_back({ra, rb, e.weight, uf.size(label)});
  }
  return nodes;
}

std::vector<CondensedEdge> condense_tree(const std::vector<LinkageNode>& linkage, std::size_t n,
                                         std::size_t min_cluster_size) {
  std::vector<CondensedEdge> tree;
  if (n < 2 || linkage.empty()) return tree;
  auto size_of = [&](std::size_t x) { return x < n ? std::size_t{1} : linkage[x - n].size; };

  const std::size_t root = n + linkage.size() - 1;
  std::vector<std::size_t> relabel(n + linkage.size(), 0);
  relabel[root] = n;
  std::size_t next_label = n + 1;

  std::vector<std::size_t> leaves;
  auto shed = [&](std::size_t subtree, std::size_t parent, double lambda) {
    leaves.clear();
    collect_leaves(linkage, n, subtree, leaves);
    for (auto p : leaves) tree.push_back({parent, p, lambda, 1});
  };

  std::deque<std::size_t> queue{root};
  while (!queue.empty()) {
    const auto node = queue.front();
    queue.pop_front();
    const auto& link = linkage[node - n];
    const auto parent = relabel[node];
    const double lambda = to_lambda(link.distance);

    if (link.distance <= 0.0) {  // duplicates: no genuine split below this point
      shed(node, parent, lambda);
      continue;
    }
    const auto left_size = size_of(link.left);
    const auto right_size = size_of(link.right);
    const bool left_big = left_size >= min_cluster_size;
    const bool right_big = right_size >= min_cluster_size;

    if (left_big && right_big) {
      for (auto child : {link.left, link.right}) {
        relabel[child] = next_label++;
        tree.push_back({parent, relabel[child], lambda, size_of(child)});
        queue.push_back(child);
      }
      continue;
    }
    for (auto child : {link.left, link.right}) {
      if (size_of(child) >= min_cluster_size) {
        relabel[child] = parent;
        queue.push_back(child);
      } else if (child < n) {
        tree.push_back({parent, child, lambda, 1});
      } else {
        shed(child, parent, lambda);
      }
    }
  }
  return tree;
}

std::map<std::size_t, double> cluster_stability(const std::vector<CondensedEdge>& tree,
                                                std::size_t n) {
  std::map<std::size_t, double> birth{{n, 0.0}};
  for (const auto& e : tree) {
    if (e.child >= n) birth[e.child] = e.lambda;
  }
  std::map<std::size_t, double> stability;
  for (const auto& [cluster, b] : birth) stability[cluster] = 0.0;
  for (const auto& e : tree) {
    stability[e.parent] += excess(e.lambda, birth[e.parent], e.child_size);
  }
  return stability;
}

std::vector<std::size_t> select_clusters_eom(const std::vector<CondensedEdge>& tree,
                                             const std::map<std::size_t, double>& stability,
                                             std::size_t n) {
  std::map<std::size_t, std::vector<std::size_t>> children;
  for (const auto& e : tree) {
    if (e.child >= n) children[e.parent].push_back(e.child);
  }
  if (children.empty()) return {n};  // nothing but the root

  std::map<std::size_t, double> best = stability;
  std::map<std::size_t, bool> selected;
  for (const auto& [cluster, s] : stability) selected[cluster] = cluster != n;

  // Children carry larger ids than their parents, so descending id order is bottom-up.
  for (auto it = stability.rbegin(); it != stability.rend(); ++it) {
    const auto cluster = it->first;
    if (cluster == n) continue;
    const auto ch = children.find(cluster);
    if (ch == children.end()) continue;
    double subtree = 0.0;
    for (auto c : ch->second) subtree += best[c];
    if (subtree > best[cluster]) {
      selected[cluster] = false;
      best[cluster] = subtree;
    } else {
      std::vector<std::size_t> stack(ch->second.begin(), ch->second.end());
      while (!stack.empty()) {
        const auto d = stack.back();
        stack.pop_back();
        selected[d] = false;
        const auto dc = children.find(d);
        if (dc != children.end()) stack.insert(stack.end(), dc->second.begin(), dc->second.end());
      }
    }
  }
  std::vector<std::size_t> out;
  for (const auto& [cluster, is] : selected) {
    if (is) out.push_back(cluster);
  }
  return out;
}

ClusterResult hdbscan(const MatrixD& points, const ClusterParams& params) {
  params.validate();
  const std::size_t n = points.rows();
  if (n < params.min_cluster_size) {
    throw usage_error("HDBSCAN needs at least min_cluster_size points (" + std::to_string(n) +
                      " < " + std::to_string(params.min_cluster_size) + ")");
  }

  ClusterResult result;
  const auto core = core_distances(points, params.effective_min_samples(n), params.exec);
  result.mst = mst_mutual_reachability(points, core, params.exec);
  const auto linkage = single_linkage(n, result.mst);
  result.condensed_tree = condense_tree(linkage, n, params.min_cluster_size);
  result.stability = cluster_stability(result.condensed_tree, n);
  const auto chosen = select_clusters_eom(result.condensed_tree, result.stability, n);

  // Walk each point's shedding cluster up to a selected ancestor.
  std::map<std::size_t, std::size_t> parent_of;
  for (const auto& e : result.condensed_tree) {
    if (e.child >= n) parent_of[e.child] = e.parent;
  }
  const std::set<std::size_t> chosen_set(chosen.begin(), chosen.end());
  auto selected_ancestor = [&](std::size_t cluster) -> std::optional<std::size_t> {
    for (;;) {
      if (chosen_set.count(cluster)) return cluster;
      const auto it = parent_of.find(cluster);
      if (it == parent_of.end()) return std::nullopt;
      cluster = it->second;
    }
  };

  std::vector<std::optional<std::size_t>> owner(n);
  std::vector<double> point_lambda(n, 0.0);
  for (const auto& e : result.condensed_tree) {
    if (e.child < n) {
      owner[e.child] = selected_ancestor(e.parent);
      point_lambda[e.child] = e.lambda;
    }
  }

  struct Group {
    std::size_t node;
    std::size_t size = 0;
    std::size_t first_member = std::numeric_limits<std::size_t>::max();
    double max_lambda = 0.0;
  };
  std::map<std::size_t, Group> groups;
  for (auto c : chosen) groups[c] = Group{c};
  for (std::size_t i = 0; i < n; ++i) {
    if (!owner[i]) continue;
    auto& g = groups[*owner[i]];
    ++g.size;
    g.first_member = std::min(g.first_member, i);
    g.max_lambda = std::max(g.max_lambda, point_lambda[i]);
  }
  std::vector<Group> ordered;
  for (auto& [node, g] : groups) {
    if (g.size > 0) ordered.push_back(g);
  }
  std::sort(ordered.begin(), ordered.end(), [](const Group& x, const Group& y) {
    if (x.size != y.size) return x.size > y.size;
    return x.first_member < y.first_member;
  });
  std::map<std::size_t, int> label_of;
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    label_of[ordered[k].node] = static_cast<int>(k);
    result.cluster_sizes.push_back(ordered[k].size);
    result.cluster_nodes.push_back(ordered[k].node);
  }

  result.labels.assign(n, -1);
  result.probabilities.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!owner[i]) continue;
    const int label = label_of.at(*owner[i]);
    result.labels[i] = label;
    const double max_lambda = ordered[static_cast<std::size_t>(label)].max_lambda;
    if (std::isinf(max_lambda)) {
      result.probabilities[i] = std::isinf(point_lambda[i]) ? 1.0 : 0.0;
    } else if (max_lambda <= 0.0) {
      result.probabilities[i] = 1.0;
    } else {
      result.probabilities[i] = std::min(point_lambda[i], max_lambda) / max_lambda;
    }
  }
  return result;
}

std::string condensed_tree_json(const ClusterResult& result) {
  auto finite_or_null = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return nullptr;  // infinite lambda
  };
  nlohmann::json records = nlohmann::json::array();
  for (const auto& e : result.condensed_tree) {
    records.push_back({{"parent", e.parent},
                       {"child", e.child},
                       {"lambda", finite_or_null(e.lambda)},
                       {"child_size", e.child_size}});
  }
  nlohmann::json stability = nlohmann::json::object();
  for (const auto& [cluster, s] : result.stability) {
    stability[std::to_string(cluster)] = finite_or_null(s);
  }
  nlohmann::json j = {{"n_points", result.labels.size()},
                      {"condensed_tree", records},
                      {"stability", stability},
                      {"cluster_nodes", result.cluster_nodes},
                      {"cluster_sizes", result.cluster_sizes}};
  return j.dump(2) + "\n";
}

}  // namespace cast
