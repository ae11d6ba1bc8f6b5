#include "cast/topic_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "cast/error.hpp"

namespace cast {
namespace {

template <typename F>
auto in_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    rethrow_in_stage(stage, e);
  }
}

double cosine_unit(std::span<const double> unit_a, std::span<const double> b) {
  double dot = 0.0, n2 = 0.0;
  for (std::size_t d = 0; d < b.size(); ++d) {
    dot += unit_a[d] * b[d];
    n2 += b[d] * b[d];
  }
  return n2 > 0.0 ? dot / std::sqrt(n2) : 0.0;
}

bool ranks_before(const ScoredWord& a, const ScoredWord& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.word < b.word;
}

}  // namespace

void TopicModelParams::validate() const {
  if (n_topics < 1) throw usage_error("n_topics must be >= 1");
  if (top_k < 1) throw usage_error("top_k must be >= 1");
  if (min_word_freq < 1) throw usage_error("min_word_freq must be >= 1");
  if (!(ss_threshold >= 0.0 && ss_threshold <= 1.0)) {
    throw usage_error("ss_threshold must lie in [0, 1]");
  }
  reduce.validate();
  cluster.validate();
}

std::vector<std::size_t> select_top_n_clusters(const ClusterResult& result, std::size_t n_topics,
                                               Diagnostics* diagnostics) {
  if (n_topics < 1) throw usage_error("n_topics must be >= 1");
  const std::size_t found = result.n_clusters();
  if (found == 0) throw data_error("no clusters found");

  std::vector<std::size_t> first_member(found, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    const int l = result.labels[i];
    if (l >= 0) first_member[l] = std::min(first_member[l], i);
  }
  std::vector<std::size_t> ids(found);
  for (std::size_t c = 0; c < found; ++c) ids[c] = c;
  std::sort(ids.begin(), ids.end(), [&](std::size_t x, std::size_t y) {
    if (result.cluster_sizes[x] != result.cluster_sizes[y]) {
      return result.cluster_sizes[x] > result.cluster_sizes[y];
    }
    return first_member[x] < first_member[y];
  });
  if (found < n_topics) {
    if (diagnostics) {
      diagnostics->warnings.push_back("requested " + std::to_string(n_topics) +
                                      " topics but only " + std::to_string(found) +
                                      " clusters were found");
    }
    return ids;
  }
  ids.resize(n_topics);
  return ids;
}

std::vector<std::vector<double>> topic_vectors(const EmbeddingStore& store,
                                               const ClusterResult& result,
                                               const std::vector<std::size_t>& selected) {
  if (result.labels.size() != store.n_docs()) {
    throw data_error("cluster labels do not match the document count");
  }
  std::vector<std::vector<double>> out;
  for (auto cluster : selected) {
    std::vector<double> sum(store.dim, 0.0);
    std::size_t members = 0;
    for (std::size_t i = 0; i < store.n_docs(); ++i) {
      if (result.labels[i] != static_cast<int>(cluster)) continue;
      const auto row = store.doc_embeddings.row(i);
      for (std::size_t d = 0; d < store.dim; ++d) sum[d] += row[d];
      ++members;
    }
    if (members == 0) throw data_error("cluster " + std::to_string(cluster) + " has no members");
    double n2 = 0.0;
    for (auto& x : sum) {
      x /= static_cast<double>(members);
      n2 += x * x;
    }
    if (!(n2 > 0.0)) {
      throw data_error("cluster " + std::to_string(cluster) + " has a zero centroid");
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& x : sum) x *= inv;
    out.push_back(std::move(sum));
  }
  return out;
}

std::vector<std::vector<ScoredWord>> assign_topic_words(
    const std::set<std::string>& candidates, const ProfileMap& profiles,
    const std::vector<std::vector<double>>& topic_vecs, std::size_t top_k, bool soft,
    Diagnostics* diagnostics) {
  if (candidates.empty()) throw data_error("empty candidate set");
  if (topic_vecs.empty()) throw data_error("no topic vectors");

  std::vector<std::vector<ScoredWord>> pools(topic_vecs.size());
  for (const auto& word : candidates) {
    const auto it = profiles.find(word);
    if (it == profiles.end()) throw data_error("candidate '" + word + "' has no profile");
    const auto unit = it->second.unit_embedding();

    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < topic_vecs.size(); ++t) {
      const double sim = cosine_unit(unit, topic_vecs[t]);
      if (soft) pools[t].push_back({word, sim});
      if (sim > best_sim) {  // strict: ties stay with the lower topic
        best_sim = sim;
        best = t;
      }
    }
    if (!soft) pools[best].push_back({word, best_sim});
  }

  for (std::size_t t = 0; t < pools.size(); ++t) {
    auto& pool = pools[t];
    std::sort(pool.begin(), pool.end(), ranks_before);
    if (pool.size() > top_k) pool.resize(top_k);
    if (pool.size() < top_k && diagnostics) {
      diagnostics->warnings.push_back("topic " + std::to_string(t) + " has only " +
                                      std::to_string(pool.size()) + " of " +
                                      std::to_string(top_k) + " words");
    }
  }
  return pools;
}

WordStage prepare_words(const std::vector<Document>& corpus, const EmbeddingStore& store,
                        const TopicModelParams& params, const std::set<std::string>& stopwords) {
  WordStage stage;
  stage.vocab = in_stage("build_vocabulary",
                         [&] { return build_vocabulary(corpus, params.min_word_freq, stopwords); });
  stage.aggregation = in_stage("aggregate_word_embeddings", [&] {
    return aggregate_word_embeddings(store, stage.vocab);
  });
  return stage;
}

ClusterStage cluster_documents(const EmbeddingStore& store, const TopicModelParams& params) {
  ClusterStage stage;
  auto reduce_params = params.reduce;
  reduce_params.seed = params.seed;
  stage.reduced = in_stage("reduce", [&] { return reduce(store.doc_embeddings, reduce_params); });
  stage.clusters = in_stage("hdbscan", [&] { return hdbscan(stage.reduced.points, params.cluster); });
  return stage;
}

TopicModel assemble_model(const std::vector<Document>& corpus, const EmbeddingStore& store,
                          const WordStage& words, const ClusterStage& clusters,
                          const TopicModelParams& params) {
  TopicModel model;
  model.config = params;
  auto& diag = model.diagnostics;
  diag.documents = corpus.size();
  diag.empty_documents = static_cast<std::size_t>(
      std::count_if(corpus.begin(), corpus.end(), [](const Document& d) { return d.empty(); }));
  diag.vocabulary_size = words.vocab.size();
  diag.profiled_words = words.aggregation.profiles.size();
  diag.missing_words = words.aggregation.missing_words.size();
  if (diag.missing_words > 0) {
    diag.warnings.push_back(std::to_string(diag.missing_words) +
                            " vocabulary words have no occurrence embeddings");
  }
  for (const auto& [word, profile] : words.aggregation.profiles) {
    if (!profile.self_similarity) ++diag.insufficient_occurrences;
  }

  const auto& result = clusters.clusters;
  model.doc_labels = result.labels;
  diag.clusters_found = result.n_clusters();
  diag.noise_documents = result.n_noise();

  const auto selected =
      in_stage("select_top_n_clusters", [&] { return select_top_n_clusters(result, params.n_topics, &diag); });
  diag.dropped_clusters = result.n_clusters() - selected.size();
  const auto vecs = in_stage("topic_vectors", [&] { return topic_vectors(store, result, selected); });

  const auto candidates = in_stage("filter_by_threshold", [&] {
    return filter_by_threshold(words.aggregation.profiles, params.ss_threshold);
  });
  diag.candidates = candidates.size();
  diag.filtered_by_threshold =
      diag.profiled_words - diag.insufficient_occurrences - candidates.size();
  const auto ranked = in_stage("assign_topic_words", [&] {
    return assign_topic_words(candidates, words.aggregation.profiles, vecs, params.top_k,
                              params.soft_words, &diag);
  });

  for (std::size_t t = 0; t < selected.size(); ++t) {
    Topic topic;
    topic.id = static_cast<int>(t);
    topic.vector = vecs[t];
    for (std::size_t i = 0; i < result.labels.size(); ++i) {
      if (result.labels[i] == static_cast<int>(selected[t])) topic.member_doc_ids.push_back(i);
    }
    topic.top_words = ranked[t];
    model.topics.push_back(std::move(topic));
  }
  return model;
}

TopicModel fit(const std::vector<Document>& corpus, const EmbeddingStore& store,
               const TopicModelParams& params, const std::set<std::string>& stopwords) {
  in_stage("config", [&] { params.validate(); });
  if (corpus.size() != store.n_docs()) {
    throw data_error("corpus has " + std::to_string(corpus.size()) +
                     " documents but the embedding store has " + std::to_string(store.n_docs()));
  }
  const auto words = prepare_words(corpus, store, params, stopwords);
  const auto clusters = cluster_documents(store, params);
  return assemble_model(corpus, store, words, clusters, params);
}

std::string format_topic_table(const TopicModel& model) {
  const std::size_t cols = model.topics.size();
  std::vector<std::string> headers;
  std::size_t rows = 0;
  for (const auto& t : model.topics) {
    headers.push_back("Topic " + std::to_string(t.id) + " (" +
                      std::to_string(t.member_doc_ids.size()) + ")");
    rows = std::max(rows, t.top_words.size());
  }
  std::vector<std::size_t> widths(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    widths[c] = headers[c].size();
    for (const auto& w : model.topics[c].top_words) widths[c] = std::max(widths[c], w.word.size());
  }
  std::ostringstream out;
  auto emit = [&](auto&& at) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string v = at(c);
      out << v;
      if (c + 1 < cols) out << std::string(widths[c] - v.size() + 2, ' ');
    }
    out << '\n';
  };
  emit([&](std::size_t c) { return headers[c]; });
  emit([&](std::size_t c) { return std::string(widths[c], '-'); });
  for (std::size_t r = 0; r < rows; ++r) {
    emit([&](std::size_t c) {
      const auto& words = model.topics[c].top_words;
      return r < words.size() ? words[r].word : std::string();
    });
  }
  return out.str();
}

}  // namespace cast
