#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cast/clusterer.hpp"
#include "cast/corpus.hpp"
#include "cast/embedding_store.hpp"
#include "cast/reducer.hpp"
#include "cast/word_aggregation.hpp"

namespace cast {

struct TopicModelParams {
  double ss_threshold = 0.4;
  std::size_t min_word_freq = 3;
  ReduceParams reduce;
  ClusterParams cluster;
  std::size_t n_topics = 10;
  std::size_t top_k = 10;
  bool soft_words = false;  // rank every candidate under every topic
  std::uint64_t seed = 7;

  void validate() const;
};

struct Topic {
  int id = 0;
  std::vector<double> vector;  // unit centroid in the original embedding space
  std::vector<std::size_t> member_doc_ids;
  std::vector<ScoredWord> top_words;
};

struct Diagnostics {
  std::size_t documents = 0;
  std::size_t empty_documents = 0;
  std::size_t vocabulary_size = 0;
  std::size_t profiled_words = 0;
  std::size_t missing_words = 0;              // in vocabulary, no occurrence records
  std::size_t insufficient_occurrences = 0;   // a single occurrence, no self-similarity
  std::size_t filtered_by_threshold = 0;
  std::size_t candidates = 0;
  std::size_t clusters_found = 0;
  std::size_t dropped_clusters = 0;
  std::size_t noise_documents = 0;
  std::vector<std::string> warnings;
};

struct TopicModel {
  std::vector<Topic> topics;
  TopicModelParams config;
  Diagnostics diagnostics;
  std::vector<int> doc_labels;  // HDBSCAN labels, -1 for noise
};

/// Threshold-independent word statistics.
struct WordStage {
  Vocabulary vocab;
  AggregationResult aggregation;
};

/// Seed-dependent document clustering; independent of the word filter.
struct ClusterStage {
  ReducedEmbeddings reduced;
  ClusterResult clusters;
};

/// Ids of the n_topics largest clusters (ties by smallest member id). A
/// shortfall returns every cluster and appends a warning. Throws if there are
/// no clusters.
std::vector<std::size_t> select_top_n_clusters(const ClusterResult& result, std::size_t n_topics,
                                               Diagnostics* diagnostics = nullptr);

/// Unit-length mean of the members' original embeddings, one per selected
/// cluster, in the order given. Noise documents never contribute.
std::vector<std::vector<double>> topic_vectors(const EmbeddingStore& store,
                                               const ClusterResult& result,
                                               const std::vector<std::size_t>& selected);

/// Hard assignment of each candidate to its most similar topic vector (ties
/// to the lower topic), then the top_k words per topic by cosine similarity.
/// With `soft`, every candidate is ranked under every topic instead.
std::vector<std::vector<ScoredWord>> assign_topic_words(
    const std::set<std::string>& candidates, const ProfileMap& profiles,
    const std::vector<std::vector<double>>& topic_vecs, std::size_t top_k, bool soft = false,
    Diagnostics* diagnostics = nullptr);

WordStage prepare_words(const std::vector<Document>& corpus, const EmbeddingStore& store,
                        const TopicModelParams& params,
                        const std::set<std::string>& stopwords = {});
ClusterStage cluster_documents(const EmbeddingStore& store, const TopicModelParams& params);
TopicModel assemble_model(const std::vector<Document>& corpus, const EmbeddingStore& store,
                          const WordStage& words, const ClusterStage& clusters,
                          const TopicModelParams& params);

/// Full pipeline. Errors carry the failing stage name as a prefix.
TopicModel fit(const std::vector<Document>& corpus, const EmbeddingStore& store,
               const TopicModelParams& params, const std::set<std::string>& stopwords = {});

/// Topics as columns, ranked words as rows.
std::string format_topic_table(const TopicModel& model);

}  // namespace cast
