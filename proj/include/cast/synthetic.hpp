#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cast/corpus.hpp"
#include "cast/embedding_store.hpp"

namespace cast {

/// Knobs of the deterministic embedding generator used in place of a real
/// encoder. Noise magnitudes are absolute L2 lengths added before normalization.
struct SyntheticOptions {
  std::uint32_t dim = 64;
  std::uint64_t seed = 1;
  double noise = 0.5;             // per-occurrence noise for planned (topic) words
  double unplanned_noise = 1.5;   // per-occurrence noise for words absent from the plan
  double topic_spread = 0.6;      // distance of a planned word's base from its topic anchor
};

using TopicPlan = std::map<std::string, int, std::less<>>;

/// Builds a store with one occurrence record per document token (document
/// order, then token order). Without a plan every word uses `noise`.
/// Empty documents receive a seeded random unit vector; their ids are
/// appended to `empty_docs` when given.
EmbeddingStore synthetic_provider(const std::vector<Document>& docs,
                                  const SyntheticOptions& options,
                                  const std::optional<TopicPlan>& plan = std::nullopt,
                                  std::vector<std::size_t>* empty_docs = nullptr);

struct PlantedOptions {
  std::size_t n_topics = 3;
  std::size_t docs_per_topic = 200;
  std::size_t words_per_topic = 20;
  std::size_t doc_length = 30;
  double topic_word_share = 0.6;  // probability a token is drawn from the document's topic
  std::uint64_t seed = 11;
};

/// Documents with disjoint per-topic vocabularies mixed with a shared pool of
/// function words. Documents are interleaved by topic.
struct PlantedCorpus {
  std::vector<Document> docs;
  TopicPlan plan;
  std::vector<int> truth;  // generating topic per document
  std::vector<std::vector<std::string>> topic_vocab;
};

PlantedCorpus make_planted_corpus(const PlantedOptions& options = {});

namespace synthetic_detail {

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

/// Unit vector of Box-Muller Gaussians drawn from a splitmix64 stream started at `key`.
std::vector<double> hash_unit_vector(std::uint64_t key, std::uint32_t dim);

}  // namespace synthetic_detail

}  // namespace cast
