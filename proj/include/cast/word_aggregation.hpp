#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cast/corpus.hpp"
#include "cast/embedding_store.hpp"
#include "cast/matrix.hpp"

namespace cast {

/// Corpus-level view of one word: the mean of its contextualized occurrence
/// embeddings, how many occurrences fed it, and how stable those are.
struct WordProfile {
  std::string word;
  std::vector<double> e_final;  // raw mean, not re-normalized
  std::size_t occurrence_count = 0;
  std::optional<double> self_similarity;  // unset when occurrence_count < 2

  /// e_final scaled to unit length (cosine comparisons only care about direction).
  std::vector<double> unit_embedding() const;
};

using ProfileMap = std::map<std::string, WordProfile>;

struct AggregationResult {
  ProfileMap profiles;
  std::vector<std::string> missing_words;  // vocabulary words with no occurrence records
};

enum class Exec { serial, parallel };

/// Averages every occurrence of each vocabulary word and fills in its
/// self-similarity (words with a single occurrence keep it unset).
/// Throws a data error on dimension mismatch.
AggregationResult aggregate_word_embeddings(const EmbeddingStore& store, const Vocabulary& vocab,
                                            Exec exec = Exec::parallel);

/// Mean cosine similarity over all unordered pairs of rows (diagonal excluded),
/// via the identity (|sum u|^2 - sum |u|^2) / (P (P - 1)). Rows must be unit
/// length within kUnitNormTolerance; P must be >= 2.
double self_similarity(const MatrixF& occurrence_vectors);

/// Same identity from precomputed sums of unit vectors.
double self_similarity_from_sums(std::span<const double> unit_sum, double sum_sq_norms,
                                 std::size_t count);

/// Words whose self-similarity is at least `threshold`. Words without a score never pass.
std::set<std::string> filter_by_threshold(const ProfileMap& profiles, double threshold);

struct ScoredWord {
  std::string word;
  double score = 0.0;

  bool operator==(const ScoredWord&) const = default;
};

struct SsReport {
  struct Section {
    double threshold = 0.0;
    std::vector<ScoredWord> below;  // highest scores strictly under the threshold
  };

  std::size_t top_n = 10;
  std::vector<ScoredWord> top;
  std::vector<Section> sections;
  std::vector<std::string> insufficient;  // words with fewer than two occurrences
};

/// Sorted self-similarity table: overall top words, then for each threshold the
/// top words just below it. Order is descending score, ties by word.
SsReport ss_report(const ProfileMap& profiles, const std::vector<double>& thresholds,
                   std::size_t top_n = 10);

std::string format_ss_report_text(const SsReport& report);
std::string format_ss_report_json(const SsReport& report);

}  // namespace cast
