#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cast/corpus.hpp"

namespace cast {

using TopicWords = std::vector<std::vector<std::string>>;

struct NpmiParams {
  std::size_t window_size = 10;  // 0 means the whole document is one window
  double epsilon = 1e-12;
};

/// Boolean sliding-window document frequencies for a fixed set of words.
class WindowCounts {
 public:
  WindowCounts(const std::vector<Document>& reference, const std::vector<std::string>& words,
               std::size_t window_size);

  std::size_t total_windows() const noexcept { return total_; }
  std::size_t count(const std::string& word) const;
  std::size_t joint(const std::string& a, const std::string& b) const;

 private:
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::size_t> single_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_;
  std::size_t total_ = 0;
};

/// NPMI of one word pair. Pairs involving an unseen word, or never
/// co-occurring, score -1; a pair present in every window scores 1.
double pair_npmi(const WindowCounts& counts, const std::string& a, const std::string& b,
                 double epsilon);

struct NpmiResult {
  std::vector<double> per_topic;
  double mean = 0.0;
};

/// Mean pairwise NPMI per topic and across topics. Throws on an empty
/// reference corpus or a topic with fewer than two words.
NpmiResult npmi(const TopicWords& topics, const std::vector<Document>& reference,
                const NpmiParams& params = {});

/// Unique words over n_topics * top_k. Every topic must have the same length.
double topic_diversity(const TopicWords& topics);

struct EvalReport {
  std::vector<double> npmi_per_topic;
  double npmi_mean = 0.0;
  std::optional<double> topic_diversity;
  std::optional<std::string> topic_diversity_error;
  std::optional<double> llm_tc;
  std::optional<double> llm_td;
  std::size_t top_k = 0;
  NpmiParams params;
};

EvalReport evaluate(const TopicWords& topics, const std::vector<Document>& reference,
                    const NpmiParams& params = {});

std::string format_eval_text(const EvalReport& report);

}  // namespace cast
