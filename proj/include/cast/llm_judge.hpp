#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cast/error.hpp"
#include "cast/evaluation.hpp"

namespace cast {

inline constexpr const char* kLlmApiKeyEnv = "CAST_LLM_API_KEY";

struct LlmEndpoint {
  std::string url;  // chat-completions endpoint, http:// or https://
  std::string model = "gpt-4-turbo";
  std::string api_key;  // taken from CAST_LLM_API_KEY, never from flags
  int max_retries = 2;  // extra attempts after a malformed reply
  double backoff_seconds = 1.0;
  int timeout_seconds = 60;
};

struct LlmExchange {
  std::string prompt;
  std::string response;
};

struct LlmJudgeResult {
  double topic_coherence = 0.0;           // mean of per-cluster scores
  std::vector<double> cluster_scores;     // 1-based cluster order
  double topic_diversity = 0.0;
  std::vector<LlmExchange> transcripts;
};

/// Raised when replies stay unparseable or scores fall outside [1, 4];
/// carries every exchange made so far.
class LlmJudgeError : public Error {
 public:
  LlmJudgeError(const std::string& message, std::vector<LlmExchange> transcripts)
      : Error(ErrorKind::service, message), transcripts_(std::move(transcripts)) {}
  const std::vector<LlmExchange>& transcripts() const noexcept { return transcripts_; }

 private:
  std::vector<LlmExchange> transcripts_;
};

/// Sends a JSON request body to the endpoint and returns the response body.
/// Throws cast::Error (service) on transport failure.
using LlmTransport = std::function<std::string(const LlmEndpoint&, const std::string& body)>;

std::string render_topic_words(const TopicWords& topics);
std::string render_coherence_prompt(const TopicWords& topics);
std::string render_diversity_prompt(const TopicWords& topics);

/// Scores from "Cluster [X]: [score]" lines; nullopt unless clusters 1..n_topics
/// are each scored exactly once.
std::optional<std::vector<double>> parse_cluster_scores(const std::string& reply,
                                                        std::size_t n_topics);
/// Score from the first "Set [name]: [score]" line.
std::optional<double> parse_set_score(const std::string& reply);

std::string build_chat_request(const LlmEndpoint& endpoint, const std::string& prompt);
/// choices[0].message.content of a chat-completions response; nullopt if absent.
std::optional<std::string> extract_chat_content(const std::string& response_body);

/// HTTP(S) POST via cpp-httplib with exponential backoff on transport errors.
LlmTransport http_transport();

LlmJudgeResult llm_judge(const TopicWords& topics, const LlmEndpoint& endpoint,
                         const LlmTransport& transport = http_transport());

}  // namespace cast
