#include <httplib.h>

#include "cast/llm_judge.hpp"

#include <chrono>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace cast {
namespace {

constexpr const char* kCoherenceTemplate =
    "I will provide you with sets of clusters, where each cluster is described by a list of "
    "keywords: [topic_words]. For each set, evaluate the topic coherence of the clusters based on "
    "how interpretable and meaningful the keyword lists are for representing and retrieving "
    "distinct topics or subjects. Use this 4-point rating scale:\n"
    "\n"
    "4 = Keywords are highly coherent and clearly represent a specific, well-defined topic\n"
    "3 = Keywords are reasonably coherent and suggest a relatively distinct topic\n"
    "2 = Keywords lack coherence and make the topic difficult to interpret\n"
    "1 = Keywords are essentially random and meaningless for defining any topic\n"
    "For each cluster set, provide: The cluster number and your rating score, along with a 1-2 "
    "sentence explanation, in this format:\n"
    "\n"
    "Cluster [X]: [score] - [brief explanation]\n"
    "Then calculate and provide the average cluster score as the \"Topic Coherence Score\" for "
    "that set.\n";

constexpr const char* kDiversityTemplate =
    "I will provide you with sets of clusters, where each cluster is described by a list of "
    "keywords: [topic_words]. Evaluate the diversity of topics represented across all the "
    "clusters in each set on a 4-point rating scale:\n"
    "\n"
    "4 = Extremely diverse topics (clusters cover a very wide range of completely distinct and "
    "unrelated topics)\n"
    "3 = High topic diversity (clusters cover many distinct topics with little overlap)\n"
    "2 = Moderate topic diversity (clusters cover some distinct topics but also significant "
    "overlap)\n"
    "1 = Low topic diversity (clusters cover highly repetitive clusters with very little "
    "distinction in topics covered)\n"
    "For each set, provide your score along with a brief explanation justifying the rating. The "
    "response should be in the following format:\n"
    "Set [name]: [score] [Explanation].\n";

constexpr const char* kPlaceholder = "[topic_words]";

std::string substitute(const std::string& tmpl, const std::string& words) {
  std::string out = tmpl;
  const auto pos = out.find(kPlaceholder);
  out.replace(pos, std::string(kPlaceholder).size(), words);
  return out;
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw usage_error("LLM endpoint must be an http(s) URL");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string render_topic_words(const TopicWords& topics) {
  std::ostringstream out;
  out << "\n\nSet A:\n";
  for (std::size_t t = 0; t < topics.size(); ++t) {
    out << "Cluster " << (t + 1) << ": ";
    for (std::size_t w = 0; w < topics[t].size(); ++w) out << (w ? ", " : "") << topics[t][w];
    out << '\n';
  }
  out << '\n';
  return out.str();
}

std::string render_coherence_prompt(const TopicWords& topics) {
  return substitute(kCoherenceTemplate, render_topic_words(topics));
}

std::string render_diversity_prompt(const TopicWords& topics) {
  return substitute(kDiversityTemplate, render_topic_words(topics));
}

std::optional<std::vector<double>> parse_cluster_scores(const std::string& reply,
                                                        std::size_t n_topics) {
  static const std::regex line(
      R"(Cluster\s*\[?\s*(\d+)\s*\]?\s*\**\s*:\s*\**\s*\[?\s*(\d+(?:\.\d+)?))");
  std::vector<std::optional<double>> scores(n_topics);
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), line);
       it != std::sregex_iterator(); ++it) {
    const auto cluster = std::stoul((*it)[1].str());
    if (cluster < 1 || cluster > n_topics || scores[cluster - 1]) return std::nullopt;
    scores[cluster - 1] = std::stod((*it)[2].str());
  }
  std::vector<double> out;
  for (const auto& s : scores) {
    if (!s) return std::nullopt;
    out.push_back(*s);
  }
  return out;
}

std::optional<double> parse_set_score(const std::string& reply) {
  static const std::regex line(
      R"(Set\s*\[?\s*[^\]:\n]*?\s*\]?\s*\**\s*:\s*\**\s*\[?\s*(\d+(?:\.\d+)?))");
  std::smatch m;
  if (!std::regex_search(reply, m, line)) return std::nullopt;
  return std::stod(m[1].str());
}

std::string build_chat_request(const LlmEndpoint& endpoint, const std::string& prompt) {
  nlohmann::json body = {{"model", endpoint.model},
                         {"messages", {{{"role", "user"}, {"content", prompt}}}},
                         {"temperature", 0}};
  return body.dump();
}

std::optional<std::string> extract_chat_content(const std::string& response_body) {
  const auto j = nlohmann::json::parse(response_body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

LlmTransport http_transport() {
  return [](const LlmEndpoint& endpoint, const std::string& body) -> std::string {
    const auto url = split_url(endpoint.url);
    std::string last_error;
    constexpr int kAttempts = 3;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      if (attempt > 0 && endpoint.backoff_seconds > 0.0) {
        const double wait = endpoint.backoff_seconds * static_cast<double>(1 << (attempt - 1));
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
      }
      httplib::Client client(url.origin);
      client.set_connection_timeout(endpoint.timeout_seconds, 0);
      client.set_read_timeout(endpoint.timeout_seconds, 0);
      httplib::Headers headers;
      if (!endpoint.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);
      }
      const auto res = client.Post(url.path, headers, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500 || res->status == 429) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw service_error("LLM endpoint returned HTTP " + std::to_string(res->status));
      }
      return res->body;
    }
    throw service_error("LLM endpoint unreachable: " + last_error);
  };
}

LlmJudgeResult llm_judge(const TopicWords& topics, const LlmEndpoint& endpoint,
                         const LlmTransport& transport) {
  if (topics.empty()) throw usage_error("no topics to judge");
  LlmJudgeResult result;

  // Sends `prompt` until `parse` accepts the reply, at most 1 + max_retries times.
  auto ask = [&](const std::string& prompt, auto&& parse) {
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
      const auto body = transport(endpoint, build_chat_request(endpoint, prompt));
      const auto content = extract_chat_content(body);
      result.transcripts.push_back({prompt, content.value_or(body)});
      if (!content) continue;
      if (auto parsed = parse(*content)) return *parsed;
    }
    throw LlmJudgeError("LLM reply could not be parsed after " +
                            std::to_string(endpoint.max_retries + 1) + " attempts",
                        result.transcripts);
  };
  auto check_range = [&](double score) {
    if (score < 1.0 || score > 4.0) {
      throw LlmJudgeError("LLM score " + std::to_string(score) + " outside [1, 4]",
                          result.transcripts);
    }
  };

  result.cluster_scores = ask(render_coherence_prompt(topics), [&](const std::string& reply) {
    return parse_cluster_scores(reply, topics.size());
  });
  double sum = 0.0;
  for (double s : result.cluster_scores) {
    check_range(s);
    sum += s;
  }
  result.topic_coherence = sum / static_cast<double>(result.cluster_scores.size());

  result.topic_diversity = ask(render_diversity_prompt(topics),
                               [](const std::string& reply) { return parse_set_score(reply); });
  check_range(result.topic_diversity);
  return result;
}

}  // namespace cast
