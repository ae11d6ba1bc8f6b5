#include <httplib.h>

#include <doctest.h>

#include <atomic>
#include <deque>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "cast/llm_judge.hpp"

namespace {

std::string chat_response(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

// Chat endpoint on localhost that replays scripted replies in order.
class MockServer {
 public:
  explicit MockServer(std::deque<std::pair<int, std::string>> replies) : replies_(std::move(replies)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      requests.push_back(req.body);
      authorization.push_back(req.get_header_value("Authorization"));
      if (replies_.empty()) {
        res.status = 500;
        return;
      }
      auto [status, body] = replies_.front();
      replies_.pop_front();
      res.status = status;
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  cast::LlmEndpoint endpoint() const {
    cast::LlmEndpoint e;
    e.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    e.backoff_seconds = 0.0;
    e.timeout_seconds = 5;
    return e;
  }

  std::vector<std::string> requests;
  std::vector<std::string> authorization;

 private:
  httplib::Server server_;
  std::deque<std::pair<int, std::string>> replies_;
  std::mutex mutex_;
  std::thread thread_;
  int port_ = 0;
};

const cast::TopicWords kTopics = {{"goal", "match", "team"}, {"vote", "party", "election"}};

}  // namespace

TEST_CASE("prompts carry the scale and the rendered topic words") {
  const auto tc = cast::render_coherence_prompt(kTopics);
  CHECK(tc.find("4 = Keywords are highly coherent and clearly represent a specific, well-defined topic\n") !=
        std::string::npos);
  CHECK(tc.find("1 = Keywords are essentially random and meaningless for defining any topic\n") !=
        std::string::npos);
  CHECK(tc.find("Cluster [X]: [score] - [brief explanation]") != std::string::npos);
  CHECK(tc.find("Set A:\nCluster 1: goal, match, team\nCluster 2: vote, party, election\n") !=
        std::string::npos);
  CHECK(tc.find("[topic_words]") == std::string::npos);

  const auto td = cast::render_diversity_prompt(kTopics);
  CHECK(td.find("4 = Extremely diverse topics") != std::string::npos);
  CHECK(td.find("Set [name]: [score] [Explanation].") != std::string::npos);
  CHECK(td.find("Cluster 2: vote, party, election") != std::string::npos);
}

TEST_CASE("reply parsing") {
  const auto s = cast::parse_cluster_scores("Cluster 1: 4 - coherent\nCluster 2: 2 - vague", 2);
  REQUIRE(s.has_value());
  CHECK(*s == std::vector<double>{4, 2});
  CHECK(cast::parse_cluster_scores("**Cluster [1]**: 3.5 - ok\nCluster [2]: [1]", 2) ==
        std::vector<double>{3.5, 1});
  CHECK_FALSE(cast::parse_cluster_scores("Cluster 1: 4", 2).has_value());
  CHECK_FALSE(cast::parse_cluster_scores("Cluster 1: 4\nCluster 1: 3", 2).has_value());
  CHECK_FALSE(cast::parse_cluster_scores("Cluster 1: 4\nCluster 3: 3", 2).has_value());
  CHECK_FALSE(cast::parse_cluster_scores("These topics look fine.", 2).has_value());

  CHECK(cast::parse_set_score("Set A: 3 The clusters are distinct.") == 3.0);
  CHECK(cast::parse_set_score("Set [A]: [4] Very diverse.") == 4.0);
  CHECK_FALSE(cast::parse_set_score("Quite diverse overall.").has_value());
}

TEST_CASE("chat request and response plumbing") {
  cast::LlmEndpoint e;
  e.model = "judge-model";
  const auto body = nlohmann::json::parse(cast::build_chat_request(e, "hello"));
  CHECK(body["model"] == "judge-model");
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "hello");
  CHECK(body["temperature"] == 0);
  CHECK(cast::extract_chat_content(chat_response("hi")) == "hi");
  CHECK_FALSE(cast::extract_chat_content("{}").has_value());
  CHECK_FALSE(cast::extract_chat_content("not json").has_value());
}

TEST_CASE("judge scores against a mock endpoint") {
  MockServer server({{200, chat_response("Cluster 1: 4 - coherent\nCluster 2: 2 - vague")},
                     {200, chat_response("Set A: 3 Distinct subjects.")}});
  auto endpoint = server.endpoint();
  endpoint.api_key = "test-key";
  const auto r = cast::llm_judge(kTopics, endpoint);
  CHECK(r.topic_coherence == 3.0);
  CHECK(r.cluster_scores == std::vector<double>{4, 2});
  CHECK(r.topic_diversity == 3.0);
  CHECK(r.transcripts.size() == 2);
  REQUIRE(server.authorization.size() == 2);
  CHECK(server.authorization[0] == "Bearer test-key");
  const auto sent = nlohmann::json::parse(server.requests[0]);
  CHECK(sent["messages"][0]["content"] == cast::render_coherence_prompt(kTopics));
}

TEST_CASE("malformed replies are retried, then reported with transcripts") {
  MockServer server({{200, chat_response("I think they are fine.")},
                     {200, chat_response("Still prose.")}});
  auto endpoint = server.endpoint();
  endpoint.max_retries = 1;
  try {
    cast::llm_judge(kTopics, endpoint);
    FAIL("expected LlmJudgeError");
  } catch (const cast::LlmJudgeError& e) {
    CHECK(e.kind() == cast::ErrorKind::service);
    REQUIRE(e.transcripts().size() == 2);
    CHECK(e.transcripts()[0].response == "I think they are fine.");
    CHECK(e.transcripts()[1].response == "Still prose.");
  }
}

TEST_CASE("a malformed first reply recovers on retry") {
  MockServer server({{200, chat_response("prose")},
                     {200, chat_response("Cluster 1: 3 - a\nCluster 2: 3 - b")},
                     {200, chat_response("Set A: 2 Overlap.")}});
  const auto r = cast::llm_judge(kTopics, server.endpoint());
  CHECK(r.topic_coherence == 3.0);
  CHECK(r.topic_diversity == 2.0);
  CHECK(r.transcripts.size() == 3);
}

TEST_CASE("out-of-range scores are errors") {
  MockServer server({{200, chat_response("Cluster 1: 5 - a\nCluster 2: 3 - b")}});
  CHECK_THROWS_AS(cast::llm_judge(kTopics, server.endpoint()), cast::LlmJudgeError);
}

TEST_CASE("transport retries server errors and rejects client errors") {
  {
    MockServer server({{503, "busy"}, {200, chat_response("Cluster 1: 4 - a\nCluster 2: 4 - b")},
                       {200, chat_response("Set A: 4 Wide.")}});
    CHECK(cast::llm_judge(kTopics, server.endpoint()).topic_coherence == 4.0);
  }
  {
    MockServer server({{401, "denied"}});
    try {
      cast::llm_judge(kTopics, server.endpoint());
      FAIL("expected a service error");
    } catch (const cast::Error& e) {
      CHECK(e.kind() == cast::ErrorKind::service);
      CHECK(std::string(e.what()).find("401") != std::string::npos);
    }
  }
  auto endpoint = MockServer({}).endpoint();  // port now closed
  endpoint.timeout_seconds = 1;
  CHECK_THROWS_AS(cast::llm_judge(kTopics, endpoint), cast::Error);
}
