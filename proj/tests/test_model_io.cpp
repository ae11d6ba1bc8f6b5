#include <doctest.h>

#include "cast/error.hpp"
#include "cast/model_io.hpp"
#include "support.hpp"

TEST_CASE("run config survives a JSON round trip") {
  cast::RunConfig c;
  c.input = "corpus.jsonl";
  c.embeddings = "emb.castemb";
  c.model.seed = 99;
  c.model.ss_threshold = 0.25;
  c.model.n_topics = 4;
  c.model.reduce.method = cast::ReduceMethod::pca;
  c.model.reduce.min_dist = 0.3;
  c.model.cluster.min_cluster_size = 12;
  c.model.cluster.min_samples = 4;
  c.npmi.window_size = 0;
  c.ablate_thresholds = {0.1, 0.9};
  c.report_top_n = 3;

  cast::RunConfig back;
  cast::apply_run_config_json(cast::run_config_to_json(c), back);
  CHECK(cast::run_config_to_json(back) == cast::run_config_to_json(c));
  CHECK(back.model.cluster.min_samples == 4u);
  CHECK(back.model.reduce.method == cast::ReduceMethod::pca);
}

TEST_CASE("min_samples is written resolved") {
  cast::RunConfig c;
  c.model.cluster.min_cluster_size = 8;
  CHECK(cast::run_config_to_json(c)["cluster"]["min_samples"] == 8);
}

TEST_CASE("config overlays only the keys present") {
  cast::RunConfig c;
  c.input = "keep.jsonl";
  cast::apply_run_config_json(nlohmann::json::parse(R"({"n_topics": 7, "reducer": {"n_epochs": 50}})"), c);
  CHECK(c.input == "keep.jsonl");
  CHECK(c.model.n_topics == 7);
  CHECK(c.model.reduce.n_epochs == 50);
  CHECK(c.model.reduce.n_neighbors == 15);
}

TEST_CASE("bad config keys and types are usage errors") {
  cast::RunConfig c;
  auto kind_of = [&](const char* text) {
    try {
      cast::apply_run_config_json(nlohmann::json::parse(text), c);
    } catch (const cast::Error& e) {
      return e.kind();
    }
    return cast::ErrorKind::data;  // not thrown
  };
  CHECK(kind_of(R"({"n_topic": 3})") == cast::ErrorKind::usage);
  CHECK(kind_of(R"({"reducer": {"neighbours": 3}})") == cast::ErrorKind::usage);
  CHECK(kind_of(R"({"n_topics": "three"})") == cast::ErrorKind::usage);
  CHECK(kind_of(R"({"n_topics": -1})") == cast::ErrorKind::usage);
  CHECK(kind_of(R"([1, 2])") == cast::ErrorKind::usage);
}

TEST_CASE("model artifacts read back") {
  testing::TempDir dir("model_io");
  cast::TopicModel model;
  cast::Topic t;
  t.id = 0;
  t.vector = {1.0, 0.0};
  t.member_doc_ids = {0, 2};
  t.top_words = {{"alpha", 0.9}, {"beta", 0.8}};
  model.topics.push_back(t);
  model.doc_labels = {0, -1, 0};
  cast::RunConfig c;
  c.input = "in.jsonl";
  const auto text = cast::dump_artifact(cast::model_to_json(model, c));
  CHECK(text.back() == '\n');
  cast::write_text_file(dir / "model.json", text);

  const auto loaded = cast::read_model(dir / "model.json");
  CHECK(loaded.config.input == "in.jsonl");
  CHECK(loaded.topic_words == cast::TopicWords{{"alpha", "beta"}});
  CHECK(loaded.member_counts == std::vector<std::size_t>{2});

  cast::RunConfig replay;
  cast::apply_run_config_file(dir / "model.json", replay);
  CHECK(cast::run_config_to_json(replay) == cast::run_config_to_json(c));

  testing::write_file(dir / "other.json", R"({"format": "cast-eval", "config": {}})");
  CHECK_THROWS_AS(cast::read_model(dir / "other.json"), cast::Error);
  testing::write_file(dir / "broken.json", "{");
  CHECK_THROWS_AS(cast::read_model(dir / "broken.json"), cast::Error);
}
