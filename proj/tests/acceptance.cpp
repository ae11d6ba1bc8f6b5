// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <sys/wait.h>

#include "cast/cli.hpp"
#include "cast/clusterer.hpp"
#include "cast/evaluation.hpp"
#include "cast/model_io.hpp"
#include "cast/synthetic.hpp"
#include "cast/topic_model.hpp"
#include "support.hpp"

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const cast::PlantedCorpus& planted() {
  static const auto corpus = cast::make_planted_corpus();
  return corpus;
}

const cast::EmbeddingStore& planted_store() {
  static const auto store = cast::synthetic_provider(planted().docs, {}, planted().plan);
  return store;
}

cast::TopicModelParams planted_params() {
  cast::TopicModelParams params;
  params.reduce.method = cast::ReduceMethod::umap;
  params.cluster.min_cluster_size = 15;
  params.n_topics = 3;
  return params;
}

double brute_ss(const std::vector<std::vector<double>>& rows) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (i == j) continue;
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (std::size_t d = 0; d < rows[i].size(); ++d) {
        dot += rows[i][d] * rows[j][d];
        ni += rows[i][d] * rows[i][d];
        nj += rows[j][d] * rows[j][d];
      }
      total += dot / std::sqrt(ni * nj);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

Outcome self_similarity_oracle(double& timed) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  const std::size_t dim = 64;
  auto store = cast::make_store(dim, 1);
  store.doc_embeddings(0, 0) = 1.0f;
  cast::Vocabulary vocab;
  std::map<std::string, std::vector<std::vector<double>>> raw;
  for (int w = 0; w < 200; ++w) {
    const std::string word = "word" + std::to_string(w);
    const std::size_t p = 2 + rng() % 29;
    std::vector<double> centre(dim);
    for (auto& x : centre) x = g(rng);
    const double spread = 0.2 + 0.3 * (w % 7);
    for (std::size_t i = 0; i < p; ++i) {
      std::vector<float> v(dim);
      double n2 = 0.0;
      std::vector<double> tmp(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        tmp[d] = centre[d] + spread * g(rng);
        n2 += tmp[d] * tmp[d];
      }
      for (std::size_t d = 0; d < dim; ++d) v[d] = static_cast<float>(tmp[d] / std::sqrt(n2));
      store.add_occurrence(word, 0, v);
      raw[word].emplace_back(v.begin(), v.end());
    }
    vocab.entries[word] = {p, 1};
  }
  const auto start = std::chrono::steady_clock::now();
  const auto agg = cast::aggregate_word_embeddings(store, vocab);
  timed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double worst = 0.0;
  for (const auto& [word, rows] : raw) {
    const auto& p = agg.profiles.at(word);
    if (!p.self_similarity) return {false, word + " has no self-similarity"};
    worst = std::max(worst, std::abs(*p.self_similarity - brute_ss(rows)));
  }
  std::ostringstream d;
  d << "200 words, max |fast - pairwise| = " << std::scientific << std::setprecision(2) << worst
    << " (tol 1e-9), aggregation " << std::fixed << timed << " s (limit 5 s)";
  return {worst <= 1e-9 && timed < 5.0, d.str()};
}

Outcome threshold_partition() {
  cast::ProfileMap profiles;
  std::map<std::string, std::set<std::string>> columns;
  std::ifstream in(testing::fixture("reference_ss_profiles.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    cast::WordProfile p;
    p.word = line.substr(0, a);
    p.self_similarity = std::stod(line.substr(a + 1, b - a - 1));
    p.occurrence_count = 2;
    profiles.emplace(p.word, p);
    columns[line.substr(b + 1)].insert(p.word);
  }
  auto expected = columns["top"];
  bool ok = cast::filter_by_threshold(profiles, 0.5) == expected;
  expected.insert(columns["0.5"].begin(), columns["0.5"].end());
  ok = ok && cast::filter_by_threshold(profiles, 0.4) == expected;
  expected.insert(columns["0.4"].begin(), columns["0.4"].end());
  const auto at3 = cast::filter_by_threshold(profiles, 0.3);
  ok = ok && at3 == expected;
  ok = ok && !at3.count("due") && !cast::filter_by_threshold(profiles, 0.4).count("driver");
  ok = ok && profiles.at("armenian").self_similarity == 0.833 &&
       profiles.at("genocide").self_similarity == 0.781 &&
       profiles.at("due").self_similarity == 0.294 && profiles.at("good").self_similarity == 0.297;
  return {ok, std::to_string(profiles.size()) + " words, partitions at 0.5/0.4/0.3 exact"};
}

Outcome planted_recovery(double& timed) {
  const auto start = std::chrono::steady_clock::now();
  const auto& p = planted();
  const auto model = cast::fit(p.docs, planted_store(), planted_params());
  timed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (model.topics.size() != 3) return {false, std::to_string(model.topics.size()) + " topics"};
  const double purity = testing::purity(model.doc_labels, p.truth);
  bool words_ok = true;
  std::set<int> generators;
  cast::TopicWords words;
  for (const auto& topic : model.topics) {
    std::map<int, std::size_t> votes;
    for (auto d : topic.member_doc_ids) ++votes[p.truth[d]];
    const int owner = std::max_element(votes.begin(), votes.end(), [](auto& a, auto& b) {
                        return a.second < b.second;
                      })->first;
    generators.insert(owner);
    const auto& vocab = p.topic_vocab[owner];
    if (topic.top_words.size() < 5) words_ok = false;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, topic.top_words.size()); ++i) {
      words_ok &= std::find(vocab.begin(), vocab.end(), topic.top_words[i].word) != vocab.end();
    }
    std::vector<std::string> ws;
    for (const auto& w : topic.top_words) ws.push_back(w.word);
    words.push_back(ws);
  }
  double td = 0.0;
  try {
    td = cast::topic_diversity(words);
  } catch (const cast::Error& e) {
    return {false, e.what()};
  }
  std::ostringstream d;
  d << std::fixed << std::setprecision(4) << "purity " << purity << " (min 0.9), top-5 words "
    << (words_ok && generators.size() == 3 ? "own vocabulary" : "MIXED") << ", TD " << td
    << " (need 1.0), " << std::setprecision(2) << timed << " s (limit 60 s)";
  return {purity >= 0.9 && words_ok && generators.size() == 3 && td == 1.0 && timed < 60.0, d.str()};
}

std::string topic_layout(const cast::TopicModel& model) {
  const auto j = cast::model_to_json(model, {});
  nlohmann::ordered_json out;
  for (const auto& t : j["topics"]) out["vectors"].push_back(t["vector"]);
  out["doc_labels"] = j["doc_labels"];
  return out.dump();
}

Outcome filter_independence() {
  auto params = planted_params();
  params.ss_threshold = 0.0;
  const auto low = cast::fit(planted().docs, planted_store(), params);
  params.ss_threshold = 0.4;
  const auto high = cast::fit(planted().docs, planted_store(), params);
  const bool same = topic_layout(low) == topic_layout(high);
  return {same, std::string("serialized topic vectors and labels ") + (same ? "identical" : "DIFFER") +
                    " (candidates " + std::to_string(low.diagnostics.candidates) + " vs " +
                    std::to_string(high.diagnostics.candidates) + ")"};
}

Outcome hdbscan_fixture() {
  const auto fixture = testing::load_two_blobs();
  cast::ClusterParams params;
  params.min_cluster_size = 5;
  const auto r = cast::hdbscan(fixture.points, params);
  const bool labels_ok = r.labels == testing::canonical_labels(fixture.labels);

  const auto core = cast::core_distances(fixture.points, params.effective_min_samples(fixture.points.rows()));
  const std::size_t n = fixture.points.rows();
  std::vector<cast::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      edges.push_back({i, j, std::max({core[i], core[j],
                                       cast::euclidean(fixture.points.row(i), fixture.points.row(j))})});
    }
  }
  std::sort(edges.begin(), edges.end(), [](auto& a, auto& b) { return a.weight < b.weight; });
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t v) {
    return parent[v] == v ? v : parent[v] = find(parent[v]);
  };
  double kruskal = 0.0;
  for (const auto& e : edges) {
    const auto a = find(e.a), b = find(e.b);
    if (a != b) {
      parent[a] = b;
      kruskal += e.weight;
    }
  }
  double prim = 0.0;
  for (const auto& e : r.mst) prim += e.weight;
  std::ostringstream d;
  d << "labels " << (labels_ok ? "match" : "DIFFER") << " the reference (" << r.n_clusters()
    << " clusters, " << r.n_noise() << " noise), |MST - Kruskal| = " << std::scientific
    << std::setprecision(2) << std::abs(prim - kruskal) << " (tol 1e-9)";
  return {labels_ok && std::abs(prim - kruskal) <= 1e-9, d.str()};
}

Outcome npmi_oracle() {
  std::ifstream in(testing::fixture("npmi_windows.json"));
  const auto j = nlohmann::json::parse(in);
  const auto docs = testing::docs_from(j.at("documents").get<std::vector<std::string>>());
  const std::size_t window = j.at("window_size");
  const double total = j.at("total_windows");
  std::vector<std::string> words;
  for (const auto& [w, c] : j.at("counts").items()) words.push_back(w);
  const cast::WindowCounts counts(docs, words, window);
  const double eps = 1e-12;
  double worst = 0.0;
  for (const auto& row : j.at("joint")) {
    const std::string a = row[0], b = row[1];
    const double cab = row[2];
    if (cab == 0) continue;
    const double ca = j["counts"][a], cb = j["counts"][b];
    const double pab = cab / total + eps;
    const double manual = (std::log(pab) - std::log(ca / total) - std::log(cb / total)) / -std::log(pab);
    worst = std::max(worst, std::abs(cast::pair_npmi(counts, a, b, eps) - manual));
  }
  const double disjoint = cast::pair_npmi(counts, "apple", "egg", eps);
  const auto always = testing::docs_from({"red blue", "blue red", "red blue red blue"});
  const double perfect = cast::pair_npmi(cast::WindowCounts(always, {"red", "blue"}, 2), "red", "blue", eps);
  std::ostringstream d;
  d << "max pair error " << std::scientific << std::setprecision(2) << worst << " (tol 1e-9), perfect "
    << std::fixed << std::setprecision(4) << perfect << ", disjoint " << disjoint;
  return {worst <= 1e-9 && perfect == 1.0 && disjoint <= -0.99, d.str()};
}

int run_binary(const std::string& args) {
  const int s = std::system((std::string(CAST_BINARY) + " " + args).c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

Outcome cli_determinism() {
  testing::TempDir dir("acceptance");
  const auto corpus = dir / "corpus.jsonl";
  const auto emb = dir / "emb.castemb";
  testing::write_jsonl_corpus(corpus, planted().docs);
  cast::write_castemb(planted_store(), emb);
  const auto out = dir / "model.json";
  const std::string args = "--quiet --seed 13 model --input " + corpus.string() + " --embeddings " +
                           emb.string() + " --n-topics 3 --min-cluster-size 15 --out " + out.string() +
                           " > /dev/null";
  std::string outputs[2];
  for (auto& text : outputs) {
    if (const int code = run_binary(args); code != 0) {
      return {false, "cast model exited with " + std::to_string(code)};
    }
    text = testing::read_file(out);
    std::filesystem::remove(out);
  }
  const bool same = outputs[0] == outputs[1] && !outputs[0].empty();
  return {same, std::string("two runs with seed 13: model.json ") +
                    (same ? "byte-identical" : "DIFFER") + " (" +
                    std::to_string(outputs[0].size()) + " bytes)"};
}

Outcome ablation_shape(double& timed) {
  cast::RunConfig config;
  config.model = planted_params();
  config.ablate_thresholds = {0.0, 0.2, 0.4, 0.6, 0.8};
  config.ablate_repeats = 5;
  const auto start = std::chrono::steady_clock::now();
  const auto rows = cast::run_ablation(planted().docs, planted_store(), config);
  timed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto words = cast::prepare_words(planted().docs, planted_store(), config.model);
  bool flags_ok = rows.size() == 5;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool empty = cast::filter_by_threshold(words.aggregation.profiles, rows[i].threshold).empty();
    if (empty && !rows[i].insufficient_candidates) flags_ok = false;
    if (!rows[i].insufficient_candidates && !(rows[i].tc_mean && rows[i].td_mean)) flags_ok = false;
    if (!rows[i].insufficient_candidates && rows[i].runs != 5) flags_ok = false;
    flagged += rows[i].insufficient_candidates;
  }
  std::ostringstream d;
  d << rows.size() << " rows (need 5), " << flagged << " flagged, " << std::fixed << std::setprecision(2)
    << timed << " s (limit 300 s)";
  return {flags_ok && timed < 300.0, d.str()};
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Outcome()> check;
  };
  double t = 0.0;
  const std::vector<Criterion> criteria = {
      {"self-similarity-oracle", [&] { return self_similarity_oracle(t); }},
      {"threshold-partition", threshold_partition},
      {"planted-topic-recovery", [&] { return planted_recovery(t); }},
      {"word-filter-independence", filter_independence},
      {"hdbscan-fixture", hdbscan_fixture},
      {"npmi-hand-oracle", npmi_oracle},
      {"cli-determinism", cli_determinism},
      {"ablation-shape", [&] { return ablation_shape(t); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " [" << std::fixed << std::setprecision(2) << s
              << " s] " << o.detail << std::endl;
    failures += !o.pass;
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
