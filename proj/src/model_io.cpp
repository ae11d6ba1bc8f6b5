#include "cast/model_io.hpp"

#include <fstream>
#include <sstream>

#include "cast/error.hpp"

namespace cast {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t get_count(const json& v, const std::string& key) {
  if (!v.is_number_unsigned()) throw usage_error("config: '" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

double get_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw usage_error("config: '" + key + "' must be a number");
  return v.get<double>();
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw usage_error("config: '" + key + "' must be true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw usage_error("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> get_reals(const json& v, const std::string& key) {
  if (!v.is_array()) throw usage_error("config: '" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(get_real(x, key));
  return out;
}

const json& get_object(const json& v, const std::string& key) {
  if (!v.is_object()) throw usage_error("config: '" + key + "' must be an object");
  return v;
}

[[noreturn]] void unknown_key(const std::string& key) {
  throw usage_error("config: unknown key '" + key + "'");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw usage_error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

ordered_json run_config_to_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& r = m.reduce;
  ordered_json j;
  j["input"] = c.input;
  j["corpus_format"] = c.corpus_format;
  j["embeddings"] = c.embeddings;
  j["stopwords"] = c.stopwords;
  j["out"] = c.out;
  j["model_path"] = c.model_path;
  j["reference"] = c.reference;
  j["seed"] = m.seed;
  j["ss_threshold"] = m.ss_threshold;
  j["min_word_freq"] = m.min_word_freq;
  j["n_topics"] = m.n_topics;
  j["top_k"] = m.top_k;
  j["soft_words"] = m.soft_words;
  j["reducer"] = {{"method", to_string(r.method)},
                  {"n_components", r.n_components},
                  {"n_neighbors", r.n_neighbors},
                  {"min_dist", r.min_dist},
                  {"spread", r.spread},
                  {"n_epochs", r.n_epochs},
                  {"negative_sample_rate", r.negative_sample_rate},
                  {"parallel_layout", r.parallel_layout}};
  j["cluster"] = {{"min_cluster_size", m.cluster.min_cluster_size},
                  {"min_samples", m.cluster.min_samples.value_or(m.cluster.min_cluster_size)}};
  j["npmi"] = {{"window_size", c.npmi.window_size}, {"epsilon", c.npmi.epsilon}};
  j["llm"] = {{"endpoint", c.llm_endpoint}, {"model", c.llm_model}};
  j["ablate"] = {{"thresholds", c.ablate_thresholds}, {"repeats", c.ablate_repeats}};
  j["ss_report"] = {{"thresholds", c.report_thresholds}, {"top_n", c.report_top_n}};
  return j;
}

void apply_run_config_json(const json& j, RunConfig& c) {
  auto& m = c.model;
  auto& r = m.reduce;
  for (const auto& [key, v] : get_object(j, "config").items()) {
    if (key == "input") c.input = get_string(v, key);
    else if (key == "corpus_format") c.corpus_format = get_string(v, key);
    else if (key == "embeddings") c.embeddings = get_string(v, key);
    else if (key == "stopwords") c.stopwords = get_string(v, key);
    else if (key == "out") c.out = get_string(v, key);
    else if (key == "model_path") c.model_path = get_string(v, key);
    else if (key == "reference") c.reference = get_string(v, key);
    else if (key == "seed") m.seed = get_count(v, key);
    else if (key == "ss_threshold") m.ss_threshold = get_real(v, key);
    else if (key == "min_word_freq") m.min_word_freq = get_count(v, key);
    else if (key == "n_topics") m.n_topics = get_count(v, key);
    else if (key == "top_k") m.top_k = get_count(v, key);
    else if (key == "soft_words") m.soft_words = get_bool(v, key);
    else if (key == "reducer") {
      for (const auto& [k, x] : get_object(v, key).items()) {
        const auto name = key + "." + k;
        if (k == "method") r.method = parse_reduce_method(get_string(x, name));
        else if (k == "n_components") r.n_components = get_count(x, name);
        else if (k == "n_neighbors") r.n_neighbors = get_count(x, name);
        else if (k == "min_dist") r.min_dist = get_real(x, name);
        else if (k == "spread") r.spread = get_real(x, name);
        else if (k == "n_epochs") r.n_epochs = get_count(x, name);
        else if (k == "negative_sample_rate") r.negative_sample_rate = get_real(x, name);
        else if (k == "parallel_layout") r.parallel_layout = get_bool(x, name);
        else unknown_key(name);
      }
    } else if (key == "cluster") {
      for (const auto& [k, x] : get_object(v, key).items()) {
        const auto name = key + "." + k;
        if (k == "min_cluster_size") m.cluster.min_cluster_size = get_count(x, name);
        else if (k == "min_samples") {
          if (x.is_null()) m.cluster.min_samples.reset();
          else m.cluster.min_samples = get_count(x, name);
        } else unknown_key(name);
      }
    } else if (key == "npmi") {
      for (const auto& [k, x] : get_object(v, key).items()) {
        const auto name = key + "." + k;
        if (k == "window_size") c.npmi.window_size = get_count(x, name);
        else if (k == "epsilon") c.npmi.epsilon = get_real(x, name);
        else unknown_key(name);
      }
    } else if (key == "llm") {
      for (const auto& [k, x] : get_object(v, key).items()) {
        const auto name = key + "." + k;
        if (k == "endpoint") c.llm_endpoint = get_string(x, name);
        else if (k == "model") c.llm_model = get_string(x, name);
        else unknown_key(name);
      }
    } else if (key == "ablate") {
      for (const auto& [k, x] : get_object(v, key).items()) {
        const auto name = key + "." + k;
        if (k == "thresholds") c.ablate_thresholds = get_reals(x, name);
        else if (k == "repeats") c.ablate_repeats = get_count(x, name);
        else unknown_key(name);
      }
    } else if (key == "ss_report") {
      for (const auto& [k, x] : get_object(v, key).items()) {
        const auto name = key + "." + k;
        if (k == "thresholds") c.report_thresholds = get_reals(x, name);
        else if (k == "top_n") c.report_top_n = get_count(x, name);
        else unknown_key(name);
      }
    } else {
      unknown_key(key);
    }
  }
}

void apply_run_config_file(const std::filesystem::path& path, RunConfig& config) {
  const auto j = read_json_file(path);
  if (j.is_object() && j.contains("config") && j.contains("format")) {
    apply_run_config_json(j.at("config"), config);
  } else {
    apply_run_config_json(j, config);
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig config;
  apply_run_config_file(path, config);
  return config;
}

ordered_json model_to_json(const TopicModel& model, const RunConfig& config) {
  ordered_json j;
  j["format"] = "cast-model";
  j["format_version"] = kFormatVersion;
  j["config"] = run_config_to_json(config);
  j["topics"] = ordered_json::array();
  for (const auto& t : model.topics) {
    ordered_json words = ordered_json::array();
    for (const auto& w : t.top_words) words.push_back({{"word", w.word}, {"similarity", w.score}});
    j["topics"].push_back({{"id", t.id},
                           {"member_count", t.member_doc_ids.size()},
                           {"top_words", std::move(words)},
                           {"members", t.member_doc_ids},
                           {"vector", t.vector}});
  }
  j["doc_labels"] = model.doc_labels;
  const auto& d = model.diagnostics;
  j["diagnostics"] = {{"documents", d.documents},
                      {"empty_documents", d.empty_documents},
                      {"vocabulary_size", d.vocabulary_size},
                      {"profiled_words", d.profiled_words},
                      {"missing_words", d.missing_words},
                      {"insufficient_occurrences", d.insufficient_occurrences},
                      {"filtered_by_threshold", d.filtered_by_threshold},
                      {"candidates", d.candidates},
                      {"clusters_found", d.clusters_found},
                      {"dropped_clusters", d.dropped_clusters},
                      {"noise_documents", d.noise_documents},
                      {"warnings", d.warnings}};
  return j;
}

LoadedModel read_model(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  if (!j.is_object() || j.value("format", "") != "cast-model") {
    throw data_error("'" + path.string() + "' is not a cast model file");
  }
  if (j.value("format_version", 0) != kFormatVersion) {
    throw data_error("'" + path.string() + "' has an unsupported format_version");
  }
  LoadedModel out;
  try {
    apply_run_config_json(j.at("config"), out.config);
    for (const auto& t : j.at("topics")) {
      std::vector<std::string> words;
      for (const auto& w : t.at("top_words")) words.push_back(w.at("word").get<std::string>());
      out.topic_words.push_back(std::move(words));
      out.member_counts.push_back(t.at("member_count").get<std::size_t>());
    }
  } catch (const json::exception& e) {
    throw data_error("malformed model file '" + path.string() + "': " + e.what());
  }
  return out;
}

std::string dump_artifact(const ordered_json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw usage_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw usage_error("error while writing '" + path.string() + "'");
}

}  // namespace cast
