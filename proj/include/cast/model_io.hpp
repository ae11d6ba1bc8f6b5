#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cast/evaluation.hpp"
#include "cast/topic_model.hpp"

namespace cast {

inline constexpr int kFormatVersion = 1;

/// Every knob of a run. Serialized into each artifact.
struct RunConfig {
  std::string input;                  // corpus path
  std::string corpus_format = "auto";  // auto, plain, jsonl
  std::string embeddings;             // CASTEMB path
  std::string stopwords;              // optional stopword list path
  std::string out;                    // artifact path; empty writes to stdout only
  std::string model_path;             // eval input
  std::string reference;              // eval reference corpus; empty reuses the model's corpus
  TopicModelParams model;
  NpmiParams npmi;
  std::string llm_endpoint;
  std::string llm_model = "gpt-4-turbo";
  std::vector<double> ablate_thresholds = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  std::size_t ablate_repeats = 5;
  std::vector<double> report_thresholds = {0.5, 0.4, 0.3};
  std::size_t report_top_n = 10;
};

nlohmann::ordered_json run_config_to_json(const RunConfig& config);

/// Overlays the keys present in `j` onto `config`. Unknown keys and wrong
/// types are usage errors.
void apply_run_config_json(const nlohmann::json& j, RunConfig& config);

/// Reads a config file: either a bare config object or any artifact carrying
/// one under "config".
RunConfig load_run_config(const std::filesystem::path& path);
void apply_run_config_file(const std::filesystem::path& path, RunConfig& config);

nlohmann::ordered_json model_to_json(const TopicModel& model, const RunConfig& config);

/// Topic words and member counts recovered from a model artifact.
struct LoadedModel {
  RunConfig config;
  TopicWords topic_words;
  std::vector<std::size_t> member_counts;
};

LoadedModel read_model(const std::filesystem::path& path);

/// Pretty-printed JSON with a trailing newline.
std::string dump_artifact(const nlohmann::ordered_json& j);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cast
