#include "cast/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cast/evaluation.hpp"
#include "cast/llm_judge.hpp"
#include "cast/topic_model.hpp"
#include "cast/word_aggregation.hpp"

namespace cast {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Globals {
  std::string format = "text";
  bool quiet = false;
  std::string config_path;
};

/// Flag values parsed from the command line, plus the setters that copy the
/// ones actually given onto a resolved config.
struct Overrides {
  RunConfig flags;
  std::size_t min_samples = 0;
  std::string reducer;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> setters;

  void bind(CLI::Option* opt, std::function<void(RunConfig&)> apply) {
    setters.emplace_back(opt, std::move(apply));
  }

  void apply(RunConfig& config) const {
    for (const auto& [opt, set] : setters) {
      if (opt->count() > 0) set(config);
    }
  }
};

class Stopwatch {
 public:
  Stopwatch(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}

  template <typename F>
  auto time(const std::string& stage, F&& body) -> decltype(body()) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      report(stage, start);
    } else {
      auto result = body();
      report(stage, start);
      return result;
    }
  }

 private:
  void report(const std::string& stage, std::chrono::steady_clock::time_point start) {
    if (quiet_) return;
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    err_ << "[time] " << stage << ' ' << std::fixed << std::setprecision(3) << elapsed.count()
         << " s\n";
  }

  std::ostream& err_;
  bool quiet_;
};

void add_input_options(CLI::App* sub, Overrides& o) {
  o.bind(sub->add_option("--input", o.flags.input, "Corpus file (JSONL with \"text\" or one document per line)"),
         [&o](RunConfig& c) { c.input = o.flags.input; });
  o.bind(sub->add_option("--corpus-format", o.flags.corpus_format, "Corpus format")
             ->check(CLI::IsMember({"auto", "plain", "jsonl"})),
         [&o](RunConfig& c) { c.corpus_format = o.flags.corpus_format; });
  o.bind(sub->add_option("--embeddings", o.flags.embeddings, "CASTEMB embeddings file"),
         [&o](RunConfig& c) { c.embeddings = o.flags.embeddings; });
  o.bind(sub->add_option("--stopwords", o.flags.stopwords, "Stopword list, one word per line"),
         [&o](RunConfig& c) { c.stopwords = o.flags.stopwords; });
  o.bind(sub->add_option("--min-word-freq", o.flags.model.min_word_freq, "Minimum corpus frequency"),
         [&o](RunConfig& c) { c.model.min_word_freq = o.flags.model.min_word_freq; });
}

void add_model_options(CLI::App* sub, Overrides& o) {
  auto& m = o.flags.model;
  o.bind(sub->add_option("--ss-threshold", m.ss_threshold, "Self-similarity threshold"),
         [&o](RunConfig& c) { c.model.ss_threshold = o.flags.model.ss_threshold; });
  o.bind(sub->add_option("--n-topics", m.n_topics, "Number of topics"),
         [&o](RunConfig& c) { c.model.n_topics = o.flags.model.n_topics; });
  o.bind(sub->add_option("--top-k", m.top_k, "Words per topic"),
         [&o](RunConfig& c) { c.model.top_k = o.flags.model.top_k; });
  o.bind(sub->add_flag("--soft-words", m.soft_words, "Rank every candidate under every topic"),
         [&o](RunConfig& c) { c.model.soft_words = o.flags.model.soft_words; });
  o.bind(sub->add_option("--reducer", o.reducer, "Dimensionality reducer")
             ->check(CLI::IsMember({"umap", "pca"})),
         [&o](RunConfig& c) { c.model.reduce.method = parse_reduce_method(o.reducer); });
  o.bind(sub->add_option("--n-components", m.reduce.n_components, "Reduced dimensions"),
         [&o](RunConfig& c) { c.model.reduce.n_components = o.flags.model.reduce.n_components; });
  o.bind(sub->add_option("--n-neighbors", m.reduce.n_neighbors, "UMAP neighbours"),
         [&o](RunConfig& c) { c.model.reduce.n_neighbors = o.flags.model.reduce.n_neighbors; });
  o.bind(sub->add_option("--min-dist", m.reduce.min_dist, "UMAP min_dist"),
         [&o](RunConfig& c) { c.model.reduce.min_dist = o.flags.model.reduce.min_dist; });
  o.bind(sub->add_option("--epochs", m.reduce.n_epochs, "UMAP optimisation epochs"),
         [&o](RunConfig& c) { c.model.reduce.n_epochs = o.flags.model.reduce.n_epochs; });
  o.bind(sub->add_option("--min-cluster-size", m.cluster.min_cluster_size, "HDBSCAN min_cluster_size"),
         [&o](RunConfig& c) { c.model.cluster.min_cluster_size = o.flags.model.cluster.min_cluster_size; });
  o.bind(sub->add_option("--min-samples", o.min_samples, "HDBSCAN min_samples (default: min_cluster_size)"),
         [&o](RunConfig& c) { c.model.cluster.min_samples = o.min_samples; });
}

void add_npmi_options(CLI::App* sub, Overrides& o) {
  o.bind(sub->add_option("--window", o.flags.npmi.window_size, "NPMI window in tokens (0: whole document)"),
         [&o](RunConfig& c) { c.npmi.window_size = o.flags.npmi.window_size; });
  o.bind(sub->add_option("--epsilon", o.flags.npmi.epsilon, "NPMI smoothing inside logs"),
         [&o](RunConfig& c) { c.npmi.epsilon = o.flags.npmi.epsilon; });
}

void add_out_option(CLI::App* sub, Overrides& o) {
  o.bind(sub->add_option("--out", o.flags.out, "Write the JSON artifact here"),
         [&o](RunConfig& c) { c.out = o.flags.out; });
}

RunConfig resolve(const Globals& g, const Overrides& o, RunConfig base, const CLI::Option* seed_opt,
                  std::uint64_t seed) {
  if (!g.config_path.empty()) apply_run_config_file(g.config_path, base);
  o.apply(base);
  if (seed_opt->count() > 0) base.model.seed = seed;
  return base;
}

std::vector<Document> load_input_corpus(const std::string& path, const std::string& format) {
  if (path.empty()) throw usage_error("no corpus given (--input)");
  CorpusFormat f;
  if (format == "plain") f = CorpusFormat::plain_lines;
  else if (format == "jsonl") f = CorpusFormat::jsonl;
  else if (format == "auto") f = guess_corpus_format(path);
  else throw usage_error("unknown corpus format '" + format + "'");
  return load_corpus(path, f);
}

EmbeddingStore load_store(const std::string& path) {
  if (path.empty()) throw usage_error("no embeddings given (--embeddings)");
  if (!std::filesystem::exists(path)) {
    throw usage_error("embeddings file not found: '" + path + "'");
  }
  auto store = read_castemb(path);
  validate_store(store);
  return store;
}

std::set<std::string> load_optional_stopwords(const std::string& path) {
  if (path.empty()) return {};
  return load_stopwords(path);
}

void check_thresholds(const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw usage_error("at least one threshold is required");
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw usage_error("thresholds must lie in [0, 1]");
  }
}

void emit(const Globals& g, const RunConfig& config, const ordered_json& artifact,
          const std::string& text, std::ostream& out) {
  const auto dumped = dump_artifact(artifact);
  if (!config.out.empty()) write_text_file(config.out, dumped);
  out << (g.format == "json" ? dumped : text);
}

void warn_all(const std::vector<std::string>& warnings, bool quiet, std::ostream& err) {
  if (quiet) return;
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

int cmd_model(const Globals& g, const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.model.validate();
  Stopwatch clock(err, g.quiet);
  const auto corpus = clock.time("load_corpus", [&] { return load_input_corpus(config.input, config.corpus_format); });
  const auto store = clock.time("load_embeddings", [&] { return load_store(config.embeddings); });
  const auto stopwords = load_optional_stopwords(config.stopwords);
  if (corpus.size() != store.n_docs()) {
    throw data_error("corpus has " + std::to_string(corpus.size()) +
                     " documents but the embedding store has " + std::to_string(store.n_docs()));
  }
  const auto words = clock.time("words", [&] { return prepare_words(corpus, store, config.model, stopwords); });
  const auto clusters = clock.time("cluster", [&] { return cluster_documents(store, config.model); });
  const auto model = clock.time("topics", [&] { return assemble_model(corpus, store, words, clusters, config.model); });
  warn_all(model.diagnostics.warnings, g.quiet, err);
  emit(g, config, model_to_json(model, config), format_topic_table(model), out);
  return 0;
}

ordered_json eval_to_json(const EvalReport& report, const RunConfig& config,
                          const std::optional<LlmJudgeResult>& llm) {
  ordered_json j;
  j["format"] = "cast-eval";
  j["format_version"] = kFormatVersion;
  j["config"] = run_config_to_json(config);
  j["top_k"] = report.top_k;
  j["npmi_per_topic"] = report.npmi_per_topic;
  j["npmi_mean"] = report.npmi_mean;
  j["topic_diversity"] = report.topic_diversity ? ordered_json(*report.topic_diversity) : ordered_json();
  if (report.topic_diversity_error) j["topic_diversity_error"] = *report.topic_diversity_error;
  if (llm) {
    ordered_json transcripts = ordered_json::array();
    for (const auto& x : llm->transcripts) {
      transcripts.push_back({{"prompt", x.prompt}, {"response", x.response}});
    }
    j["llm"] = {{"topic_coherence", llm->topic_coherence},
                {"cluster_scores", llm->cluster_scores},
                {"topic_diversity", llm->topic_diversity},
                {"transcripts", std::move(transcripts)}};
  } else {
    j["llm"] = nullptr;
  }
  return j;
}

int cmd_eval(const Globals& g, const RunConfig& config, const LoadedModel& loaded,
             std::ostream& out, std::ostream& err) {
  Stopwatch clock(err, g.quiet);
  const auto& reference_path = config.reference.empty() ? loaded.config.input : config.reference;
  if (reference_path.empty()) throw usage_error("no reference corpus (--reference)");
  const auto reference = clock.time("load_reference", [&] {
    return load_input_corpus(reference_path, config.reference.empty() ? loaded.config.corpus_format
                                                                      : config.corpus_format);
  });
  auto report = clock.time("npmi", [&] { return evaluate(loaded.topic_words, reference, config.npmi); });

  std::optional<LlmJudgeResult> llm;
  if (!config.llm_endpoint.empty()) {
    LlmEndpoint endpoint;
    endpoint.url = config.llm_endpoint;
    endpoint.model = config.llm_model;
    if (const char* key = std::getenv(kLlmApiKeyEnv)) endpoint.api_key = key;
    try {
      llm = clock.time("llm_judge", [&] { return llm_judge(loaded.topic_words, endpoint); });
    } catch (const LlmJudgeError& e) {
      if (!g.quiet) {
        for (const auto& x : e.transcripts()) err << "--- LLM response ---\n" << x.response << '\n';
      }
      throw;
    }
    report.llm_tc = llm->topic_coherence;
    report.llm_td = llm->topic_diversity;
  }
  emit(g, config, eval_to_json(report, config, llm), format_eval_text(report), out);
  return 0;
}

int cmd_ss_report(const Globals& g, const RunConfig& config, std::ostream& out, std::ostream& err) {
  check_thresholds(config.report_thresholds);
  if (config.model.min_word_freq < 1) throw usage_error("min_word_freq must be >= 1");
  Stopwatch clock(err, g.quiet);
  const auto corpus = load_input_corpus(config.input, config.corpus_format);
  const auto store = load_store(config.embeddings);
  const auto vocab = build_vocabulary(corpus, config.model.min_word_freq,
                                      load_optional_stopwords(config.stopwords));
  const auto aggregation = clock.time("aggregate", [&] { return aggregate_word_embeddings(store, vocab); });
  const auto report = ss_report(aggregation.profiles, config.report_thresholds, config.report_top_n);

  ordered_json j;
  j["format"] = "cast-ss-report";
  j["format_version"] = kFormatVersion;
  j["config"] = run_config_to_json(config);
  const auto body = ordered_json::parse(format_ss_report_json(report));
  for (const auto& [key, value] : body.items()) j[key] = value;
  emit(g, config, j, format_ss_report_text(report), out);
  return 0;
}

int cmd_ablate(const Globals& g, const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.model.validate();
  check_thresholds(config.ablate_thresholds);
  if (config.ablate_repeats < 1) throw usage_error("repeats must be >= 1");
  const auto corpus = load_input_corpus(config.input, config.corpus_format);
  const auto store = load_store(config.embeddings);
  const auto rows = run_ablation(corpus, store, config, g.quiet ? nullptr : &err);

  ordered_json j;
  j["format"] = "cast-ablation";
  j["format_version"] = kFormatVersion;
  j["config"] = run_config_to_json(config);
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"threshold", r.threshold},
                         {"runs", r.runs},
                         {"tc_mean", r.tc_mean ? ordered_json(*r.tc_mean) : ordered_json()},
                         {"td_mean", r.td_mean ? ordered_json(*r.td_mean) : ordered_json()},
                         {"tc_runs", r.tc_runs},
                         {"td_runs", r.td_runs},
                         {"flag", r.insufficient_candidates ? ordered_json("insufficient candidates")
                                                            : ordered_json()}});
  }
  emit(g, config, j, format_ablation_text(rows), out);
  return 0;
}

std::string format_norms(const NormStats& s) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << "min " << s.min << "  max " << s.max << "  mean "
      << s.mean;
  return out.str();
}

int cmd_validate(const Globals& g, const RunConfig& config, std::ostream& out) {
  if (config.embeddings.empty()) throw usage_error("no embeddings file given");
  const auto store = load_store(config.embeddings);
  const auto s = summarize_store(store);

  auto norms_json = [](const NormStats& n) {
    return ordered_json{{"min", n.min}, {"max", n.max}, {"mean", n.mean}, {"count", n.count}};
  };
  ordered_json j;
  j["format"] = "cast-validate";
  j["format_version"] = kFormatVersion;
  j["config"] = run_config_to_json(config);
  j["valid"] = true;
  j["dim"] = s.dim;
  j["documents"] = s.n_docs;
  j["occurrences"] = s.n_occurrences;
  j["distinct_words"] = s.n_distinct_words;
  j["document_norms"] = norms_json(s.doc_norms);
  j["occurrence_norms"] = norms_json(s.occurrence_norms);

  std::ostringstream text;
  text << "valid CASTEMB v" << kCastembVersion << ": " << config.embeddings << '\n'
       << "dim              " << s.dim << '\n'
       << "documents        " << s.n_docs << '\n'
       << "occurrences      " << s.n_occurrences << '\n'
       << "distinct words   " << s.n_distinct_words << '\n'
       << "document norms   " << format_norms(s.doc_norms) << '\n'
       << "occurrence norms " << format_norms(s.occurrence_norms) << '\n';
  emit(g, config, j, text.str(), out);
  return 0;
}

template <typename T>
double mean_of(const std::vector<T>& v) {
  double sum = 0.0;
  for (const auto& x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::data:
      return 1;
    case ErrorKind::usage:
      return 2;
    case ErrorKind::service:
      return 3;
  }
  return 1;
}

std::vector<AblationRow> run_ablation(const std::vector<Document>& corpus,
                                      const EmbeddingStore& store, const RunConfig& config,
                                      std::ostream* log) {
  if (corpus.size() != store.n_docs()) {
    throw data_error("corpus has " + std::to_string(corpus.size()) +
                     " documents but the embedding store has " + std::to_string(store.n_docs()));
  }
  std::vector<AblationRow> rows(config.ablate_thresholds.size());
  for (std::size_t t = 0; t < rows.size(); ++t) rows[t].threshold = config.ablate_thresholds[t];

  const auto words = prepare_words(corpus, store, config.model,
                                   load_optional_stopwords(config.stopwords));
  for (std::size_t rep = 0; rep < config.ablate_repeats; ++rep) {
    auto params = config.model;
    params.seed = config.model.seed + rep;
    const auto clusters = cluster_documents(store, params);
    for (auto& row : rows) {
      params.ss_threshold = row.threshold;
      ++row.runs;
      if (filter_by_threshold(words.aggregation.profiles, row.threshold).empty()) {
        row.insufficient_candidates = true;
        if (log) *log << "[ablate] threshold " << row.threshold << " seed " << params.seed
                      << ": empty candidate set\n";
        continue;
      }
      const auto model = assemble_model(corpus, store, words, clusters, params);
      TopicWords topic_words;
      bool short_topic = false;
      bool npmi_defined = true;
      for (const auto& topic : model.topics) {
        std::vector<std::string> ws;
        for (const auto& w : topic.top_words) ws.push_back(w.word);
        short_topic = short_topic || ws.size() < params.top_k;
        npmi_defined = npmi_defined && ws.size() >= 2;
        topic_words.push_back(std::move(ws));
      }
      if (short_topic) row.insufficient_candidates = true;
      if (npmi_defined) row.tc_runs.push_back(npmi(topic_words, corpus, config.npmi).mean);
      if (!short_topic) row.td_runs.push_back(topic_diversity(topic_words));
      if (log) {
        *log << "[ablate] threshold " << row.threshold << " seed " << params.seed << ": "
             << model.topics.size() << " topics, " << model.diagnostics.candidates
             << " candidates\n";
      }
    }
  }
  for (auto& row : rows) {
    if (!row.tc_runs.empty()) row.tc_mean = mean_of(row.tc_runs);
    if (!row.td_runs.empty()) row.td_mean = mean_of(row.td_runs);
  }
  return rows;
}

std::string format_ablation_text(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "threshold  TC (NPMI)  TD       runs  note\n";
  for (const auto& r : rows) {
    auto cell = [](const std::optional<double>& v) {
      std::ostringstream c;
      if (v) c << std::fixed << std::setprecision(4) << *v;
      else c << "n/a";
      return c.str();
    };
    out << std::left << std::setw(11) << [&] {
      std::ostringstream c;
      c << std::fixed << std::setprecision(2) << r.threshold;
      return c.str();
    }() << std::setw(11) << cell(r.tc_mean) << std::setw(9) << cell(r.td_mean) << std::setw(6)
        << r.runs << (r.insufficient_candidates ? "insufficient candidates" : "") << '\n';
  }
  return out.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"CAST: topic modelling from contextualized word embeddings", "cast"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  app.add_flag("--quiet", g.quiet, "Suppress timings and warnings");
  app.add_option("--config", g.config_path, "JSON config file; flags override its values");

  Overrides o;
  auto* model = app.add_subcommand("model", "Fit a topic model");
  add_input_options(model, o);
  add_model_options(model, o);
  add_out_option(model, o);

  auto* eval = app.add_subcommand("eval", "Score a fitted model (NPMI, topic diversity, LLM judge)");
  o.bind(eval->add_option("--model", o.flags.model_path, "Model JSON"),
         [&o](RunConfig& c) { c.model_path = o.flags.model_path; });
  o.bind(eval->add_option("--reference", o.flags.reference, "Reference corpus (default: the model's corpus)"),
         [&o](RunConfig& c) { c.reference = o.flags.reference; });
  o.bind(eval->add_option("--corpus-format", o.flags.corpus_format, "Reference corpus format")
             ->check(CLI::IsMember({"auto", "plain", "jsonl"})),
         [&o](RunConfig& c) { c.corpus_format = o.flags.corpus_format; });
  o.bind(eval->add_option("--llm-endpoint", o.flags.llm_endpoint, "Chat-completions URL (key from CAST_LLM_API_KEY)"),
         [&o](RunConfig& c) { c.llm_endpoint = o.flags.llm_endpoint; });
  o.bind(eval->add_option("--llm-model", o.flags.llm_model, "Model name sent to the LLM endpoint"),
         [&o](RunConfig& c) { c.llm_model = o.flags.llm_model; });
  add_npmi_options(eval, o);
  add_out_option(eval, o);

  auto* ss = app.add_subcommand("ss-report", "Self-similarity table");
  add_input_options(ss, o);
  o.bind(ss->add_option("--thresholds", o.flags.report_thresholds, "Thresholds to report below")
             ->delimiter(','),
         [&o](RunConfig& c) { c.report_thresholds = o.flags.report_thresholds; });
  o.bind(ss->add_option("--top-n", o.flags.report_top_n, "Rows per column"),
         [&o](RunConfig& c) { c.report_top_n = o.flags.report_top_n; });
  add_out_option(ss, o);

  auto* ablate = app.add_subcommand("ablate", "Self-similarity threshold sweep");
  add_input_options(ablate, o);
  add_model_options(ablate, o);
  add_npmi_options(ablate, o);
  o.bind(ablate->add_option("--thresholds", o.flags.ablate_thresholds, "Thresholds to sweep")
             ->delimiter(','),
         [&o](RunConfig& c) { c.ablate_thresholds = o.flags.ablate_thresholds; });
  o.bind(ablate->add_option("--repeats", o.flags.ablate_repeats, "Runs per threshold (seeds seed+i)"),
         [&o](RunConfig& c) { c.ablate_repeats = o.flags.ablate_repeats; });
  add_out_option(ablate, o);

  auto* validate = app.add_subcommand("validate", "Check a CASTEMB file");
  o.bind(validate->add_option("embeddings,--embeddings", o.flags.embeddings, "CASTEMB file"),
         [&o](RunConfig& c) { c.embeddings = o.flags.embeddings; });
  add_out_option(validate, o);

  for (auto* sub : {model, eval, ss, ablate, validate}) sub->fallthrough();

  std::vector<const char*> argv{"cast"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    auto config = resolve(g, o, RunConfig{}, seed_opt, seed);
    if (model->parsed()) return cmd_model(g, config, out, err);
    if (ss->parsed()) return cmd_ss_report(g, config, out, err);
    if (ablate->parsed()) return cmd_ablate(g, config, out, err);
    if (validate->parsed()) return cmd_validate(g, config, out);
    if (config.model_path.empty()) throw usage_error("no model given (--model)");
    if (!std::filesystem::exists(config.model_path)) {
      throw usage_error("model file not found: '" + config.model_path + "'");
    }
    const auto loaded = read_model(config.model_path);
    // The model's own config is the base; the config file and flags refine it.
    auto base = loaded.config;
    base.out.clear();
    const auto eval_config = resolve(g, o, base, seed_opt, seed);
    return cmd_eval(g, eval_config, loaded, out, err);
  } catch (const Error& e) {
    err << "cast: error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "cast: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cast
