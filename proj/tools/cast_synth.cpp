// Writes a planted-topic corpus (JSONL) and its synthetic CASTEMB embeddings.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cast/cli.hpp"
#include "cast/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Planted-topic corpus and synthetic embeddings", "cast_synth"};
  cast::PlantedOptions planted;
  cast::SyntheticOptions synth;
  std::string corpus_path = "corpus.jsonl";
  std::string embeddings_path = "corpus.castemb";
  std::string truth_path;
  app.add_option("--topics", planted.n_topics, "Planted topics");
  app.add_option("--docs-per-topic", planted.docs_per_topic, "Documents per topic");
  app.add_option("--words-per-topic", planted.words_per_topic, "Vocabulary size per topic");
  app.add_option("--doc-length", planted.doc_length, "Tokens per document");
  app.add_option("--corpus-seed", planted.seed, "Seed for document sampling");
  app.add_option("--dim", synth.dim, "Embedding dimension");
  app.add_option("--seed", synth.seed, "Seed for the synthetic embeddings");
  app.add_option("--corpus", corpus_path, "Output corpus (JSONL)");
  app.add_option("--embeddings", embeddings_path, "Output CASTEMB file");
  app.add_option("--truth", truth_path, "Optional output: generating topic per document");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto corpus = cast::make_planted_corpus(planted);
    std::ofstream out(corpus_path);
    for (const auto& d : corpus.docs) out << nlohmann::json{{"text", d.raw_text}}.dump() << '\n';
    if (!out) throw cast::usage_error("cannot write '" + corpus_path + "'");
    cast::write_castemb(cast::synthetic_provider(corpus.docs, synth, corpus.plan), embeddings_path);
    if (!truth_path.empty()) {
      std::ofstream truth(truth_path);
      for (int t : corpus.truth) truth << t << '\n';
    }
  } catch (const cast::Error& e) {
    std::cerr << "cast_synth: error: " << e.what() << '\n';
    return cast::exit_code_for(e.kind());
  }
  return 0;
}
