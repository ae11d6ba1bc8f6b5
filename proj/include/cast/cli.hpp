#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cast/corpus.hpp"
#include "cast/error.hpp"
#include "cast/embedding_store.hpp"
#include "cast/model_io.hpp"

namespace cast {

/// Exit status for an error kind: data 1, usage 2, service 3.
int exit_code_for(ErrorKind kind);

/// Runs the command line `args` (without the program name). Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct AblationRow {
  double threshold = 0.0;
  std::size_t runs = 0;
  std::vector<double> tc_runs;  // NPMI mean of each run where it is defined
  std::vector<double> td_runs;  // topic diversity of each run where it is defined
  std::optional<double> tc_mean;
  std::optional<double> td_mean;
  bool insufficient_candidates = false;
};

/// Fits and evaluates every threshold with seeds seed+0 .. seed+repeats-1.
/// Clustering is shared across thresholds of one seed and word statistics
/// across the whole sweep. Rows whose candidate pool empties, or leaves a
/// topic short of top_k words, are flagged instead of aborting the sweep.
std::vector<AblationRow> run_ablation(const std::vector<Document>& corpus,
                                      const EmbeddingStore& store, const RunConfig& config,
                                      std::ostream* log = nullptr);

std::string format_ablation_text(const std::vector<AblationRow>& rows);

}  // namespace cast
