#include "cast/word_aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "cast/error.hpp"
#include "cast/kernels.hpp"

namespace cast {
namespace {

void require_unit(std::span<const float> v, std::size_t index) {
  double n2 = 0.0;
  for (float x : v) n2 += static_cast<double>(x) * x;
  if (!std::isfinite(n2) || std::abs(std::sqrt(n2) - 1.0) > kUnitNormTolerance) {
    throw data_error("occurrence vector " + std::to_string(index) + " is not unit length");
  }
}

bool ranks_before(const ScoredWord& a, const ScoredWord& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.word < b.word;
}

std::string cell(const ScoredWord& w) {
  std::ostringstream s;
  s << w.word << ':' << std::fixed << std::setprecision(3) << w.score;
  return s.str();
}

std::string threshold_label(double t) {
  std::ostringstream s;
  s << "Threshold=" << t;
  return s.str();
}

}  // namespace

std::vector<double> WordProfile::unit_embedding() const {
  double n2 = 0.0;
  for (double x : e_final) n2 += x * x;
  std::vector<double> out(e_final.size(), 0.0);
  if (n2 == 0.0) return out;
  const double inv = 1.0 / std::sqrt(n2);
  for (std::size_t d = 0; d < e_final.size(); ++d) out[d] = e_final[d] * inv;
  return out;
}

AggregationResult aggregate_word_embeddings(const EmbeddingStore& store, const Vocabulary& vocab,
                                            Exec exec) {
  if (store.n_occurrences() > 0 && store.occurrence_vectors.cols() != store.dim) {
    throw data_error("occurrence vectors have dimension " +
                     std::to_string(store.occurrence_vectors.cols()) + ", store declares " +
                     std::to_string(store.dim));
  }

  std::vector<const std::string*> words;
  std::unordered_map<std::string_view, std::size_t> index;
  words.reserve(vocab.size());
  for (const auto& [word, entry] : vocab.entries) {
    index.emplace(word, words.size());
    words.push_back(&word);
  }
  const std::size_t n_words = words.size();

  // Out-of-vocabulary occurrences land in a trailing bucket that is discarded.
  std::vector<std::size_t> word_of(store.n_occurrences());
  for (std::size_t k = 0; k < store.n_occurrences(); ++k) {
    const auto it = index.find(store.occurrence_word[k]);
    word_of[k] = it == index.end() ? n_words : it->second;
    if (it != index.end()) require_unit(store.occurrence_vectors.row(k), k);
  }

  const auto sums = exec == Exec::parallel
                        ? kernels::omp::word_sums(store.occurrence_vectors, word_of, n_words + 1)
                        : kernels::serial::word_sums(store.occurrence_vectors, word_of, n_words + 1);

  AggregationResult result;
  for (std::size_t w = 0; w < n_words; ++w) {
    const auto count = sums.counts[w];
    if (count == 0) {
      result.missing_words.push_back(*words[w]);
      continue;
    }
    WordProfile profile;
    profile.word = *words[w];
    profile.occurrence_count = count;
    const auto sum = sums.sums.row(w);
    profile.e_final.resize(store.dim);
    for (std::size_t d = 0; d < store.dim; ++d) {
      profile.e_final[d] = sum[d] / static_cast<double>(count);
    }
    if (count >= 2) {
      profile.self_similarity =
          self_similarity_from_sums(sums.unit_sums.row(w), sums.unit_sq_norms[w], count);
    }
    result.profiles.emplace(profile.word, std::move(profile));
  }
  return result;
}

double self_similarity_from_sums(std::span<const double> unit_sum, double sum_sq_norms,
                                 std::size_t count) {
  if (count < 2) throw data_error("self-similarity needs at least two occurrences");
  double s2 = 0.0;
  for (double x : unit_sum) s2 += x * x;
  const double p = static_cast<double>(count);
  const double ss = (s2 - sum_sq_norms) / (p * (p - 1.0));
  return std::clamp(ss, -1.0, 1.0);
}

double self_similarity(const MatrixF& occurrence_vectors) {
  const std::size_t p = occurrence_vectors.rows();
  if (p == 0) throw data_error("self-similarity of a word with no occurrences");
  if (p == 1) throw data_error("self-similarity needs at least two occurrences");
  for (std::size_t k = 0; k < p; ++k) require_unit(occurrence_vectors.row(k), k);
  std::vector<std::size_t> word_of(p, 0);
  const auto sums = kernels::serial::word_sums(occurrence_vectors, word_of, 1);
  return self_similarity_from_sums(sums.unit_sums.row(0), sums.unit_sq_norms[0], p);
}

std::set<std::string> filter_by_threshold(const ProfileMap& profiles, double threshold) {
  std::set<std::string> kept;
  for (const auto& [word, profile] : profiles) {
    if (profile.self_similarity && *profile.self_similarity >= threshold) kept.insert(word);
  }
  return kept;
}

SsReport ss_report(const ProfileMap& profiles, const std::vector<double>& thresholds,
                   std::size_t top_n) {
  SsReport report;
  report.top_n = top_n;
  std::vector<ScoredWord> scored;
  for (const auto& [word, profile] : profiles) {
    if (profile.self_similarity) {
      scored.push_back({word, *profile.self_similarity});
    } else {
      report.insufficient.push_back(word);
    }
  }
  std::sort(scored.begin(), scored.end(), ranks_before);

  report.top.assign(scored.begin(),
                    scored.begin() + static_cast<std::ptrdiff_t>(std::min(top_n, scored.size())));
  for (double t : thresholds) {
    SsReport::Section section{t, {}};
    for (const auto& w : scored) {
      if (section.below.size() == top_n) break;
      if (w.score < t) section.below.push_back(w);
    }
    report.sections.push_back(std::move(section));
  }
  return report;
}

std::string format_ss_report_text(const SsReport& report) {
  std::vector<std::vector<std::string>> columns;
  std::vector<std::string> headers;
  headers.push_back("Top " + std::to_string(report.top_n) + " SS Score");
  columns.emplace_back();
  for (const auto& w : report.top) columns.back().push_back(cell(w));
  for (const auto& section : report.sections) {
    headers.push_back(threshold_label(section.threshold));
    columns.emplace_back();
    for (const auto& w : section.below) columns.back().push_back(cell(w));
  }

  std::vector<std::size_t> widths(headers.size());
  std::size_t rows = 0;
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& s : columns[c]) widths[c] = std::max(widths[c], s.size());
    rows = std::max(rows, columns[c].size());
  }

  std::ostringstream out;
  auto emit_row = [&](auto&& value_at) {
    for (std::size_t c = 0; c < headers.size(); ++c) {
      const std::string v = value_at(c);
      out << v;
      if (c + 1 < headers.size()) out << std::string(widths[c] - v.size() + 2, ' ');
    }
    out << '\n';
  };
  emit_row([&](std::size_t c) { return headers[c]; });
  emit_row([&](std::size_t c) { return std::string(widths[c], '-'); });
  for (std::size_t r = 0; r < rows; ++r) {
    emit_row([&](std::size_t c) { return r < columns[c].size() ? columns[c][r] : std::string(); });
  }
  if (!report.insufficient.empty()) {
    out << "\ninsufficient occurrences (" << report.insufficient.size() << " words, no score)\n";
  }
  return out.str();
}

std::string format_ss_report_json(const SsReport& report) {
  auto words_json = [](const std::vector<ScoredWord>& words) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& w : words) arr.push_back({{"word", w.word}, {"self_similarity", w.score}});
    return arr;
  };
  nlohmann::json j;
  j["top_n"] = report.top_n;
  j["top"] = words_json(report.top);
  j["sections"] = nlohmann::json::array();
  for (const auto& s : report.sections) {
    j["sections"].push_back({{"threshold", s.threshold}, {"below", words_json(s.below)}});
  }
  j["insufficient_occurrences"] = report.insufficient;
  return j.dump(2) + "\n";
}

}  // namespace cast
