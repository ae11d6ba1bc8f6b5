#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cast/matrix.hpp"

namespace cast {

inline constexpr char kCastembMagic[8] = {'C', 'A', 'S', 'T', 'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kCastembVersion = 1;
inline constexpr double kUnitNormTolerance = 1e-4;

/// Read-only view of one contextualized occurrence of a word.
struct OccurrenceView {
  std::string_view word;
  std::uint64_t doc_id;
  std::span<const float> vector;
};

/// Document embeddings plus the doc-ordered stream of per-occurrence word
/// embeddings. Occurrences are stored column-wise so vectors stay contiguous.
struct EmbeddingStore {
  std::uint32_t dim = 0;
  MatrixF doc_embeddings;                    // n_docs x dim
  std::vector<std::uint64_t> occurrence_doc;  // n_occurrences
  std::vector<std::string> occurrence_word;   // n_occurrences
  MatrixF occurrence_vectors;                 // n_occurrences x dim

  std::size_t n_docs() const noexcept { return doc_embeddings.rows(); }
  std::size_t n_occurrences() const noexcept { return occurrence_doc.size(); }

  OccurrenceView occurrence(std::size_t i) const {
    return {occurrence_word[i], occurrence_doc[i], occurrence_vectors.row(i)};
  }

  /// Appends an occurrence; `vector.size()` must equal dim.
  void add_occurrence(std::string word, std::uint64_t doc_id, std::span<const float> vector);

  bool operator==(const EmbeddingStore&) const = default;
};

/// Creates an empty store with `n_docs` zero rows to be filled by the caller.
EmbeddingStore make_store(std::uint32_t dim, std::size_t n_docs);

/// Checks every invariant (finite values, unit norms within kUnitNormTolerance,
/// doc ids in range and non-decreasing, consistent dims). Throws a data error
/// naming the offending record.
void validate_store(const EmbeddingStore& store);

EmbeddingStore read_castemb(const std::filesystem::path& path);
void write_castemb(const EmbeddingStore& store, const std::filesystem::path& path);

/// Binary encoding without touching the filesystem.
std::vector<char> encode_castemb(const EmbeddingStore& store);
EmbeddingStore decode_castemb(std::span<const char> bytes);

/// JSON-lines debug variant: a header object followed by one line per document
/// vector and one line per occurrence.
EmbeddingStore parse_castemb_jsonl(std::string_view text);
std::string format_castemb_jsonl(const EmbeddingStore& store);

struct NormStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};

struct StoreSummary {
  std::uint32_t dim = 0;
  std::size_t n_docs = 0;
  std::size_t n_occurrences = 0;
  std::size_t n_distinct_words = 0;
  NormStats doc_norms;
  NormStats occurrence_norms;
};

StoreSummary summarize_store(const EmbeddingStore& store);

}  // namespace cast
