#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cast {

struct Document {
  std::size_t id = 0;
  std::string raw_text;
  std::vector<std::string> tokens;

  bool empty() const noexcept { return tokens.empty(); }
  bool operator==(const Document&) const = default;
};

enum class CorpusFormat { plain_lines, jsonl };

struct TokenizerOptions {
  std::size_t min_length = 2;  // in code points
};

struct VocabEntry {
  std::size_t corpus_frequency = 0;
  std::size_t document_frequency = 0;

  bool operator==(const VocabEntry&) const = default;
};

struct Vocabulary {
  std::map<std::string, VocabEntry> entries;
  std::set<std::string> stopwords;

  bool contains(const std::string& word) const { return entries.count(word) != 0; }
  std::size_t size() const noexcept { return entries.size(); }
};

/// Splits on non-alphanumeric boundaries (UTF-8 aware), lowercases, drops
/// digit-only tokens and tokens shorter than `options.min_length` code points.
std::vector<std::string> tokenize(std::string_view raw_text, const TokenizerOptions& options = {});

/// Reads one Document per record; ids follow input order. Tokens are filled in.
/// Throws cast::Error (usage) if the file cannot be opened, (data) on a malformed
/// record, with the 1-based line number in the message.
std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                  const TokenizerOptions& options = {});

/// Picks jsonl for *.jsonl / *.json paths, plain lines otherwise.
CorpusFormat guess_corpus_format(const std::filesystem::path& path);

std::set<std::string> load_stopwords(const std::filesystem::path& path);

/// Words with corpus frequency >= min_word_freq, minus `stopwords` (which may be empty).
Vocabulary build_vocabulary(const std::vector<Document>& docs, std::size_t min_word_freq,
                            const std::set<std::string>& stopwords = {});

}  // namespace cast
