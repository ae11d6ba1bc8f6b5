#include "cast/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "cast/error.hpp"

namespace cast {
namespace {

struct Decoded {
  char32_t cp;
  std::size_t length;  // bytes consumed; 0 on invalid sequence
};

Decoded decode_utf8(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0, 0};
  }
  if (pos + len > s.size()) return {0, 0};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[pos + k]);
    if ((b & 0xC0) != 0x80) return {0, 0};
    cp = (cp << 6) | (b & 0x3F);
  }
  // overlong forms, surrogates, out of range
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
      (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
    return {0, 0};
  }
  return {cp, len};
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Non-ASCII code points count as word characters unless they fall in a
// punctuation, symbol, space, or emoji block.
bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (in(cp, 0x80, 0xBF) || cp == 0xD7 || cp == 0xF7) return false;
  if (in(cp, 0x2000, 0x206F) || in(cp, 0x20A0, 0x20CF) || in(cp, 0x2100, 0x214F)) return false;
  if (in(cp, 0x2190, 0x2BFF) || in(cp, 0x2E00, 0x2E7F) || in(cp, 0x3000, 0x303F)) return false;
  if (in(cp, 0xE000, 0xF8FF) || in(cp, 0xFE00, 0xFE0F) || in(cp, 0xFE30, 0xFE4F)) return false;
  if (in(cp, 0xFF00, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) ||
      in(cp, 0xFF5B, 0xFF65) || cp == 0xFEFF) {
    return false;
  }
  if (in(cp, 0x1F000, 0x1FAFF)) return false;
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp < 0x80) return cp;
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (cp == 0x178) return 0xFF;
  if ((in(cp, 0x100, 0x137) || in(cp, 0x14A, 0x177)) && cp % 2 == 0) return cp + 1;
  if ((in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) && cp % 2 == 1) return cp + 1;
  if (in(cp, 0x391, 0x3A9) && cp != 0x3A2) return cp + 0x20;
  if (in(cp, 0x410, 0x42F)) return cp + 0x20;
  if (in(cp, 0x400, 0x40F)) return cp + 0x50;
  return cp;
}

bool valid_utf8(std::string_view s) {
  for (std::size_t pos = 0; pos < s.size();) {
    const auto d = decode_utf8(s, pos);
    if (d.length == 0) return false;
    pos += d.length;
  }
  return true;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw_text, const TokenizerOptions& options) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t code_points = 0;
  bool all_digits = true;

  auto flush = [&] {
    if (!current.empty() && code_points >= options.min_length && !all_digits) {
      tokens.push_back(current);
    }
    current.clear();
    code_points = 0;
    all_digits = true;
  };

  for (std::size_t pos = 0; pos < raw_text.size();) {
    const auto d = decode_utf8(raw_text, pos);
    if (d.length == 0) {  // invalid byte acts as a separator
      flush();
      ++pos;
      continue;
    }
    pos += d.length;
    if (!is_word_char(d.cp)) {
      flush();
      continue;
    }
    if (d.cp < '0' || d.cp > '9') all_digits = false;
    append_utf8(current, to_lower(d.cp));
    ++code_points;
  }
  flush();
  return tokens;
}

CorpusFormat guess_corpus_format(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::jsonl : CorpusFormat::plain_lines;
}

std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                  const TokenizerOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw usage_error("cannot open corpus file '" + path.string() + "'");

  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!valid_utf8(line)) {
      throw data_error(path.string() + ":" + std::to_string(line_no) + ": invalid UTF-8");
    }
    std::string text;
    if (format == CorpusFormat::jsonl) {
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw data_error(path.string() + ":" + std::to_string(line_no) +
                         ": malformed JSON record: " + e.what());
      }
      if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
        throw data_error(path.string() + ":" + std::to_string(line_no) +
                         ": record has no string field \"text\"");
      }
      text = record["text"].get<std::string>();
    } else {
      text = std::move(line);
    }
    Document doc;
    doc.id = docs.size();
    doc.tokens = tokenize(text, options);
    doc.raw_text = std::move(text);
    docs.push_back(std::move(doc));
  }
  if (in.bad()) throw usage_error("error while reading '" + path.string() + "'");
  return docs;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open stopword file '" + path.string() + "'");
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& token : tokenize(line, {.min_length = 1})) words.insert(std::move(token));
  }
  return words;
}

Vocabulary build_vocabulary(const std::vector<Document>& docs, std::size_t min_word_freq,
                            const std::set<std::string>& stopwords) {
  if (min_word_freq < 1) throw usage_error("min_word_freq must be >= 1");

  std::map<std::string, VocabEntry> counts;
  std::set<std::string_view> seen;
  for (const auto& doc : docs) {
    seen.clear();
    for (const auto& token : doc.tokens) {
      auto& entry = counts[token];
      ++entry.corpus_frequency;
      if (seen.insert(token).second) ++entry.document_frequency;
    }
  }

  Vocabulary vocab;
  vocab.stopwords = stopwords;
  for (auto& [word, entry] : counts) {
    if (entry.corpus_frequency >= min_word_freq && !stopwords.count(word)) {
      vocab.entries.emplace(word, entry);
    }
  }
  return vocab;
}

}  // namespace cast
