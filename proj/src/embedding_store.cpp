#include "cast/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cast/error.hpp"

namespace cast {
namespace {

double norm_of(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * x;
  return std::sqrt(sum);
}

bool all_finite(std::span<const float> v) {
  for (float x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void check_vector(std::span<const float> v, const std::string& what) {
  if (!all_finite(v)) throw data_error(what + ": non-finite value");
  const double n = norm_of(v);
  if (std::abs(n - 1.0) > kUnitNormTolerance) {
    std::ostringstream msg;
    msg << what << ": vector norm " << n << " is not 1 within " << kUnitNormTolerance;
    throw data_error(msg.str());
  }
}

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<char> take() { return std::move(out_); }

 private:
  std::vector<char> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const char> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  void need(std::size_t n, const std::string& context) const {
    if (bytes_.size() - pos_ < n) {
      throw data_error("truncated at byte " + std::to_string(bytes_.size()) + " while reading " +
                       context);
    }
  }
  std::uint32_t u32(const std::string& context) {
    need(4, context);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    }
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const std::string& context) {
    need(8, context);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    }
    pos_ += 8;
    return v;
  }
  void f32s(std::span<float> out, const std::string& context) {
    need(4 * out.size(), context);
    for (auto& x : out) {
      std::uint32_t v = 0;
      for (int k = 0; k < 4; ++k) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
      }
      x = std::bit_cast<float>(v);
      pos_ += 4;
    }
  }
  std::string str(std::size_t n, const std::string& context) {
    need(n, context);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

NormStats norm_stats(const MatrixF& m) {
  NormStats s;
  s.count = m.rows();
  if (s.count == 0) return s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -s.min;
  double total = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double n = norm_of(m.row(i));
    s.min = std::min(s.min, n);
    s.max = std::max(s.max, n);
    total += n;
  }
  s.mean = total / static_cast<double>(s.count);
  return s;
}

}  // namespace

void EmbeddingStore::add_occurrence(std::string word, std::uint64_t doc_id,
                                    std::span<const float> vector) {
  if (vector.size() != dim) {
    throw data_error("occurrence of '" + word + "' has dimension " +
                     std::to_string(vector.size()) + ", store has " + std::to_string(dim));
  }
  if (occurrence_vectors.rows() == 0) occurrence_vectors = MatrixF(0, dim);
  occurrence_word.push_back(std::move(word));
  occurrence_doc.push_back(doc_id);
  occurrence_vectors.push_row(vector);
}

EmbeddingStore make_store(std::uint32_t dim, std::size_t n_docs) {
  EmbeddingStore store;
  store.dim = dim;
  store.doc_embeddings = MatrixF(n_docs, dim);
  store.occurrence_vectors = MatrixF(0, dim);
  return store;
}

void validate_store(const EmbeddingStore& store) {
  if (store.dim == 0) throw data_error("dimension must be positive");
  if (store.doc_embeddings.cols() != store.dim && store.n_docs() > 0) {
    throw data_error("document embeddings have inconsistent dimension");
  }
  if (store.occurrence_word.size() != store.n_occurrences() ||
      store.occurrence_vectors.rows() != store.n_occurrences()) {
    throw data_error("occurrence columns have inconsistent lengths");
  }
  if (store.n_occurrences() > 0 && store.occurrence_vectors.cols() != store.dim) {
    throw data_error("occurrence vectors have inconsistent dimension");
  }
  for (std::size_t i = 0; i < store.n_docs(); ++i) {
    check_vector(store.doc_embeddings.row(i), "document " + std::to_string(i));
  }
  std::uint64_t previous = 0;
  for (std::size_t k = 0; k < store.n_occurrences(); ++k) {
    const auto doc = store.occurrence_doc[k];
    if (doc >= store.n_docs()) {
      throw data_error("occurrence record " + std::to_string(k) +
                       ": occurrence references unknown document " + std::to_string(doc));
    }
    if (doc < previous) {
      throw data_error("occurrence record " + std::to_string(k) +
                       ": occurrences are not ordered by document id");
    }
    previous = doc;
    check_vector(store.occurrence_vectors.row(k), "occurrence record " + std::to_string(k));
  }
}

std::vector<char> encode_castemb(const EmbeddingStore& store) {
  validate_store(store);
  ByteWriter w;
  w.bytes(kCastembMagic, sizeof(kCastembMagic));
  w.u32(kCastembVersion);
  w.u32(store.dim);
  w.u64(store.n_docs());
  w.u64(store.n_occurrences());
  for (float x : store.doc_embeddings.data()) w.f32(x);
  for (std::size_t k = 0; k < store.n_occurrences(); ++k) {
    w.u64(store.occurrence_doc[k]);
    const auto& word = store.occurrence_word[k];
    w.u32(static_cast<std::uint32_t>(word.size()));
    w.bytes(word.data(), word.size());
    for (float x : store.occurrence_vectors.row(k)) w.f32(x);
  }
  return w.take();
}

EmbeddingStore decode_castemb(std::span<const char> bytes) {
  ByteReader r(bytes);
  const auto magic = r.str(sizeof(kCastembMagic), "magic");
  if (std::memcmp(magic.data(), kCastembMagic, sizeof(kCastembMagic)) != 0) {
    throw data_error("bad magic: not a CASTEMB file");
  }
  const auto version = r.u32("header");
  if (version != kCastembVersion) {
    throw data_error("unsupported CASTEMB version " + std::to_string(version));
  }
  const auto dim = r.u32("header");
  const auto n_docs = r.u64("header");
  const auto n_occ = r.u64("header");
  if (dim == 0) throw data_error("dimension must be positive");

  // Reject impossible counts before allocating.
  const std::size_t remaining = bytes.size() - r.offset();
  if (n_docs > remaining / (4ull * dim)) {
    throw data_error("truncated at byte " + std::to_string(bytes.size()) +
                     " while reading document embeddings");
  }
  if (n_occ > remaining / (12ull + 4ull * dim)) {
    throw data_error("truncated at byte " + std::to_string(bytes.size()) +
                     ": header announces " + std::to_string(n_occ) +
                     " occurrences, more than the payload can hold");
  }

  EmbeddingStore store = make_store(dim, n_docs);
  for (std::uint64_t i = 0; i < n_docs; ++i) {
    const auto at = r.offset();
    r.f32s(store.doc_embeddings.row(i), "document " + std::to_string(i));
    if (!all_finite(store.doc_embeddings.row(i))) {
      throw data_error("document " + std::to_string(i) + " (byte " + std::to_string(at) +
                       "): non-finite value");
    }
  }
  store.occurrence_doc.reserve(n_occ);
  store.occurrence_word.reserve(n_occ);
  store.occurrence_vectors.data().reserve(n_occ * dim);
  std::vector<float> vec(dim);
  for (std::uint64_t k = 0; k < n_occ; ++k) {
    const auto at = r.offset();
    const std::string ctx = "occurrence record " + std::to_string(k);
    const auto doc = r.u64(ctx);
    const auto len = r.u32(ctx);
    auto word = r.str(len, ctx);
    r.f32s(vec, ctx);
    if (!all_finite(vec)) {
      throw data_error(ctx + " (byte " + std::to_string(at) + "): non-finite value");
    }
    store.add_occurrence(std::move(word), doc, vec);
  }
  if (r.offset() != bytes.size()) {
    throw data_error("trailing data after byte " + std::to_string(r.offset()));
  }
  validate_store(store);
  return store;
}

EmbeddingStore parse_castemb_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto next_record = [&]() -> nlohmann::json {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        return nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw data_error("castemb-jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    throw data_error("castemb-jsonl: truncated after line " + std::to_string(line_no));
  };
  auto read_vector = [&](const nlohmann::json& rec, std::uint32_t dim) {
    if (!rec.contains("vector") || !rec["vector"].is_array() || rec["vector"].size() != dim) {
      throw data_error("castemb-jsonl line " + std::to_string(line_no) +
                       ": \"vector\" must be an array of length " + std::to_string(dim));
    }
    std::vector<float> v;
    v.reserve(dim);
    for (const auto& x : rec["vector"]) {
      if (!x.is_number()) {
        throw data_error("castemb-jsonl line " + std::to_string(line_no) + ": non-finite value");
      }
      v.push_back(static_cast<float>(x.get<double>()));
    }
    return v;
  };

  EmbeddingStore store;
  try {
    const auto header = next_record();
    if (header.value("format", "") != "castemb-jsonl") {
      throw data_error("castemb-jsonl: header must carry \"format\": \"castemb-jsonl\"");
    }
    if (header.value("version", 0u) != kCastembVersion) {
      throw data_error("castemb-jsonl: unsupported version");
    }
    const auto dim = header.at("dim").get<std::uint32_t>();
    const auto n_docs = header.at("n_docs").get<std::uint64_t>();
    const auto n_occ = header.at("n_occurrences").get<std::uint64_t>();
    store = make_store(dim, n_docs);
    for (std::uint64_t i = 0; i < n_docs; ++i) {
      const auto v = read_vector(next_record(), dim);
      std::copy(v.begin(), v.end(), store.doc_embeddings.row(i).begin());
    }
    for (std::uint64_t k = 0; k < n_occ; ++k) {
      const auto rec = next_record();
      store.add_occurrence(rec.at("word").get<std::string>(), rec.at("doc_id").get<std::uint64_t>(),
                           read_vector(rec, dim));
    }
  } catch (const nlohmann::json::exception& e) {
    throw data_error("castemb-jsonl line " + std::to_string(line_no) + ": " + e.what());
  }
  validate_store(store);
  return store;
}

std::string format_castemb_jsonl(const EmbeddingStore& store) {
  validate_store(store);
  std::string out;
  nlohmann::json header = {{"format", "castemb-jsonl"},
                           {"version", kCastembVersion},
                           {"dim", store.dim},
                           {"n_docs", store.n_docs()},
                           {"n_occurrences", store.n_occurrences()}};
  out += header.dump() + "\n";
  auto vec_json = [](std::span<const float> v) {
    nlohmann::json arr = nlohmann::json::array();
    for (float x : v) arr.push_back(static_cast<double>(x));
    return arr;
  };
  for (std::size_t i = 0; i < store.n_docs(); ++i) {
    out += nlohmann::json{{"doc", i}, {"vector", vec_json(store.doc_embeddings.row(i))}}.dump() +
           "\n";
  }
  for (std::size_t k = 0; k < store.n_occurrences(); ++k) {
    out += nlohmann::json{{"doc_id", store.occurrence_doc[k]},
                          {"word", store.occurrence_word[k]},
                          {"vector", vec_json(store.occurrence_vectors.row(k))}}
               .dump() +
           "\n";
  }
  return out;
}

EmbeddingStore read_castemb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw usage_error("cannot open embeddings file '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw usage_error("error while reading '" + path.string() + "'");
  if (!bytes.empty() && bytes.front() == '{') {
    return parse_castemb_jsonl(std::string_view(bytes.data(), bytes.size()));
  }
  return decode_castemb(bytes);
}

void write_castemb(const EmbeddingStore& store, const std::filesystem::path& path) {
  const auto bytes = encode_castemb(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw usage_error("cannot write embeddings file '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw usage_error("error while writing '" + path.string() + "'");
}

StoreSummary summarize_store(const EmbeddingStore& store) {
  StoreSummary s;
  s.dim = store.dim;
  s.n_docs = store.n_docs();
  s.n_occurrences = store.n_occurrences();
  s.n_distinct_words =
      std::set<std::string>(store.occurrence_word.begin(), store.occurrence_word.end()).size();
  s.doc_norms = norm_stats(store.doc_embeddings);
  s.occurrence_norms = norm_stats(store.occurrence_vectors);
  return s;
}

}  // namespace cast
