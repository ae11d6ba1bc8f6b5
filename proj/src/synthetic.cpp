#include "cast/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "cast/error.hpp"

namespace cast {
namespace synthetic_detail {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t state = x;
  return splitmix64(state);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

std::vector<double> hash_unit_vector(std::uint64_t key, std::uint32_t dim) {
  constexpr double kTwoPow53 = 9007199254740992.0;
  std::uint64_t state = key;
  std::vector<double> v(dim);
  for (std::uint32_t i = 0; i < dim; i += 2) {
    const double u1 = static_cast<double>((splitmix64(state) >> 11) + 1) / kTwoPow53;  // (0, 1]
    const double u2 = static_cast<double>(splitmix64(state) >> 11) / kTwoPow53;        // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    v[i] = r * std::cos(theta);
    if (i + 1 < dim) v[i + 1] = r * std::sin(theta);
  }
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace synthetic_detail

namespace {

using namespace synthetic_detail;

constexpr std::uint64_t kTopicSalt = 0x7A3E1C5B9D2F4A61ull;
constexpr std::uint64_t kOccurrenceSalt = 0x632BE59BD9B4E019ull;
constexpr std::uint64_t kEmptyDocSalt = 0xD0C5E3A7B1F29C45ull;

void normalize_into(std::vector<double>& v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
}

std::vector<float> to_float(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

struct WordModel {
  std::vector<double> base;
  double noise;
};

}  // namespace

EmbeddingStore synthetic_provider(const std::vector<Document>& docs,
                                  const SyntheticOptions& options,
                                  const std::optional<TopicPlan>& plan,
                                  std::vector<std::size_t>* empty_docs) {
  if (options.dim < 8) throw usage_error("synthetic provider requires dim >= 8");
  const auto dim = options.dim;
  const auto seed = options.seed;

  std::unordered_map<std::string, WordModel> words;
  std::map<int, std::vector<double>> anchors;
  auto model_for = [&](const std::string& word) -> const WordModel& {
    auto it = words.find(word);
    if (it != words.end()) return it->second;
    WordModel m;
    m.base = hash_unit_vector(mix64(fnv1a64(word) ^ seed), dim);
    m.noise = options.noise;
    if (plan) {
      const auto p = plan->find(word);
      if (p == plan->end()) {
        m.noise = options.unplanned_noise;
      } else {
        auto a = anchors.find(p->second);
        if (a == anchors.end()) {
          const auto key = mix64(seed ^ (kTopicSalt + static_cast<std::uint64_t>(p->second)));
          a = anchors.emplace(p->second, hash_unit_vector(key, dim)).first;
        }
        for (std::uint32_t d = 0; d < dim; ++d) {
          m.base[d] = a->second[d] + options.topic_spread * m.base[d];
        }
        normalize_into(m.base);
      }
    }
    return words.emplace(word, std::move(m)).first->second;
  };

  EmbeddingStore store = make_store(dim, docs.size());
  std::uint64_t occurrence_index = 0;
  std::vector<double> occ(dim);
  std::vector<double> doc_sum(dim);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& doc = docs[i];
    if (doc.tokens.empty()) {
      const auto v = hash_unit_vector(mix64(seed ^ (kEmptyDocSalt + i)), dim);
      const auto f = to_float(v);
      std::copy(f.begin(), f.end(), store.doc_embeddings.row(i).begin());
      if (empty_docs) empty_docs->push_back(i);
      continue;
    }
    std::fill(doc_sum.begin(), doc_sum.end(), 0.0);
    for (const auto& token : doc.tokens) {
      const auto& m = model_for(token);
      const auto key = mix64(seed ^ (kOccurrenceSalt * (occurrence_index + 1)));
      ++occurrence_index;
      if (m.noise > 0.0) {
        const auto g = hash_unit_vector(key, dim);
        for (std::uint32_t d = 0; d < dim; ++d) occ[d] = m.base[d] + m.noise * g[d];
        normalize_into(occ);
      } else {
        occ = m.base;
      }
      const auto f = to_float(occ);
      store.add_occurrence(token, i, f);
      for (std::uint32_t d = 0; d < dim; ++d) doc_sum[d] += f[d];
    }
    normalize_into(doc_sum);
    const auto f = to_float(doc_sum);
    std::copy(f.begin(), f.end(), store.doc_embeddings.row(i).begin());
  }
  return store;
}

PlantedCorpus make_planted_corpus(const PlantedOptions& options) {
  static const char* const kFunctionWords[] = {
      "the", "and", "of", "to", "in", "is", "that", "it", "for", "was", "on", "are",
      "with", "as", "be", "this", "have", "from", "or", "by", "not", "but", "at", "an",
      "they", "which", "one", "you", "were", "all"};
  if (options.n_topics == 0 || options.words_per_topic == 0 || options.doc_length == 0) {
    throw usage_error("planted corpus needs topics, words and tokens");
  }
  if (options.n_topics > 26) throw usage_error("planted corpus supports at most 26 topics");

  PlantedCorpus out;
  for (std::size_t t = 0; t < options.n_topics; ++t) {
    std::vector<std::string> vocab;
    for (std::size_t w = 0; w < options.words_per_topic; ++w) {
      std::string word = "topic";
      word += static_cast<char>('a' + t);
      word += "w" + std::to_string(w);
      out.plan.emplace(word, static_cast<int>(t));
      vocab.push_back(std::move(word));
    }
    out.topic_vocab.push_back(std::move(vocab));
  }

  std::mt19937_64 rng(options.seed);
  std::bernoulli_distribution topical(options.topic_word_share);
  std::uniform_int_distribution<std::size_t> pick_topic_word(0, options.words_per_topic - 1);
  std::uniform_int_distribution<std::size_t> pick_function_word(0, std::size(kFunctionWords) - 1);
  const std::size_t n = options.n_topics * options.docs_per_topic;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = i % options.n_topics;
    Document doc;
    doc.id = i;
    for (std::size_t k = 0; k < options.doc_length; ++k) {
      doc.tokens.push_back(topical(rng) ? out.topic_vocab[t][pick_topic_word(rng)]
                                        : std::string(kFunctionWords[pick_function_word(rng)]));
      doc.raw_text += (k ? " " : "") + doc.tokens.back();
    }
    out.docs.push_back(std::move(doc));
    out.truth.push_back(static_cast<int>(t));
  }
  return out;
}

}  // namespace cast
