#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "cast/corpus.hpp"
#include "cast/matrix.hpp"
#include "cast/synthetic.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(CAST_FIXTURE_DIR) / name;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("cast_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline void write_jsonl_corpus(const std::filesystem::path& path,
                               const std::vector<cast::Document>& docs) {
  std::ofstream out(path);
  for (const auto& d : docs) out << nlohmann::json{{"text", d.raw_text}}.dump() << '\n';
}

inline std::vector<cast::Document> docs_from(const std::vector<std::string>& texts) {
  std::vector<cast::Document> docs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    docs.push_back({i, texts[i], cast::tokenize(texts[i])});
  }
  return docs;
}

/// Fraction of documents whose cluster's majority truth label matches their
/// own; noise documents count as misassigned.
inline double purity(const std::vector<int>& labels, const std::vector<int>& truth) {
  std::map<int, std::map<int, std::size_t>> table;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) ++table[labels[i]][truth[i]];
  }
  std::size_t correct = 0;
  for (const auto& [cluster, counts] : table) {
    std::size_t best = 0;
    for (const auto& [t, c] : counts) best = std::max(best, c);
    correct += best;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

inline cast::MatrixD gaussian_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  cast::MatrixD m(n, dim);
  for (auto& x : m.data()) x = g(rng);
  return m;
}

inline cast::MatrixD unit_rows(cast::MatrixD m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double n2 = 0.0;
    for (double x : m.row(i)) n2 += x * x;
    for (double& x : m.row(i)) x /= std::sqrt(n2);
  }
  return m;
}

inline cast::MatrixF to_float(const cast::MatrixD& m) {
  return {m.rows(), m.cols(), std::vector<float>(m.data().begin(), m.data().end())};
}

struct TwoBlobs {
  cast::MatrixD points;
  std::vector<int> labels;
};

inline TwoBlobs load_two_blobs() {
  std::ifstream in(fixture("two_blobs.csv"));
  std::string line;
  std::getline(in, line);
  TwoBlobs out;
  while (std::getline(in, line)) {
    std::vector<double> row(3);
    int label = 0;
    char comma;
    std::istringstream s(line);
    s >> row[0] >> comma >> row[1] >> comma >> row[2] >> comma >> label;
    out.points.push_row(std::span<const double>(row));
    out.labels.push_back(label);
  }
  return out;
}

/// Renumbers labels: clusters by descending size, ties by smallest member index.
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, std::pair<std::size_t, std::size_t>> stats;  // label -> (size, first index)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto [it, fresh] = stats.emplace(labels[i], std::make_pair(0, i));
    ++it->second.first;
  }
  std::vector<std::pair<int, std::pair<std::size_t, std::size_t>>> order(stats.begin(), stats.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::map<int, int> rename;
  for (std::size_t k = 0; k < order.size(); ++k) rename[order[k].first] = static_cast<int>(k);
  std::vector<int> out;
  for (int l : labels) out.push_back(l < 0 ? -1 : rename[l]);
  return out;
}

}  // namespace testing
