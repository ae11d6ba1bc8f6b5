#include "cast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "cast/error.hpp"

namespace cast {

WindowCounts::WindowCounts(const std::vector<Document>& reference,
                           const std::vector<std::string>& words, std::size_t window_size) {
  for (const auto& w : words) index_.emplace(w, 0);
  std::size_t next = 0;
  for (auto& [w, id] : index_) id = next++;
  single_.assign(index_.size(), 0);

  std::vector<std::size_t> ids;
  std::vector<std::size_t> present;
  for (const auto& doc : reference) {
    const auto& tokens = doc.tokens;
    if (tokens.empty()) continue;
    ids.clear();
    for (const auto& t : tokens) {
      const auto it = index_.find(t);
      ids.push_back(it == index_.end() ? index_.size() : it->second);
    }
    const std::size_t len = tokens.size();
    const std::size_t width = (window_size == 0 || len <= window_size) ? len : window_size;
    const std::size_t windows = len - width + 1;
    for (std::size_t start = 0; start < windows; ++start) {
      present.clear();
      for (std::size_t p = start; p < start + width; ++p) {
        if (ids[p] < index_.size()) present.push_back(ids[p]);
      }
      std::sort(present.begin(), present.end());
      present.erase(std::unique(present.begin(), present.end()), present.end());
      for (std::size_t x = 0; x < present.size(); ++x) {
        ++single_[present[x]];
        for (std::size_t y = x + 1; y < present.size(); ++y) ++pair_[{present[x], present[y]}];
      }
      ++total_;
    }
  }
}

std::size_t WindowCounts::count(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? 0 : single_[it->second];
}

std::size_t WindowCounts::joint(const std::string& a, const std::string& b) const {
  const auto ia = index_.find(a);
  const auto ib = index_.find(b);
  if (ia == index_.end() || ib == index_.end()) return 0;
  if (ia->second == ib->second) return single_[ia->second];
  const auto key = std::minmax(ia->second, ib->second);
  const auto it = pair_.find({key.first, key.second});
  return it == pair_.end() ? 0 : it->second;
}

double pair_npmi(const WindowCounts& counts, const std::string& a, const std::string& b,
                 double epsilon) {
  // Canonical argument order: npmi(a, b) and npmi(b, a) are bitwise equal.
  const auto& first = a < b ? a : b;
  const auto& second = a < b ? b : a;
  const auto ca = counts.count(first);
  const auto cb = counts.count(second);
  const auto cab = counts.joint(first, second);
  const auto total = counts.total_windows();
  if (ca == 0 || cb == 0 || cab == 0) return -1.0;
  if (cab == total) return 1.0;
  const double n = static_cast<double>(total);
  const double pa = static_cast<double>(ca) / n;
  const double pb = static_cast<double>(cb) / n;
  const double log_joint = std::log(static_cast<double>(cab) / n + epsilon);
  const double value = (log_joint - std::log(pa) - std::log(pb)) / (-log_joint);
  return std::clamp(value, -1.0, 1.0);
}

NpmiResult npmi(const TopicWords& topics, const std::vector<Document>& reference,
                const NpmiParams& params) {
  if (reference.empty()) throw data_error("NPMI needs a non-empty reference corpus");
  if (topics.empty()) throw data_error("NPMI needs at least one topic");
  std::vector<std::string> words;
  for (const auto& t : topics) {
    if (t.size() < 2) throw data_error("NPMI needs at least two words per topic");
    words.insert(words.end(), t.begin(), t.end());
  }
  const WindowCounts counts(reference, words, params.window_size);
  if (counts.total_windows() == 0) throw data_error("reference corpus has no tokens");

  NpmiResult result;
  for (const auto& t : topics) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t j = i + 1; j < t.size(); ++j) {
        sum += pair_npmi(counts, t[i], t[j], params.epsilon);
        ++pairs;
      }
    }
    result.per_topic.push_back(sum / static_cast<double>(pairs));
  }
  double total = 0.0;
  for (double v : result.per_topic) total += v;
  result.mean = total / static_cast<double>(result.per_topic.size());
  return result;
}

double topic_diversity(const TopicWords& topics) {
  if (topics.empty()) throw data_error("topic diversity needs at least one topic");
  const std::size_t top_k = topics.front().size();
  if (top_k == 0) throw data_error("topic diversity needs non-empty topics");
  std::set<std::string> unique;
  for (const auto& t : topics) {
    if (t.size() != top_k) {
      throw data_error("ragged topic lists: topic diversity needs exactly " +
                       std::to_string(top_k) + " words per topic");
    }
    unique.insert(t.begin(), t.end());
  }
  return static_cast<double>(unique.size()) / static_cast<double>(topics.size() * top_k);
}

EvalReport evaluate(const TopicWords& topics, const std::vector<Document>& reference,
                    const NpmiParams& params) {
  EvalReport report;
  report.params = params;
  report.top_k = topics.empty() ? 0 : topics.front().size();
  const auto n = npmi(topics, reference, params);
  report.npmi_per_topic = n.per_topic;
  report.npmi_mean = n.mean;
  try {
    report.topic_diversity = topic_diversity(topics);
  } catch (const Error& e) {
    report.topic_diversity_error = e.what();
  }
  return report;
}

std::string format_eval_text(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "topic   npmi\n";
  for (std::size_t t = 0; t < report.npmi_per_topic.size(); ++t) {
    out << std::left << std::setw(8) << t << report.npmi_per_topic[t] << '\n';
  }
  out << "\nTC (NPMI mean)   " << report.npmi_mean << '\n';
  if (report.topic_diversity) {
    out << "TD               " << *report.topic_diversity << '\n';
  } else {
    out << "TD               n/a (" << report.topic_diversity_error.value_or("") << ")\n";
  }
  if (report.llm_tc) out << "LLM-TC           " << *report.llm_tc << '\n';
  if (report.llm_td) out << "LLM-TD           " << *report.llm_td << '\n';
  out << "\n(top_k " << report.top_k << ", window "
      << (report.params.window_size == 0 ? std::string("document")
                                         : std::to_string(report.params.window_size))
      << ", epsilon " << std::scientific << std::setprecision(1) << report.params.epsilon << ")\n";
  return out.str();
}

}  // namespace cast
