#include "qbm/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "qbm/error.hpp"
#include "qbm/text.hpp"

namespace qbm {

Stopwords Stopwords::builtin() {
  static const char* kWords[] = {
      "a",    "about", "all",  "an",  "and",  "are",  "as",   "at",    "be",
      "by",   "can",   "do",   "does", "for", "from", "had",  "has",   "have",
      "how",  "i",     "if",   "in",  "is",   "it",   "its",  "my",    "no",
      "not",  "of",    "on",   "or",  "that", "the",  "this", "to",    "was",
      "what", "when",  "where", "which", "who", "why", "will", "with",  "you",
      "your"};
  Stopwords sw;
  for (const char* w : kWords) sw.words_.insert(w);
  return sw;
}

Stopwords Stopwords::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("stopwords: cannot open " + path);
  Stopwords sw = builtin();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) sw.words_.insert(line);
  }
  return sw;
}

InvertedIndex InvertedIndex::build(const std::vector<std::string>& questions) {
  InvertedIndex idx;
  idx.n_ = int(questions.size());
  for (int doc = 0; doc < idx.n_; ++doc) {
    std::map<std::string, int> tf;
    for (auto& tok : tokenize(questions[size_t(doc)])) tf[tok] += 1;
    for (auto& [tok, count] : tf) {
      idx.postings_[tok].push_back({doc, count});
    }
  }
  idx.norms_.assign(size_t(idx.n_), 0.0);
  for (auto& [tok, plist] : idx.postings_) {
    const double w = idx.idf(tok);
    for (const auto& p : plist) {
      const double tw = double(p.tf) * w;
      idx.norms_[size_t(p.doc)] += tw * tw;
    }
  }
  for (double& nrm : idx.norms_) nrm = std::sqrt(nrm);
  return idx;
}

int InvertedIndex::df(const std::string& token) const {
  auto it = postings_.find(token);
  return it == postings_.end() ? 0 : int(it->second.size());
}

double InvertedIndex::idf(const std::string& token) const {
  return std::log(double(n_ + 1) / double(df(token) + 1)) + 1.0;
}

std::vector<std::pair<int, double>> InvertedIndex::top_k_similar(
    const std::string& query, int k) const {
  std::map<std::string, int> qtf;
  for (auto& tok : tokenize(query)) qtf[tok] += 1;
  double qnorm = 0.0;
  for (auto& [tok, tf] : qtf) {
    const double w = double(tf) * idf(tok);
    qnorm += w * w;
  }
  qnorm = std::sqrt(qnorm);
  std::vector<double> dots(size_t(n_), 0.0);
  for (auto& [tok, tf] : qtf) {
    auto it = postings_.find(tok);
    if (it == postings_.end()) continue;
    const double w = idf(tok);
    const double qw = double(tf) * w;
    for (const auto& p : it->second) {
      dots[size_t(p.doc)] += qw * double(p.tf) * w;
    }
  }
  std::vector<std::pair<int, double>> scored;
  for (int doc = 0; doc < n_; ++doc) {
    if (dots[size_t(doc)] <= 0.0 || qnorm == 0.0 || norms_[size_t(doc)] == 0.0) {
      continue;
    }
    scored.emplace_back(doc, dots[size_t(doc)] / (qnorm * norms_[size_t(doc)]));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (int(scored.size()) > k) scored.resize(size_t(k));
  return scored;
}

std::vector<TermScore> InvertedIndex::top_terms(
    const std::vector<std::string>& bag_questions, int m,
    const Stopwords& stopwords) const {
  std::map<std::string, int> tf;
  for (const auto& q : bag_questions) {
    for (auto& tok : tokenize(q)) {
      if (!stopwords.contains(tok)) tf[tok] += 1;
    }
  }
  std::vector<TermScore> scored;
  scored.reserve(tf.size());
  for (auto& [tok, count] : tf) {
    scored.push_back({tok, double(count) * idf(tok)});
  }
  std::sort(scored.begin(), scored.end(), [](const TermScore& a, const TermScore& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.token < b.token;
  });
  if (int(scored.size()) > m) scored.resize(size_t(m));
  return scored;
}

}  // namespace qbm
