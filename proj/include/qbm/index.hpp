#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace qbm {

// Built-in English stopword list, optionally extended from a one-token-per-line
// file. Used for bag keyword selection only.
class Stopwords {
 public:
  static Stopwords builtin();
  static Stopwords from_file(const std::string& path);  // builtin + file tokens

  bool contains(const std::string& token) const { return words_.count(token) > 0; }
  const std::set<std::string>& items() const { return words_; }

 private:
  std::set<std::string> words_;
};

struct TermScore {
  std::string token;
  double weight = 0.0;  // tf * idf
};

// TF-IDF inverted index over a question corpus. Doc ids are input positions.
// Weights use raw term frequency and idf = ln((N+1)/(df+1)) + 1.
class InvertedIndex {
 public:
  static InvertedIndex build(const std::vector<std::string>& questions);

  int doc_count() const { return n_; }
  int df(const std::string& token) const;
  double idf(const std::string& token) const;
  double doc_norm(int doc) const { return norms_[size_t(doc)]; }

  // Cosine-ranked (doc id, score) pairs, descending score, ties by ascending
  // doc id; only documents with nonzero score are returned.
  std::vector<std::pair<int, double>> top_k_similar(const std::string& query,
                                                    int k = 20) const;

  // Top-m keywords of a bag by tf(within bag) * idf(corpus), stopwords
  // excluded, ordered by descending score with ties by ascending token.
  std::vector<TermScore> top_terms(const std::vector<std::string>& bag_questions,
                                   int m, const Stopwords& stopwords) const;

 private:
  struct Posting {
    int doc;
    int tf;
  };
  // Ordered map so every iteration (norm computation, scoring) runs in one
  // deterministic token order.
  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<double> norms_;
  int n_ = 0;
};

}  // namespace qbm
