#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "qbm/rng.hpp"

namespace qbm {

// Lowercased tokens: whitespace-separated words, standalone punctuation
// marks, and one token per ideographic character so whitespace-free text
// still tokenizes.
std::vector<std::string> tokenize(const std::string& text);

// Token ids 0 and 1 are reserved for padding and unknown tokens; the rest are
// assigned by (frequency desc, token asc) over the corpus.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  static Vocabulary build(const std::vector<std::string>& corpus,
                          int min_count = 1);
  // Reconstruction from a checkpoint: tokens in id order including the two
  // reserved entries.
  static Vocabulary from_tokens(std::vector<std::string> tokens, int min_count);

  int id(const std::string& token) const;
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;
  int size() const { return int(tokens_.size()); }
  int min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int min_count_ = 1;
};

// Fixed-length token-id sequence with validity mask.
struct EncodedText {
  std::vector<int> ids;
  std::vector<uint8_t> mask;
  int true_length = 0;

  bool empty() const { return true_length == 0; }
  int capacity() const { return int(ids.size()); }
};

EncodedText encode(const std::string& text, const Vocabulary& vocab,
                   int max_len = 20);

// V x D embedding matrix, row-major. Row 0 (PAD) is all-zero and is never
// updated during training.
struct EmbeddingTable {
  int dim = 0;
  bool trainable = true;
  std::vector<float> weights;  // vocab.size() x dim

  const float* row(int id) const { return weights.data() + size_t(id) * dim; }
};

// Random-initialized table for runs without pretrained vectors.
EmbeddingTable random_embeddings(const Vocabulary& vocab, int dim, Rng rng);

// Plain-text embedding file: one `token v1 .. vD` line per entry, an optional
// `count dim` header. Vocabulary tokens missing from the file keep their
// seeded uniform initialization in [-0.25, 0.25].
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab,
                               int dim, Rng rng);

}  // namespace qbm
