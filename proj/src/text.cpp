#include "qbm/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "qbm/error.hpp"

namespace qbm {

namespace {

// Decodes one UTF-8 code point starting at `i`; malformed bytes are consumed
// one at a time and returned verbatim so tokenization never fails.
uint32_t next_codepoint(const std::string& s, size_t& i) {
  const unsigned char c = (unsigned char)s[i];
  if (c < 0x80) {
    ++i;
    return c;
  }
  int extra = 0;
  uint32_t cp = 0;
  if ((c & 0xE0) == 0xC0) {
    cp = c & 0x1F;
    extra = 1;
  } else if ((c & 0xF0) == 0xE0) {
    cp = c & 0x0F;
    extra = 2;
  } else if ((c & 0xF8) == 0xF0) {
    cp = c & 0x07;
    extra = 3;
  } else {
    ++i;
    return c;
  }
  if (i + size_t(extra) >= s.size()) {
    ++i;
    return c;
  }
  size_t j = i + 1;
  for (int k = 0; k < extra; ++k, ++j) {
    const unsigned char cc = (unsigned char)s[j];
    if ((cc & 0xC0) != 0x80) {
      ++i;
      return c;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i = j;
  return cp;
}

void append_codepoint(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(char(cp));
  } else if (cp < 0x800) {
    out.push_back(char(0xC0 | (cp >> 6)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(char(0xE0 | (cp >> 12)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(char(0xF0 | (cp >> 18)));
    out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  }
}

bool is_ideograph(uint32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0xF900 && cp <= 0xFAFF);
}

bool is_wide_punct(uint32_t cp) {
  return (cp >= 0x3001 && cp <= 0x303F) || (cp >= 0xFF01 && cp <= 0xFF65);
}

bool is_space_cp(uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
         cp == '\v' || cp == 0x3000;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&]() {
    if (!word.empty()) {
      tokens.push_back(word);
      word.clear();
    }
  };
  size_t i = 0;
  while (i < text.size()) {
    const uint32_t cp = next_codepoint(text, i);
    if (is_space_cp(cp)) {
      flush();
    } else if (cp < 0x80 && std::ispunct(int(cp))) {
      flush();
      tokens.emplace_back(1, char(cp));
    } else if (is_ideograph(cp) || is_wide_punct(cp)) {
      flush();
      std::string t;
      append_codepoint(t, cp);
      tokens.push_back(std::move(t));
    } else {
      const uint32_t lower = (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
      append_codepoint(word, lower);
    }
  }
  flush();
  return tokens;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus,
                             int min_count) {
  std::unordered_map<std::string, long> counts;
  for (const auto& text : corpus) {
    for (auto& tok : tokenize(text)) counts[tok] += 1;
  }
  std::vector<std::pair<std::string, long>> kept;
  kept.reserve(counts.size());
  for (auto& [tok, c] : counts) {
    if (c >= min_count) kept.emplace_back(tok, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size() + 2);
  tokens.emplace_back("<pad>");
  tokens.emplace_back("<unk>");
  for (auto& [tok, c] : kept) tokens.push_back(tok);
  return from_tokens(std::move(tokens), min_count);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens,
                                   int min_count) {
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.min_count_ = min_count;
  v.index_.reserve(v.tokens_.size());
  for (size_t i = 0; i < v.tokens_.size(); ++i) {
    v.index_.emplace(v.tokens_[i], int(i));
  }
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw Error("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[size_t(id)];
}

EncodedText encode(const std::string& text, const Vocabulary& vocab,
                   int max_len) {
  if (max_len <= 0) throw ConfigError("encode: max_len must be positive");
  EncodedText enc;
  enc.ids.assign(size_t(max_len), Vocabulary::kPad);
  enc.mask.assign(size_t(max_len), 0);
  const auto tokens = tokenize(text);
  enc.true_length = std::min<int>(max_len, int(tokens.size()));
  for (int i = 0; i < enc.true_length; ++i) {
    enc.ids[size_t(i)] = vocab.id(tokens[size_t(i)]);
    enc.mask[size_t(i)] = 1;
  }
  return enc;
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, int dim, Rng rng) {
  if (dim <= 0) throw ConfigError("embeddings: dimension must be positive");
  EmbeddingTable table;
  table.dim = dim;
  table.weights.assign(size_t(vocab.size()) * dim, 0.0f);
  for (int id = 1; id < vocab.size(); ++id) {  // PAD row stays zero
    float* row = table.weights.data() + size_t(id) * dim;
    for (int d = 0; d < dim; ++d) row[d] = float(rng.uniform(-0.25, 0.25));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::string& path,
                               const Vocabulary& vocab, int dim, Rng rng) {
  std::ifstream in(path);
  if (!in) throw ParseError("embeddings: cannot open " + path);
  EmbeddingTable table = random_embeddings(vocab, dim, rng);
  std::string line;
  long line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string f;
    while (ls >> f) fields.push_back(f);
    if (fields.empty()) continue;
    if (first_content && fields.size() == 2) {
      // `count dim` header
      char* end1 = nullptr;
      char* end2 = nullptr;
      (void)strtol(fields[0].c_str(), &end1, 10);
      const long file_dim = strtol(fields[1].c_str(), &end2, 10);
      if (*end1 == '\0' && *end2 == '\0') {
        if (file_dim != dim) {
          throw ConfigError("embeddings: file declares dimension " +
                            std::to_string(file_dim) + ", configured " +
                            std::to_string(dim));
        }
        first_content = false;
        continue;
      }
    }
    const int got = int(fields.size()) - 1;
    if (got != dim) {
      if (first_content && got >= 1) {
        throw ConfigError("embeddings: file has dimension " +
                          std::to_string(got) + ", configured " +
                          std::to_string(dim));
      }
      throw ParseError("embeddings: line " + std::to_string(line_no) +
                       ": expected " + std::to_string(dim) + " values, got " +
                       std::to_string(got));
    }
    first_content = false;
    std::vector<float> vec(size_t(dim), 0.0f);
    for (int d = 0; d < dim; ++d) {
      char* end = nullptr;
      vec[size_t(d)] = std::strtof(fields[size_t(d) + 1].c_str(), &end);
      if (end == fields[size_t(d) + 1].c_str() || *end != '\0') {
        throw ParseError("embeddings: line " + std::to_string(line_no) +
                         ": bad number '" + fields[size_t(d) + 1] + "'");
      }
    }
    if (!vocab.contains(fields[0])) continue;
    const int id = vocab.id(fields[0]);
    if (id == Vocabulary::kPad) continue;
    std::copy(vec.begin(), vec.end(), table.weights.begin() + size_t(id) * dim);
  }
  return table;
}

}  // namespace qbm
