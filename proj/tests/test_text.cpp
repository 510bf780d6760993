#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "qbm/error.hpp"
#include "qbm/text.hpp"

using namespace qbm;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = std::string("/tmp/qbm_text_") + name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("tokenize: lowercase, whitespace, punctuation splitting") {
  CHECK(tokenize("What is REFUND?") ==
        std::vector<std::string>{"what", "is", "refund", "?"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("don't ship-today") ==
        std::vector<std::string>{"don", "'", "t", "ship", "-", "today"});
  CHECK(tokenize("  a\t b \n") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("tokenize: ideographic characters become standalone tokens") {
  const auto toks = tokenize("退款abc了吗");
  CHECK(toks == std::vector<std::string>{"退", "款", "abc", "了", "吗"});
  CHECK(tokenize("你好，世界") ==
        std::vector<std::string>{"你", "好", "，", "世", "界"});
}

TEST_CASE("vocabulary: frequency ordering with alphabetic tie-break") {
  Vocabulary v = Vocabulary::build({"a a b"});
  CHECK(v.id("a") == 2);
  CHECK(v.id("b") == 3);
  CHECK(v.id("<pad>") == 0);
  CHECK(v.id("missing") == Vocabulary::kUnk);
  CHECK(v.token(0) == "<pad>");
  CHECK(v.token(1) == "<unk>");

  Vocabulary ties = Vocabulary::build({"zebra apple"});
  CHECK(ties.id("apple") == 2);  // equal frequency, alphabetic order
  CHECK(ties.id("zebra") == 3);
}

TEST_CASE("vocabulary: min_count filters rare tokens to UNK") {
  Vocabulary v = Vocabulary::build({"a a b"}, 2);
  CHECK(v.id("a") == 2);
  CHECK(v.id("b") == Vocabulary::kUnk);
  CHECK(v.size() == 3);
}

TEST_CASE("vocabulary: deterministic under rebuilds") {
  const std::vector<std::string> corpus = {"where is my package", "package lost",
                                           "refund please", "package refund"};
  Vocabulary a = Vocabulary::build(corpus);
  Vocabulary b = Vocabulary::build(corpus);
  CHECK(a.tokens() == b.tokens());
}

TEST_CASE("encode: masks, truncation, idempotent re-encode") {
  Vocabulary v = Vocabulary::build({"a b c d e"});
  EncodedText three = encode("a b c", v, 6);
  CHECK(three.true_length == 3);
  CHECK(three.mask == std::vector<uint8_t>{1, 1, 1, 0, 0, 0});
  CHECK(three.ids[3] == Vocabulary::kPad);

  std::string longtext;
  for (int i = 0; i < 25; ++i) longtext += "a ";
  EncodedText truncated = encode(longtext, v, 20);
  CHECK(truncated.true_length == 20);
  CHECK(truncated.mask == std::vector<uint8_t>(20, 1));

  EncodedText empty = encode("", v, 4);
  CHECK(empty.empty());
  CHECK(empty.mask == std::vector<uint8_t>(4, 0));
  for (int id : empty.ids) CHECK(id == Vocabulary::kPad);

  // re-encoding the same token sequence never changes ids or mask
  EncodedText again = encode("a b c", v, 6);
  CHECK(again.ids == three.ids);
  CHECK(again.mask == three.mask);
}

TEST_CASE("embeddings: file vectors land exactly, absent rows are seeded") {
  Vocabulary v = Vocabulary::build({"alpha beta gamma"});
  const std::string path = write_temp(
      "vecs.txt", "alpha 0.5 -1.25 3\nnot-in-vocab 1 2 3\n");
  EmbeddingTable t1 = load_embeddings(path, v, 3, Rng(9));
  const float* alpha = t1.row(v.id("alpha"));
  CHECK(alpha[0] == 0.5f);
  CHECK(alpha[1] == -1.25f);
  CHECK(alpha[2] == 3.0f);

  const float* beta = t1.row(v.id("beta"));
  for (int d = 0; d < 3; ++d) {
    CHECK(beta[d] >= -0.25f);
    CHECK(beta[d] <= 0.25f);
  }
  EmbeddingTable t2 = load_embeddings(path, v, 3, Rng(9));
  CHECK(t1.weights == t2.weights);  // reproducible under the same seed

  const float* pad = t1.row(0);
  for (int d = 0; d < 3; ++d) CHECK(pad[d] == 0.0f);
}

TEST_CASE("embeddings: header detection and dimension checks") {
  Vocabulary v = Vocabulary::build({"alpha beta"});
  const std::string with_header =
      write_temp("header.txt", "2 3\nalpha 1 2 3\nbeta 4 5 6\n");
  EmbeddingTable t = load_embeddings(with_header, v, 3, Rng(1));
  CHECK(t.row(v.id("beta"))[2] == 6.0f);

  const std::string wrong_dim = write_temp("dim5.txt", "alpha 1 2 3 4 5\n");
  CHECK_THROWS_AS(load_embeddings(wrong_dim, v, 300, Rng(1)), ConfigError);

  const std::string malformed =
      write_temp("bad.txt", "alpha 1 2 3\nbeta 4 5\n");
  try {
    load_embeddings(malformed, v, 3, Rng(1));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  const std::string bad_number = write_temp("nan.txt", "alpha 1 x 3\n");
  CHECK_THROWS_AS(load_embeddings(bad_number, v, 3, Rng(1)), ParseError);
  CHECK_THROWS_AS(load_embeddings("/nonexistent/path.txt", v, 3, Rng(1)), ParseError);
}

TEST_CASE("embeddings: random table is deterministic and zero-padded") {
  Vocabulary v = Vocabulary::build({"a b c"});
  EmbeddingTable t1 = random_embeddings(v, 8, Rng(5));
  EmbeddingTable t2 = random_embeddings(v, 8, Rng(5));
  CHECK(t1.weights == t2.weights);
  for (int d = 0; d < 8; ++d) CHECK(t1.row(0)[d] == 0.0f);
  bool any_nonzero = false;
  for (int d = 0; d < 8; ++d) any_nonzero = any_nonzero || t1.row(2)[d] != 0.0f;
  CHECK(any_nonzero);
}
