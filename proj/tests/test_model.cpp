#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qbm/error.hpp"
#include "qbm/evaluator.hpp"
#include "qbm/forward.hpp"
#include "qbm/model.hpp"
#include "qbm/prep.hpp"

using namespace qbm;

namespace {

ModelConfig small_config(Variant v) {
  ModelConfig cfg;
  cfg.variant = v;
  cfg.max_len = 6;
  cfg.bag_capacity = 3;
  cfg.embed_dim = 8;
  cfg.conv1_filters = 4;
  cfg.conv1_width = 3;
  cfg.grid_stages = {{2, 3}, {2, 3}};
  cfg.cov_hidden = 4;
  cfg.head_hidden = 8;
  cfg.dropout = 0.0;
  return cfg;
}

const std::vector<std::string> kCorpus = {
    "where is my refund today",  "refund status check",  "how refund works",
    "cancel my order now",       "shipping time frame",  "track package status",
    "payment failed twice",      "update card details"};

struct Fixture {
  Vocabulary vocab;
  Stopwords stopwords;
  Preprocessor prep;
  ModelParams<float> params;

  explicit Fixture(Variant v, uint64_t seed = 3)
      : vocab(Vocabulary::build(kCorpus)),
        stopwords(Stopwords::builtin()),
        prep(vocab, stopwords, small_config(v)),
        params(ModelParams<float>::init(small_config(v), vocab.size(), Rng(seed))) {
    prep.fit(kCorpus);
    EmbeddingTable table = random_embeddings(vocab, 8, Rng(seed + 1));
    params.set_embedding(table);
  }
};

Tensor<float> tensor2(std::vector<float> vals, int rows, int cols) {
  return Tensor<float>::from({rows, cols}, std::move(vals));
}

}  // namespace

TEST_CASE("cross attention: unit-norm and orthogonal one-token texts") {
  // embeddings: token at id 2 is e0, token at id 3 is e1
  Tensor<float> table = Tensor<float>::zeros({4, 2});
  table.data()[2 * 2 + 0] = 1.0f;  // id 2 -> (1, 0)
  table.data()[3 * 2 + 1] = 1.0f;  // id 3 -> (0, 1)
  const std::vector<int> ids_a{2, 0};
  const std::vector<int> ids_b{3, 0};
  const ops::Mask one_valid{1, 0};
  Tensor<float> ea = ops::embedding_lookup<float>(nullptr, table, ids_a, one_valid);
  Tensor<float> eb = ops::embedding_lookup<float>(nullptr, table, ids_b, one_valid);

  Tensor<float> same = ops::attention_matrix<float>(nullptr, ea, ea, one_valid, one_valid);
  CHECK(same.data()[0] == 1.0f);
  CHECK(same.data()[1] == 0.0f);
  CHECK(same.data()[2] == 0.0f);
  CHECK(same.data()[3] == 0.0f);

  Tensor<float> ortho = ops::attention_matrix<float>(nullptr, ea, eb, one_valid, one_valid);
  for (size_t i = 0; i < ortho.numel(); ++i) CHECK(ortho.data()[i] == 0.0f);
}

TEST_CASE("cross attention: random texts against a double-loop oracle") {
  // 64-bit mode, like every numeric oracle
  Rng rng(17);
  Tensor<double> qe = Tensor<double>::zeros({4, 5});
  Tensor<double> be = Tensor<double>::zeros({3, 5});
  for (size_t i = 0; i < qe.numel(); ++i) qe.data()[i] = rng.uniform(-1, 1);
  for (size_t i = 0; i < be.numel(); ++i) be.data()[i] = rng.uniform(-1, 1);
  const ops::Mask qm{1, 1, 1, 1};
  const ops::Mask bm{1, 1, 1};
  Tensor<double> m = ops::attention_matrix<double>(nullptr, qe, be, qm, bm);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 3; ++b) {
      double dot = 0.0;
      for (int d = 0; d < 5; ++d) dot += qe.data()[a * 5 + d] * be.data()[b * 5 + d];
      CHECK(m.data()[a * 3 + b] == doctest::Approx(dot).epsilon(1e-10));
    }
  }
}

TEST_CASE("hcnn pair: identical texts zero out the difference block") {
  Fixture fx(Variant::base);
  const EncodedText q = encode("refund status check", fx.vocab, 6);
  QueryContext<float> qc = encode_query<float>(nullptr, fx.params, q);
  PairMatch<float> pm = hcnn_pair<float>(nullptr, fx.params, qc, q);
  const int f1 = fx.params.cfg.conv1_filters;
  // r layout: [h1; h2; h1-h2; h1*h2; hm]
  for (int i = 0; i < f1; ++i) {
    CHECK(pm.r.data()[i] == pm.r.data()[f1 + i]);          // h1 == h2
    CHECK(pm.r.data()[2 * f1 + i] == 0.0f);                // h1 - h2
  }
}

TEST_CASE("hcnn pair: zero embeddings give bias-driven, equal encodings") {
  Fixture fx(Variant::base);
  for (size_t i = 0; i < fx.params.embedding.numel(); ++i) {
    fx.params.embedding.data()[i] = 0.0f;
  }
  const EncodedText q = encode("refund status check", fx.vocab, 6);
  const EncodedText b = encode("cancel my order now", fx.vocab, 6);
  QueryContext<float> qc = encode_query<float>(nullptr, fx.params, q);
  PairMatch<float> pm = hcnn_pair<float>(nullptr, fx.params, qc, b);
  const int f1 = fx.params.cfg.conv1_filters;
  for (int i = 0; i < f1; ++i) {
    CHECK(pm.r.data()[i] == pm.r.data()[f1 + i]);
    // h equals relu(conv bias) pooled, a deterministic value
    const float expect = std::max(0.0f, fx.params.conv1_bias.data()[i]);
    CHECK(pm.r.data()[i] == expect);
  }
  // interaction matrix is all zero
  for (size_t i = 0; i < pm.m.numel(); ++i) CHECK(pm.m.data()[i] == 0.0f);
}

TEST_CASE("bag aggregation: singleton, two-question pooling, permutation") {
  Tensor<float> v = Tensor<float>::from({3}, {1.f, -2.f, 0.5f});
  Tensor<float> w = Tensor<float>::from({3}, {0.f, 4.f, 0.25f});
  const ops::Mask one{1};
  Tensor<float> single = ops::stack_rows<float>(nullptr, {v});
  Tensor<float> rp1 = ops::concat<float>(
      nullptr, {ops::masked_max_pool<float>(nullptr, single, one),
                ops::masked_mean_pool<float>(nullptr, single, one)});
  CHECK(rp1.values() == std::vector<float>{1.f, -2.f, 0.5f, 1.f, -2.f, 0.5f});

  const ops::Mask two{1, 1};
  Tensor<float> both = ops::stack_rows<float>(nullptr, {v, w});
  Tensor<float> rp2 = ops::concat<float>(
      nullptr, {ops::masked_max_pool<float>(nullptr, both, two),
                ops::masked_mean_pool<float>(nullptr, both, two)});
  CHECK(rp2.values() ==
        std::vector<float>{1.f, 4.f, 0.5f, 0.5f, 1.f, 0.375f});

  Tensor<float> swapped = ops::stack_rows<float>(nullptr, {w, v});
  Tensor<float> rp3 = ops::concat<float>(
      nullptr, {ops::masked_max_pool<float>(nullptr, swapped, two),
                ops::masked_mean_pool<float>(nullptr, swapped, two)});
  CHECK(rp2.values() == rp3.values());
}

TEST_CASE("coverage: bag-to-query spec examples") {
  // one question, M = [[0.2, 0.9], [0.5, 0.1]]
  Tensor<float> m = tensor2({0.2f, 0.9f, 0.5f, 0.1f}, 2, 2);
  const ops::Mask full{1, 1};
  Tensor<float> c_q =
      bag_to_query_coverage<float>(nullptr, {m}, full, {&full});
  CHECK(c_q.data()[0] == doctest::Approx(0.9f));
  CHECK(c_q.data()[1] == doctest::Approx(0.5f));

  // two questions with per-question coverages [0.3, 0.4] and [0.5, 0.1]
  Tensor<float> m1 = tensor2({0.3f, 0.4f}, 2, 1);
  Tensor<float> m2 = tensor2({0.5f, 0.1f}, 2, 1);
  const ops::Mask one{1};
  Tensor<float> c2 = bag_to_query_coverage<float>(nullptr, {m1, m2}, full,
                                                  {&one, &one});
  CHECK(c2.data()[0] == doctest::Approx(0.5f));
  CHECK(c2.data()[1] == doctest::Approx(0.4f));
}

TEST_CASE("coverage: query-to-bag spec examples and padding blocks") {
  Tensor<float> m = tensor2({0.2f, 0.9f, 0.5f, 0.1f}, 2, 2);
  const ops::Mask full{1, 1};
  Tensor<float> c_b = query_to_bag_coverage<float>(nullptr, {m}, full, {&full}, 5);
  REQUIRE(c_b.numel() == 10);
  CHECK(c_b.data()[0] == doctest::Approx(0.5f));
  CHECK(c_b.data()[1] == doctest::Approx(0.9f));
  for (size_t i = 2; i < 10; ++i) CHECK(c_b.data()[i] == 0.0f);
}

TEST_CASE("coverage: random bag against triple-loop oracles") {
  Rng rng(23);
  const int l = 5;
  std::vector<Tensor<float>> ms;
  std::vector<ops::Mask> masks;
  for (int i = 0; i < 3; ++i) {
    Tensor<float> m = Tensor<float>::zeros({l, l});
    ops::Mask bm(size_t(l), 0);
    const int len = 1 + int(rng.below(l));
    for (int b = 0; b < len; ++b) bm[size_t(b)] = 1;
    for (int a = 0; a < l; ++a) {
      for (int b = 0; b < len; ++b) m.data()[a * l + b] = float(rng.uniform(-1, 1));
    }
    ms.push_back(m);
    masks.push_back(bm);
  }
  ops::Mask qmask{1, 1, 1, 1, 0};
  std::vector<const ops::Mask*> bmasks{&masks[0], &masks[1], &masks[2]};

  Tensor<float> c_q = bag_to_query_coverage<float>(nullptr, ms, qmask, bmasks);
  for (int j = 0; j < l; ++j) {
    if (!qmask[size_t(j)]) {
      CHECK(c_q.data()[j] == 0.0f);
      continue;
    }
    float best = -1e30f;
    for (int i = 0; i < 3; ++i) {
      for (int b = 0; b < l; ++b) {
        if (!masks[size_t(i)][size_t(b)]) continue;
        best = std::max(best, ms[size_t(i)].data()[j * l + b]);
      }
    }
    CHECK(c_q.data()[j] == best);
  }

  Tensor<float> c_b = query_to_bag_coverage<float>(nullptr, ms, qmask, bmasks, 4);
  for (int i = 0; i < 4; ++i) {
    for (int b = 0; b < l; ++b) {
      float expect = 0.0f;
      if (i < 3 && masks[size_t(i)][size_t(b)]) {
        expect = -1e30f;
        for (int a = 0; a < l; ++a) {
          if (!qmask[size_t(a)]) continue;
          expect = std::max(expect, ms[size_t(i)].data()[a * l + b]);
        }
      }
      CHECK(c_b.data()[i * l + b] == expect);
    }
  }
}

TEST_CASE("coverage weighting: zero MLP gives uniform attention") {
  Fixture fx(Variant::base_mc);
  // fresh init keeps the coverage output layer at zero
  Tensor<float> emb = Tensor<float>::zeros({4, 8});
  Rng rng(5);
  for (size_t i = 0; i < emb.numel(); ++i) emb.data()[i] = float(rng.uniform(-1, 1));
  const ops::Mask mask{1, 1, 1, 0};
  Tensor<float> c = Tensor<float>::from({4}, {0.2f, 0.6f, -0.3f, 0.0f});
  WeightedCoverage<float> wc =
      coverage_weighting<float>(nullptr, fx.params, emb, mask, c);
  CHECK(wc.weighted.data()[0] == doctest::Approx(0.2f / 3));
  CHECK(wc.weighted.data()[1] == doctest::Approx(0.6f / 3));
  CHECK(wc.weighted.data()[2] == doctest::Approx(-0.3f / 3));
  CHECK(wc.weighted.data()[3] == 0.0f);
  CHECK(wc.total.data()[0] ==
        doctest::Approx((0.2f + 0.6f - 0.3f) / 3).epsilon(1e-6));

  const ops::Mask single{0, 1, 0, 0};
  WeightedCoverage<float> one =
      coverage_weighting<float>(nullptr, fx.params, emb, single, c);
  CHECK(one.weighted.data()[1] == doctest::Approx(0.6f));
  CHECK(one.total.data()[0] == doctest::Approx(0.6f));
}

TEST_CASE("coverage weighting: random case against an explicit oracle") {
  Fixture fx(Variant::base_mc, 9);
  // randomize the coverage MLP output layer so weights differ per token
  Rng rng(6);
  for (size_t i = 0; i < fx.params.cov_w2.numel(); ++i) {
    fx.params.cov_w2.data()[i] = float(rng.uniform(-1, 1));
  }
  Tensor<float> emb = Tensor<float>::zeros({5, 8});
  for (size_t i = 0; i < emb.numel(); ++i) emb.data()[i] = float(rng.uniform(-1, 1));
  const ops::Mask mask{1, 0, 1, 1, 0};
  Tensor<float> c = Tensor<float>::from({5}, {0.1f, 9.f, 0.5f, -0.2f, 9.f});
  WeightedCoverage<float> wc =
      coverage_weighting<float>(nullptr, fx.params, emb, mask, c);

  // oracle: per-token MLP, stable softmax over valid, elementwise product
  auto mlp = [&](const float* row) {
    std::vector<double> h(4, 0.0);
    for (int j = 0; j < 4; ++j) {
      double acc = fx.params.cov_b1.data()[j];
      for (int d = 0; d < 8; ++d) acc += double(row[d]) * fx.params.cov_w1.data()[d * 4 + j];
      h[size_t(j)] = std::max(0.0, acc);
    }
    double e = fx.params.cov_b2.data()[0];
    for (int j = 0; j < 4; ++j) e += h[size_t(j)] * fx.params.cov_w2.data()[j];
    return e;
  };
  std::vector<double> es;
  double mx = -1e300;
  for (int i = 0; i < 5; ++i) {
    es.push_back(mlp(emb.data() + i * 8));
    if (mask[size_t(i)]) mx = std::max(mx, es.back());
  }
  double z = 0.0;
  for (int i = 0; i < 5; ++i) {
    if (mask[size_t(i)]) z += std::exp(es[size_t(i)] - mx);
  }
  double total = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double attn = mask[size_t(i)] ? std::exp(es[size_t(i)] - mx) / z : 0.0;
    const double expect = attn * double(c.data()[i]);
    CHECK(wc.weighted.data()[i] == doctest::Approx(expect).epsilon(1e-5));
    total += expect;
  }
  CHECK(wc.total.data()[0] == doctest::Approx(total).epsilon(1e-5));
}

TEST_CASE("bag representation: keyword pseudo-question and fallbacks") {
  Fixture fx(Variant::base_br);
  PreparedRecord rec = fx.prep.record(
      "refund", {"refund", "refund status check"}, 1, 0);
  CHECK(rec.brep_valid);
  REQUIRE(rec.brep.true_length >= 1);
  CHECK(rec.brep.ids[0] == fx.vocab.id("refund"));  // highest tf wins

  // a stopword-only bag has no representation and is flagged invalid
  PreparedRecord bad = fx.prep.record("refund", {"the of and", "what is"}, 1, 1);
  CHECK(!bad.brep_valid);
  CHECK_THROWS_AS(instance_features<float>(nullptr, fx.params, bad),
                  InvalidInstanceError);
}

TEST_CASE("feature lengths: every variant matches the closed form") {
  for (Variant v : {Variant::base, Variant::base_mc, Variant::base_br,
                    Variant::base_br_nocov, Variant::qbm, Variant::qq,
                    Variant::bagcon}) {
    Fixture fx(v);
    PreparedRecord rec =
        v == Variant::qq
            ? fx.prep.record("where is my refund today", {"refund status check"}, 1, 0)
            : fx.prep.record("where is my refund today",
                             {"refund status check", "how refund works"}, 1, 0);
    Tensor<float> f = instance_features<float>(nullptr, fx.params, rec);
    CHECK(int(f.numel()) == fx.params.cfg.feature_len());
  }
}

TEST_CASE("variant wiring: removing coverage shrinks the feature vector") {
  const ModelConfig with_cov = small_config(Variant::base_br);
  const ModelConfig without = small_config(Variant::base_br_nocov);
  CHECK(with_cov.feature_len() ==
        without.feature_len() + 2 * with_cov.max_len + 2);
}

TEST_CASE("forward: probability in (0,1), eval bit-deterministic") {
  Fixture fx(Variant::qbm);
  PreparedRecord rec = fx.prep.record(
      "where is my refund today", {"refund status check", "how refund works"}, 1, 0);
  const double p1 = forward_probability(fx.params, rec);
  CHECK(p1 > 0.0);
  CHECK(p1 < 1.0);
  const double again = forward_probability(fx.params, rec);
  CHECK(p1 == again);
}

TEST_CASE("invariants: bag permutation for base and base+br outputs") {
  for (Variant v : {Variant::base, Variant::base_br}) {
    Fixture fx(v);
    const std::vector<std::string> bag = {"refund status check",
                                          "how refund works",
                                          "track package status"};
    std::vector<std::string> permuted = {bag[2], bag[0], bag[1]};
    PreparedRecord a = fx.prep.record("where is my refund today", bag, 1, 0);
    PreparedRecord b = fx.prep.record("where is my refund today", permuted, 1, 0);
    CHECK(forward_probability(fx.params, a) == forward_probability(fx.params, b));
  }
}

TEST_CASE("invariants: c_q and weighted query-to-bag total are order-blind") {
  Fixture fx(Variant::qbm);
  Rng rng(8);
  for (size_t i = 0; i < fx.params.cov_w2.numel(); ++i) {
    fx.params.cov_w2.data()[i] = float(rng.uniform(-1, 1));
  }
  const std::vector<std::string> bag = {"refund status check", "how refund works",
                                        "track package status"};
  std::vector<std::string> permuted = {bag[1], bag[2], bag[0]};

  auto pieces = [&](const std::vector<std::string>& questions) {
    PreparedRecord rec = fx.prep.record("where is my refund today", questions, 1, 0);
    QueryContext<float> qc = encode_query<float>(nullptr, fx.params, rec.query);
    std::vector<Tensor<float>> ms;
    std::vector<Tensor<float>> embs;
    std::vector<const ops::Mask*> bmasks;
    for (const auto& q : rec.questions) {
      PairMatch<float> pm = hcnn_pair<float>(nullptr, fx.params, qc, q);
      ms.push_back(pm.m);
      embs.push_back(pm.b_emb);
      bmasks.push_back(&q.mask);
    }
    Tensor<float> c_q = bag_to_query_coverage<float>(nullptr, ms, rec.query.mask, bmasks);
    ops::Mask bag_mask;
    for (const auto& q : rec.questions) {
      bag_mask.insert(bag_mask.end(), q.mask.begin(), q.mask.end());
    }
    Tensor<float> bag_emb = ops::reshape_copy<float>(
        nullptr, ops::stack_rows<float>(nullptr, embs),
        {int(rec.questions.size()) * fx.params.cfg.max_len, fx.params.cfg.embed_dim});
    Tensor<float> c_b = query_to_bag_coverage<float>(
        nullptr, ms, rec.query.mask, bmasks, int(rec.questions.size()));
    WeightedCoverage<float> wb =
        coverage_weighting<float>(nullptr, fx.params, bag_emb, bag_mask, c_b);
    return std::pair{c_q.values(), wb.total.data()[0]};
  };

  const auto [cq_a, sum_a] = pieces(bag);
  const auto [cq_b, sum_b] = pieces(permuted);
  CHECK(cq_a == cq_b);
  CHECK(sum_a == sum_b);  // canonical summation makes this exact
}

TEST_CASE("invariants: coverage bounds under normalized embeddings") {
  Fixture fx(Variant::qbm);
  const int d = fx.params.cfg.embed_dim;
  for (int id = 1; id < fx.vocab.size(); ++id) {
    float norm = 0.0f;
    float* row = fx.params.embedding.data() + size_t(id) * d;
    for (int j = 0; j < d; ++j) norm += row[j] * row[j];
    norm = std::sqrt(norm);
    for (int j = 0; j < d; ++j) row[j] /= norm;
  }
  PreparedRecord rec = fx.prep.record("where is my refund today",
                                      {"refund status check", "how refund works"},
                                      1, 0);
  QueryContext<float> qc = encode_query<float>(nullptr, fx.params, rec.query);
  std::vector<Tensor<float>> ms;
  std::vector<const ops::Mask*> bmasks;
  for (const auto& q : rec.questions) {
    ms.push_back(hcnn_pair<float>(nullptr, fx.params, qc, q).m);
    bmasks.push_back(&q.mask);
  }
  Tensor<float> c_q = bag_to_query_coverage<float>(nullptr, ms, rec.query.mask, bmasks);
  Tensor<float> c_b = query_to_bag_coverage<float>(nullptr, ms, rec.query.mask,
                                                   bmasks, fx.params.cfg.bag_capacity);
  for (size_t i = 0; i < c_q.numel(); ++i) {
    CHECK(c_q.data()[i] >= -1.0f - 1e-5f);
    CHECK(c_q.data()[i] <= 1.0f + 1e-5f);
  }
  for (size_t i = 0; i < c_b.numel(); ++i) {
    CHECK(c_b.data()[i] >= -1.0f - 1e-5f);
    CHECK(c_b.data()[i] <= 1.0f + 1e-5f);
  }
}

TEST_CASE("invariants: coverage grows monotonically with the bag") {
  Fixture fx(Variant::qbm);
  PreparedRecord small = fx.prep.record("where is my refund today",
                                        {"refund status check"}, 1, 0);
  PreparedRecord grown = fx.prep.record(
      "where is my refund today",
      {"refund status check", "track package status"}, 1, 0);
  auto cq_of = [&](const PreparedRecord& rec) {
    QueryContext<float> qc = encode_query<float>(nullptr, fx.params, rec.query);
    std::vector<Tensor<float>> ms;
    std::vector<const ops::Mask*> bmasks;
    for (const auto& q : rec.questions) {
      ms.push_back(hcnn_pair<float>(nullptr, fx.params, qc, q).m);
      bmasks.push_back(&q.mask);
    }
    return bag_to_query_coverage<float>(nullptr, ms, rec.query.mask, bmasks).values();
  };
  const auto before = cq_of(small);
  const auto after = cq_of(grown);
  for (size_t j = 0; j < before.size(); ++j) CHECK(after[j] >= before[j]);
}

TEST_CASE("invariants: padded-position embedding values never matter") {
  for (Variant v : {Variant::qbm, Variant::bagcon}) {
    Fixture fx(v);
    PreparedRecord rec = fx.prep.record(
        "where is my refund today", {"refund status check", "how refund works"}, 1, 0);
    const double before = forward_probability(fx.params, rec);
    const int d = fx.params.cfg.embed_dim;
    for (int j = 0; j < d; ++j) fx.params.embedding.data()[j] = 777.0f;  // PAD row
    const double after = forward_probability(fx.params, rec);
    CHECK(before == after);
  }
}

TEST_CASE("pairwise baseline: aggregation over per-question probabilities") {
  Fixture fx(Variant::qq);
  const std::vector<std::string> bag = {"refund status check", "how refund works",
                                        "track package status"};
  PreparedRecord whole = fx.prep.record("where is my refund today", bag, 1, 0);
  std::vector<double> per_question;
  for (const auto& q : bag) {
    PreparedRecord single = fx.prep.record("where is my refund today", {q}, 1, 0);
    per_question.push_back(score_candidate(fx.params, single, QqMode::max));
  }
  const double mx = score_candidate(fx.params, whole, QqMode::max);
  const double mean = score_candidate(fx.params, whole, QqMode::mean);
  CHECK(mx == doctest::Approx(*std::max_element(per_question.begin(),
                                                per_question.end()))
                  .epsilon(1e-12));
  double sum = 0.0;
  for (double p : per_question) sum += p;
  CHECK(mean == doctest::Approx(sum / 3.0).epsilon(1e-12));

  PreparedRecord single = fx.prep.record("where is my refund today", {bag[0]}, 1, 0);
  CHECK(score_candidate(fx.params, single, QqMode::max) ==
        doctest::Approx(score_candidate(fx.params, single, QqMode::mean)));
  CHECK_THROWS_AS(score_candidate(fx.params, whole, QqMode::none), ConfigError);
}

TEST_CASE("concatenation baseline: singleton bag equals the plain pair model") {
  Fixture fx(Variant::bagcon);
  const std::string question = "refund status check";
  PreparedRecord rec = fx.prep.record("where is my refund today", {question}, 1, 0);
  // concatenating a single question is that question
  PreparedRecord manual;
  manual.query = encode("where is my refund today", fx.vocab, fx.params.cfg.encode_len());
  manual.concat = encode(question, fx.vocab, fx.params.cfg.encode_len());
  manual.label = 1;
  const double a = forward_probability(fx.params, rec);
  const double b = forward_probability(fx.params, manual);
  CHECK(std::abs(a - b) < 1e-6);

  // over-long concatenations truncate deterministically
  std::vector<std::string> many(40, "track package status now please");
  PreparedRecord truncated = fx.prep.record("where is my refund today", many, 0, 1);
  CHECK(truncated.concat.true_length == fx.params.cfg.encode_len());
  CHECK(forward_probability(fx.params, truncated) ==
        forward_probability(fx.params, truncated));
}

TEST_CASE("degenerate inputs are rejected at the model boundary") {
  Fixture fx(Variant::qbm);
  PreparedRecord empty_query = fx.prep.record("", {"refund status check"}, 1, 0);
  CHECK_THROWS_AS(instance_features<float>(nullptr, fx.params, empty_query),
                  DegenerateInputError);
  PreparedRecord empty_bag = fx.prep.record("where is my refund today", {}, 1, 0);
  CHECK_THROWS_AS(instance_features<float>(nullptr, fx.params, empty_bag),
                  DegenerateInputError);
  CHECK_THROWS_AS(parse_variant("nope"), ConfigError);
}

TEST_CASE("parameter counts are a pure function of the config") {
  Fixture a(Variant::qbm, 1);
  Fixture b(Variant::qbm, 2);
  CHECK(a.params.param_count() == b.params.param_count());
  Fixture base(Variant::base, 1);
  CHECK(a.params.param_count() != base.params.param_count());
  // fresh coverage output layer starts at zero
  for (size_t i = 0; i < a.params.cov_w2.numel(); ++i) {
    CHECK(a.params.cov_w2.data()[i] == 0.0f);
  }
}
