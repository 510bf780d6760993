#pragma once

#include <vector>

#include "qbm/model.hpp"
#include "qbm/prep.hpp"

namespace qbm {

// Aggregation mode for the pairwise (query-question) baseline at ranking time.
enum class QqMode { none, max, mean };

QqMode parse_qq_mode(const std::string& name);

// Variant-dependent feature vector of one (query, bag) record. The layout is
// fixed: [r_p], then the mutual-coverage block, then the bag-representation
// block, each present only when the variant includes it.
template <class R>
Tensor<R> instance_features(Tape<R>* tape, ModelParams<R>& P,
                            const PreparedRecord& rec) {
  const ModelConfig& cfg = P.cfg;
  if (cfg.variant == Variant::qq) {
    if (rec.questions.size() != 1) {
      throw InvalidInstanceError(
          "pairwise variant expects exactly one question per record, got " +
          std::to_string(rec.questions.size()));
    }
    QueryContext<R> qc = encode_query(tape, P, rec.query);
    return hcnn_pair(tape, P, qc, rec.questions[0]).r;
  }
  if (cfg.variant == Variant::bagcon) {
    QueryContext<R> qc = encode_query(tape, P, rec.query);
    return hcnn_pair(tape, P, qc, rec.concat).r;
  }

  if (rec.questions.empty()) {
    throw DegenerateInputError("instance has an empty bag");
  }
  if (variant_has_br(cfg.variant) && !rec.brep_valid) {
    throw InvalidInstanceError(
        "bag has no content words; no bag representation available");
  }
  QueryContext<R> qc = encode_query(tape, P, rec.query);

  std::vector<Tensor<R>> reps;
  std::vector<Tensor<R>> ms;
  std::vector<Tensor<R>> question_embs;
  std::vector<const ops::Mask*> bmasks;
  for (const auto& b : rec.questions) {
    PairMatch<R> pm = hcnn_pair(tape, P, qc, b);
    reps.push_back(pm.r);
    ms.push_back(pm.m);
    question_embs.push_back(pm.b_emb);
    bmasks.push_back(&b.mask);
  }

  Tensor<R> stacked = ops::stack_rows(tape, reps);
  const ops::Mask all_real(rec.questions.size(), 1);
  Tensor<R> r_p = ops::concat(
      tape, {ops::masked_max_pool(tape, stacked, all_real),
             ops::masked_mean_pool(tape, stacked, all_real)});

  std::vector<Tensor<R>> parts{r_p};

  if (variant_has_mc(cfg.variant)) {
    Tensor<R> c_q = bag_to_query_coverage(tape, ms, rec.query.mask, bmasks);
    WeightedCoverage<R> wq =
        coverage_weighting(tape, P, qc.emb, rec.query.mask, c_q);

    // Bag token axis: question embeddings stacked block-wise, absent slots
    // zero with a zero mask.
    std::vector<Tensor<R>> emb_rows = question_embs;
    ops::Mask bag_mask;
    for (const auto& b : rec.questions) {
      bag_mask.insert(bag_mask.end(), b.mask.begin(), b.mask.end());
    }
    const Tensor<R> zero_block = Tensor<R>::zeros({cfg.max_len, cfg.embed_dim});
    while (int(emb_rows.size()) < cfg.bag_capacity) {
      emb_rows.push_back(zero_block);
      bag_mask.insert(bag_mask.end(), size_t(cfg.max_len), 0);
    }
    Tensor<R> bag_emb = ops::reshape_copy(
        tape, ops::stack_rows(tape, emb_rows),
        {cfg.bag_capacity * cfg.max_len, cfg.embed_dim});
    Tensor<R> c_b = query_to_bag_coverage(tape, ms, rec.query.mask, bmasks,
                                          cfg.bag_capacity);
    WeightedCoverage<R> wb = coverage_weighting(tape, P, bag_emb, bag_mask, c_b);
    parts.push_back(wq.weighted);
    parts.push_back(wb.weighted);
    parts.push_back(wq.total);
    parts.push_back(wb.total);
  }

  if (variant_has_br(cfg.variant)) {
    PairMatch<R> pr = hcnn_pair(tape, P, qc, rec.brep);
    parts.push_back(pr.r);
    if (variant_br_coverage(cfg.variant)) {
      const std::vector<Tensor<R>> br_ms{pr.m};
      const std::vector<const ops::Mask*> br_masks{&rec.brep.mask};
      Tensor<R> c_qr = bag_to_query_coverage(tape, br_ms, rec.query.mask, br_masks);
      WeightedCoverage<R> wqr =
          coverage_weighting(tape, P, qc.emb, rec.query.mask, c_qr);
      Tensor<R> c_br = query_to_bag_coverage(tape, br_ms, rec.query.mask, br_masks, 1);
      WeightedCoverage<R> wbr =
          coverage_weighting(tape, P, pr.b_emb, rec.brep.mask, c_br);
      parts.push_back(wqr.weighted);
      parts.push_back(wbr.weighted);
      parts.push_back(wqr.total);
      parts.push_back(wbr.total);
    }
  }
  return ops::concat(tape, parts);
}

// Classification head: dropout on the features, one hidden ReLU layer, two
// output logits.
template <class R>
Tensor<R> head_logits(Tape<R>* tape, ModelParams<R>& P, const Tensor<R>& features,
                      bool training, Rng& rng) {
  Tensor<R> x = ops::dropout(tape, features, P.cfg.dropout, training, rng);
  Tensor<R> h = ops::relu(
      tape, ops::add_rowwise(tape, ops::matmul(tape, x, P.head_w1), P.head_b1));
  return ops::add_rowwise(tape, ops::matmul(tape, h, P.head_w2), P.head_b2);
}

namespace detail {
inline double match_probability(double l0, double l1) {
  return 1.0 / (1.0 + std::exp(l0 - l1));
}
}  // namespace detail

// Evaluation-mode probability that the record's query matches its bag.
template <class R>
double forward_probability(ModelParams<R>& P, const PreparedRecord& rec) {
  Tensor<R> f = instance_features<R>(nullptr, P, rec);
  Tensor<R> fm = ops::reshape_copy<R>(nullptr, f, {1, int(f.numel())});
  Rng dummy(0);
  Tensor<R> logits = head_logits<R>(nullptr, P, fm, false, dummy);
  return detail::match_probability(double(logits.data()[0]),
                                   double(logits.data()[1]));
}

// Ranking score of one candidate bag. The pairwise baseline aggregates
// per-question match probabilities by max or mean; every other variant scores
// the bag directly.
template <class R>
double score_candidate(ModelParams<R>& P, const PreparedRecord& rec, QqMode mode) {
  if (P.cfg.variant != Variant::qq) return forward_probability(P, rec);
  if (mode == QqMode::none) {
    throw ConfigError("pairwise checkpoint needs an aggregation mode (max or mean)");
  }
  if (rec.questions.empty()) {
    throw DegenerateInputError("instance has an empty bag");
  }
  QueryContext<R> qc = encode_query<R>(nullptr, P, rec.query);
  Rng dummy(0);
  double best = 0.0, sum = 0.0;
  bool first = true;
  for (const auto& b : rec.questions) {
    Tensor<R> r = hcnn_pair<R>(nullptr, P, qc, b).r;
    Tensor<R> fm = ops::reshape_copy<R>(nullptr, r, {1, int(r.numel())});
    Tensor<R> logits = head_logits<R>(nullptr, P, fm, false, dummy);
    const double p = detail::match_probability(double(logits.data()[0]),
                                               double(logits.data()[1]));
    if (first || p > best) best = p;
    first = false;
    sum += p;
  }
  return mode == QqMode::max ? best : sum / double(rec.questions.size());
}

}  // namespace qbm
