#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qbm/error.hpp"
#include "qbm/ops.hpp"
#include "qbm/rng.hpp"
#include "qbm/tensor.hpp"
#include "qbm/text.hpp"

namespace qbm {

enum class Variant { base, base_mc, base_br, base_br_nocov, qbm, qq, bagcon };

Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);

inline bool variant_has_mc(Variant v) {
  return v == Variant::base_mc || v == Variant::qbm;
}
inline bool variant_has_br(Variant v) {
  return v == Variant::base_br || v == Variant::base_br_nocov || v == Variant::qbm;
}
inline bool variant_br_coverage(Variant v) {
  return v == Variant::base_br || v == Variant::qbm;
}
inline bool variant_has_coverage_mlp(Variant v) {
  return variant_has_mc(v) || variant_br_coverage(v);
}
inline bool variant_is_pairwise(Variant v) {
  return v == Variant::qq || v == Variant::bagcon;
}

struct GridStageConfig {
  int filters = 32;
  int kernel = 3;
};

struct ModelConfig {
  Variant variant = Variant::qbm;
  int max_len = 20;       // L
  int bag_capacity = 5;   // n_max
  int embed_dim = 300;    // D
  int conv1_filters = 128;
  int conv1_width = 3;
  std::vector<GridStageConfig> grid_stages{{32, 3}, {32, 3}};
  int cov_hidden = 64;
  int head_hidden = 256;
  int br_terms = 10;
  double dropout = 0.5;

  void validate() const;

  // Sequence length fed to the encoder: the concatenation variant uses one
  // long question of bag_capacity * max_len tokens, everything else max_len.
  int encode_len() const {
    return variant == Variant::bagcon ? bag_capacity * max_len : max_len;
  }

  int grid_side(int len) const {
    int side = len;
    for (size_t i = 0; i < grid_stages.size(); ++i) side = (side + 1) / 2;
    return side;
  }
  int grid_flat_len(int len) const {
    const int side = grid_side(len);
    return grid_stages.back().filters * side * side;
  }
  // Length of one pair-match representation [h1; h2; h1-h2; h1*h2; hm].
  int pair_rep_len(int len) const {
    return 4 * conv1_filters + grid_flat_len(len);
  }
  int mc_feature_len() const { return max_len + bag_capacity * max_len + 2; }
  int br_feature_len() const {
    return pair_rep_len(max_len) +
           (variant_br_coverage(variant) ? 2 * max_len + 2 : 0);
  }
  // Input width of the classification head, a pure function of the config.
  int feature_len() const {
    switch (variant) {
      case Variant::qq:
        return pair_rep_len(max_len);
      case Variant::bagcon:
        return pair_rep_len(encode_len());
      default:
        break;
    }
    int len = 2 * pair_rep_len(max_len);
    if (variant_has_mc(variant)) len += mc_feature_len();
    if (variant_has_br(variant)) len += br_feature_len();
    return len;
  }
};

// All trainable arrays of one model. Which tensors exist is a pure function
// of the config; `named()` lists them in the declared (checkpoint) order.
template <class R>
struct ModelParams {
  ModelConfig cfg;
  Tensor<R> embedding;  // V x D
  Tensor<R> conv1_kernels, conv1_bias;
  std::vector<ops::GridStage<R>> grid;
  Tensor<R> cov_w1, cov_b1, cov_w2, cov_b2;
  Tensor<R> head_w1, head_b1, head_w2, head_b2;

  static ModelParams init(const ModelConfig& cfg, int vocab_size, Rng rng) {
    cfg.validate();
    ModelParams p;
    p.cfg = cfg;
    auto glorot = [&rng](Shape shape, int fan_in, int fan_out) {
      Tensor<R> t = Tensor<R>::zeros(std::move(shape), true);
      const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
      for (size_t i = 0; i < t.numel(); ++i) {
        t.data()[i] = R(rng.uniform(-limit, limit));
      }
      return t;
    };
    p.embedding = Tensor<R>::zeros({vocab_size, cfg.embed_dim}, true);
    p.conv1_kernels = glorot({cfg.conv1_filters, cfg.conv1_width, cfg.embed_dim},
                             cfg.conv1_width * cfg.embed_dim, cfg.conv1_filters);
    p.conv1_bias = Tensor<R>::zeros({cfg.conv1_filters}, true);
    int channels = 1;
    for (const auto& st : cfg.grid_stages) {
      ops::GridStage<R> stage;
      stage.kernels = glorot({st.filters, channels, st.kernel, st.kernel},
                             channels * st.kernel * st.kernel, st.filters);
      stage.bias = Tensor<R>::zeros({st.filters}, true);
      p.grid.push_back(std::move(stage));
      channels = st.filters;
    }
    if (variant_has_coverage_mlp(cfg.variant)) {
      p.cov_w1 = glorot({cfg.embed_dim, cfg.cov_hidden}, cfg.embed_dim, cfg.cov_hidden);
      p.cov_b1 = Tensor<R>::zeros({cfg.cov_hidden}, true);
      // Zero output layer: every token starts with an identical raw weight,
      // i.e. uniform coverage attention.
      p.cov_w2 = Tensor<R>::zeros({cfg.cov_hidden, 1}, true);
      p.cov_b2 = Tensor<R>::zeros({1}, true);
    }
    const int feat = cfg.feature_len();
    p.head_w1 = glorot({feat, cfg.head_hidden}, feat, cfg.head_hidden);
    p.head_b1 = Tensor<R>::zeros({cfg.head_hidden}, true);
    p.head_w2 = glorot({cfg.head_hidden, 2}, cfg.head_hidden, 2);
    p.head_b2 = Tensor<R>::zeros({2}, true);
    return p;
  }

  void set_embedding(const EmbeddingTable& table) {
    if (int(table.weights.size()) != embedding.dim(0) * embedding.dim(1) ||
        table.dim != cfg.embed_dim) {
      throw ShapeError("model: embedding table " + std::to_string(table.dim) +
                       "-dim does not match config " +
                       std::to_string(cfg.embed_dim));
    }
    for (size_t i = 0; i < embedding.numel(); ++i) {
      embedding.data()[i] = R(table.weights[i]);
    }
    if (!table.trainable && embedding.requires_grad()) {
      embedding = Tensor<R>::from(embedding.shape(), embedding.values(), false);
    }
  }

  std::vector<std::pair<std::string, Tensor<R>>> named() const {
    std::vector<std::pair<std::string, Tensor<R>>> out;
    out.emplace_back("embedding", embedding);
    out.emplace_back("conv1.kernels", conv1_kernels);
    out.emplace_back("conv1.bias", conv1_bias);
    for (size_t s = 0; s < grid.size(); ++s) {
      out.emplace_back("grid" + std::to_string(s) + ".kernels", grid[s].kernels);
      out.emplace_back("grid" + std::to_string(s) + ".bias", grid[s].bias);
    }
    if (variant_has_coverage_mlp(cfg.variant)) {
      out.emplace_back("cov.w1", cov_w1);
      out.emplace_back("cov.b1", cov_b1);
      out.emplace_back("cov.w2", cov_w2);
      out.emplace_back("cov.b2", cov_b2);
    }
    out.emplace_back("head.w1", head_w1);
    out.emplace_back("head.b1", head_b1);
    out.emplace_back("head.w2", head_w2);
    out.emplace_back("head.b2", head_b2);
    return out;
  }

  std::vector<Tensor<R>> tensors() const {
    std::vector<Tensor<R>> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
  }

  void zero_grad() {
    for (auto& t : tensors()) t.zero_grad();
  }

  size_t param_count() const {
    size_t n = 0;
    for (auto& t : tensors()) n += t.numel();
    return n;
  }

  // Independent storage for every tensor (checkpoint keeping, best-epoch copy).
  ModelParams deep_copy() const {
    ModelParams c = *this;
    auto dup = [](Tensor<R>& t) {
      if (t.defined()) t = Tensor<R>::from(t.shape(), t.values(), t.requires_grad());
    };
    dup(c.embedding);
    dup(c.conv1_kernels);
    dup(c.conv1_bias);
    for (auto& st : c.grid) {
      dup(st.kernels);
      dup(st.bias);
    }
    dup(c.cov_w1);
    dup(c.cov_b1);
    dup(c.cov_w2);
    dup(c.cov_b2);
    dup(c.head_w1);
    dup(c.head_b1);
    dup(c.head_w2);
    dup(c.head_b2);
    return c;
  }
};

// ---------------------------------------------------------------------------
// Forward pieces
// ---------------------------------------------------------------------------

// Query-side computation shared across all pair matches of one instance.
template <class R>
struct QueryContext {
  const EncodedText* enc = nullptr;
  Tensor<R> emb;  // [L x D]
  Tensor<R> h1;   // [F1]
};

// Pair-match output: the assembled representation r and the raw
// cross-attention matrix it was built over.
template <class R>
struct PairMatch {
  Tensor<R> r;
  Tensor<R> m;      // [Lq x Lb]
  Tensor<R> b_emb;  // [Lb x D]
};

template <class R>
QueryContext<R> encode_query(Tape<R>* tape, ModelParams<R>& P,
                             const EncodedText& q) {
  if (q.empty()) throw DegenerateInputError("query is empty (all positions masked)");
  QueryContext<R> ctx;
  ctx.enc = &q;
  ctx.emb = ops::embedding_lookup(tape, P.embedding, q.ids, q.mask);
  Tensor<R> conv = ops::conv_text(tape, ctx.emb, P.conv1_kernels, P.conv1_bias, q.mask);
  ctx.h1 = ops::masked_max_pool(tape, conv, q.mask);
  return ctx;
}

// hCNN pair matching: shared sentence encoder on both sides, a grid
// convolution over the word-by-word interaction matrix, and the combined
// representation [h1; h2; h1-h2; h1*h2; hm].
template <class R>
PairMatch<R> hcnn_pair(Tape<R>* tape, ModelParams<R>& P,
                       const QueryContext<R>& qc, const EncodedText& b) {
  if (b.empty()) throw DegenerateInputError("bag question is empty (all positions masked)");
  PairMatch<R> out;
  out.b_emb = ops::embedding_lookup(tape, P.embedding, b.ids, b.mask);
  Tensor<R> conv = ops::conv_text(tape, out.b_emb, P.conv1_kernels, P.conv1_bias, b.mask);
  Tensor<R> h2 = ops::masked_max_pool(tape, conv, b.mask);
  out.m = ops::attention_matrix(tape, qc.emb, out.b_emb, qc.enc->mask, b.mask);
  Tensor<R> hm = ops::conv_grid(tape, out.m, qc.enc->mask, b.mask, P.grid);
  out.r = ops::concat(tape, {qc.h1, h2, ops::sub(tape, qc.h1, h2),
                             ops::mul(tape, qc.h1, h2), hm});
  return out;
}

// Bag-to-query coverage: c_q[j] = max over questions and their valid words of
// M^i[j][b]; masked query positions stay zero.
template <class R>
Tensor<R> bag_to_query_coverage(Tape<R>* tape, const std::vector<Tensor<R>>& ms,
                                const ops::Mask& qmask,
                                const std::vector<const ops::Mask*>& bmasks) {
  if (ms.empty()) throw DegenerateInputError("coverage: empty bag");
  const int l = ms[0].dim(0);
  bool any_grad = false;
  for (const auto& m : ms) any_grad = any_grad || m.requires_grad();
  const bool rec = ops::wants_grad(tape, any_grad);
  Tensor<R> out = Tensor<R>::zeros({l}, rec);
  auto arg = std::make_shared<std::vector<std::pair<int, int>>>(size_t(l),
                                                                std::pair<int, int>{-1, -1});
  for (int j = 0; j < l; ++j) {
    if (!qmask[size_t(j)]) continue;
    R best = R(0);
    std::pair<int, int> where{-1, -1};
    for (size_t i = 0; i < ms.size(); ++i) {
      const int lb = ms[i].dim(1);
      for (int b = 0; b < lb; ++b) {
        if (!(*bmasks[i])[size_t(b)]) continue;
        const R v = ms[i].data()[j * lb + b];
        if (where.first < 0 || v > best) {
          best = v;
          where = {int(i), b};
        }
      }
    }
    out.data()[j] = where.first < 0 ? R(0) : best;
    (*arg)[size_t(j)] = where;
  }
  if (rec) {
    tape->record([ms, out, arg, l]() {
      for (int j = 0; j < l; ++j) {
        const auto [i, b] = (*arg)[size_t(j)];
        if (i < 0) continue;
        if (!ms[size_t(i)].requires_grad()) continue;
        ms[size_t(i)].grad()[j * ms[size_t(i)].dim(1) + b] += out.grad()[j];
      }
    });
  }
  return out;
}

// Query-to-bag coverage: per question i, c'_i[b] = max over valid query words
// of M^i[a][b]; blocks are concatenated in bag order and padded to `slots`.
template <class R>
Tensor<R> query_to_bag_coverage(Tape<R>* tape, const std::vector<Tensor<R>>& ms,
                                const ops::Mask& qmask,
                                const std::vector<const ops::Mask*>& bmasks,
                                int slots) {
  if (ms.empty()) throw DegenerateInputError("coverage: empty bag");
  const int l = ms[0].dim(1);
  bool any_grad = false;
  for (const auto& m : ms) any_grad = any_grad || m.requires_grad();
  const bool rec = ops::wants_grad(tape, any_grad);
  Tensor<R> out = Tensor<R>::zeros({slots * l}, rec);
  auto arg = std::make_shared<std::vector<int>>(size_t(slots) * l, -1);
  for (size_t i = 0; i < ms.size(); ++i) {
    const int lq = ms[i].dim(0);
    for (int b = 0; b < l; ++b) {
      if (!(*bmasks[i])[size_t(b)]) continue;
      R best = R(0);
      int where = -1;
      for (int a = 0; a < lq; ++a) {
        if (!qmask[size_t(a)]) continue;
        const R v = ms[i].data()[a * l + b];
        if (where < 0 || v > best) {
          best = v;
          where = a;
        }
      }
      out.data()[int(i) * l + b] = where < 0 ? R(0) : best;
      (*arg)[size_t(i) * l + size_t(b)] = where;
    }
  }
  if (rec) {
    tape->record([ms, out, arg, l]() {
      for (size_t i = 0; i < ms.size(); ++i) {
        if (!ms[i].requires_grad()) continue;
        for (int b = 0; b < l; ++b) {
          const int a = (*arg)[i * size_t(l) + size_t(b)];
          if (a < 0) continue;
          ms[i].grad()[a * l + b] += out.grad()[int(i) * l + b];
        }
      }
    });
  }
  return out;
}

template <class R>
struct WeightedCoverage {
  Tensor<R> weighted;  // attention * coverage, same length as the token axis
  Tensor<R> total;     // scalar sum
};

// Raw per-token weights from the coverage MLP, one scalar per row of `emb`.
template <class R>
Tensor<R> coverage_logits(Tape<R>* tape, ModelParams<R>& P, const Tensor<R>& emb) {
  Tensor<R> h = ops::relu(
      tape, ops::add_rowwise(tape, ops::matmul(tape, emb, P.cov_w1), P.cov_b1));
  Tensor<R> e = ops::add_rowwise(tape, ops::matmul(tape, h, P.cov_w2), P.cov_b2);
  return ops::concat(tape, {e});  // [N x 1] -> [N]
}

// Coverage weighting: softmax the per-token weights over valid positions and
// scale the coverage vector elementwise; also returns the scalar sum.
template <class R>
WeightedCoverage<R> coverage_weighting(Tape<R>* tape, ModelParams<R>& P,
                                       const Tensor<R>& emb, const ops::Mask& mask,
                                       const Tensor<R>& coverage) {
  WeightedCoverage<R> out;
  Tensor<R> e = coverage_logits(tape, P, emb);
  Tensor<R> attn = ops::masked_softmax(tape, e, mask);
  out.weighted = ops::mul(tape, attn, coverage);
  out.total = ops::sum_all(tape, out.weighted);
  return out;
}

}  // namespace qbm
