#include "qbm/grad_suite.hpp"

#include <algorithm>
#include <cmath>

#include "qbm/adam.hpp"
#include "qbm/forward.hpp"
#include "qbm/grad_check.hpp"
#include "qbm/prep.hpp"

namespace qbm {

namespace {

// Random values in [-1, 1] nudged at least `margin` away from zero so ReLU
// and probability clamps are never probed at their kinks.
Tensor<double> random_tensor(Shape shape, Rng& rng, double margin = 0.0) {
  Tensor<double> t = Tensor<double>::zeros(std::move(shape), true);
  for (size_t i = 0; i < t.numel(); ++i) {
    double v = rng.uniform(-1.0, 1.0);
    if (margin > 0.0 && std::abs(v) < margin) {
      v = v < 0.0 ? v - margin : v + margin;
    }
    t.data()[i] = v;
  }
  return t;
}

ops::Mask random_mask(int n, Rng& rng) {
  ops::Mask mask(size_t(n), 0);
  int valid = 0;
  for (int i = 0; i < n; ++i) {
    mask[size_t(i)] = rng.uniform() < 0.7;
    valid += mask[size_t(i)];
  }
  if (valid == 0) mask[size_t(rng.below(uint64_t(n)))] = 1;
  return mask;
}

double check_matmul(Rng rng) {
  Tensor<double> a = random_tensor({3, 4}, rng);
  Tensor<double> b = random_tensor({4, 2}, rng);
  return grad_check(
      [&](Tape<double>& tape) {
        return ops::sum_all(&tape, ops::matmul(&tape, a, b));
      },
      {a, b});
}

double check_relu(Rng rng) {
  Tensor<double> x = random_tensor({11}, rng, 0.05);
  return grad_check(
      [&](Tape<double>& tape) { return ops::sum_all(&tape, ops::relu(&tape, x)); },
      {x});
}

double check_conv_text(Rng rng) {
  const int l = 6, d = 8, f = 4, w = 3;
  Tensor<double> x = random_tensor({l, d}, rng);
  Tensor<double> k = random_tensor({f, w, d}, rng);
  Tensor<double> bias = random_tensor({f}, rng);
  const ops::Mask mask = random_mask(l, rng);
  return grad_check(
      [&](Tape<double>& tape) {
        return ops::sum_all(&tape, ops::conv_text(&tape, x, k, bias, mask));
      },
      {x, k, bias});
}

double check_conv_grid(Rng rng) {
  const int l = 6;
  Tensor<double> m = random_tensor({l, l}, rng);
  std::vector<ops::GridStage<double>> stages;
  stages.push_back({random_tensor({2, 1, 3, 3}, rng), random_tensor({2}, rng)});
  stages.push_back({random_tensor({2, 2, 3, 3}, rng), random_tensor({2}, rng)});
  const ops::Mask rmask = random_mask(l, rng);
  const ops::Mask cmask = random_mask(l, rng);
  std::vector<Tensor<double>> leaves{m, stages[0].kernels, stages[0].bias,
                                     stages[1].kernels, stages[1].bias};
  return grad_check(
      [&](Tape<double>& tape) {
        return ops::sum_all(&tape, ops::conv_grid(&tape, m, rmask, cmask, stages));
      },
      leaves);
}

double check_masked_max_pool(Rng rng) {
  Tensor<double> x = random_tensor({7, 3}, rng);
  const ops::Mask mask = random_mask(7, rng);
  return grad_check(
      [&](Tape<double>& tape) {
        return ops::sum_all(&tape, ops::masked_max_pool(&tape, x, mask));
      },
      {x});
}

double check_masked_mean_pool(Rng rng) {
  Tensor<double> x = random_tensor({7, 3}, rng);
  const ops::Mask mask = random_mask(7, rng);
  return grad_check(
      [&](Tape<double>& tape) {
        return ops::sum_all(&tape, ops::masked_mean_pool(&tape, x, mask));
      },
      {x});
}

double check_masked_softmax(Rng rng) {
  Tensor<double> x = random_tensor({9}, rng);
  Tensor<double> c = random_tensor({9}, rng);
  const ops::Mask mask = random_mask(9, rng);
  // through a weighted sum so each output position matters differently
  return grad_check(
      [&](Tape<double>& tape) {
        return ops::sum_all(
            &tape, ops::mul(&tape, ops::masked_softmax(&tape, x, mask), c));
      },
      {x});
}

double check_dropout(Rng rng) {
  Tensor<double> x = random_tensor({24}, rng);
  const uint64_t mask_seed = rng.next_u64();
  return grad_check(
      [&](Tape<double>& tape) {
        Rng mask_rng(mask_seed);  // same survivors on every re-evaluation
        return ops::sum_all(&tape, ops::dropout(&tape, x, 0.5, true, mask_rng));
      },
      {x});
}

double check_cross_entropy(Rng rng) {
  Tensor<double> logits = random_tensor({4, 2}, rng);
  std::vector<int> labels;
  for (int i = 0; i < 4; ++i) labels.push_back(int(rng.below(2)));
  return grad_check(
      [&](Tape<double>& tape) {
        return ops::cross_entropy(&tape, logits, labels);
      },
      {logits});
}

double check_attention(Rng rng) {
  Tensor<double> qe = random_tensor({4, 8}, rng);
  Tensor<double> be = random_tensor({3, 8}, rng);
  Tensor<double> c = random_tensor({4, 3}, rng);
  const ops::Mask qmask = random_mask(4, rng);
  const ops::Mask bmask = random_mask(3, rng);
  return grad_check(
      [&](Tape<double>& tape) {
        return ops::sum_all(
            &tape,
            ops::mul(&tape, ops::attention_matrix(&tape, qe, be, qmask, bmask), c));
      },
      {qe, be});
}

double check_adam_trace() {
  // Three steps on a scalar parameter with constant gradient 1, traced by the
  // textbook recurrence written out step by step.
  Tensor<double> x = Tensor<double>::scalar(0.5, true);
  std::vector<Tensor<double>> params{x};
  AdamState<double> st = AdamState<double>::init(params, 0.1);
  double expect = 0.5;
  double max_err = 0.0;
  double m = 0.0, v = 0.0;
  for (int t = 1; t <= 3; ++t) {
    x.zero_grad();
    x.grad()[0] = 1.0;
    adam_step(params, st);
    m = 0.9 * m + 0.1 * 1.0;
    v = 0.999 * v + 0.001 * 1.0;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    expect -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
    max_err = std::max(max_err, std::abs(x.data()[0] - expect));
  }
  return max_err;
}

struct SmallModel {
  ModelParams<double> params;
  PreparedRecord record;
};

SmallModel build_small_model(const ModelConfig& cfg, Rng& rng) {
  const std::vector<std::string> corpus = {
      "where is my refund",  "refund status check",   "how refund works",
      "cancel my order now", "shipping time estimate", "track package status"};
  Vocabulary vocab = Vocabulary::build(corpus, 1);
  Stopwords sw = Stopwords::builtin();
  Preprocessor prep(vocab, sw, cfg);
  prep.fit(corpus);

  SmallModel sm{ModelParams<double>::init(cfg, vocab.size(), rng),
                prep.record("where is my refund",
                            {"refund status check", "how refund works"}, 1, 0)};
  // Random parameters everywhere (including the zero-initialized coverage
  // output layer) so every path carries gradient; PAD row stays zero.
  for (auto& t : sm.params.tensors()) {
    if (t.same_storage(sm.params.embedding)) continue;
    for (size_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(-0.6, 0.6);
  }
  const int d = cfg.embed_dim;
  for (int id = 1; id < vocab.size(); ++id) {
    for (int j = 0; j < d; ++j) {
      sm.params.embedding.data()[size_t(id) * d + j] = rng.uniform(-0.7, 0.7);
    }
  }
  return sm;
}

double check_full_forward(const ModelConfig& cfg, Rng rng) {
  SmallModel sm = build_small_model(cfg, rng);
  Tensor<double> onehot = Tensor<double>::from({2}, {0.0, 1.0});
  const ops::Mask full{1, 1};
  auto forward = [&](Tape<double>& tape) {
    Tensor<double> f = instance_features<double>(&tape, sm.params, sm.record);
    Tensor<double> fm = ops::reshape_copy(&tape, f, {1, int(f.numel())});
    Rng dummy(0);
    Tensor<double> logits = head_logits(&tape, sm.params, fm, false, dummy);
    Tensor<double> lvec = ops::reshape_copy(&tape, logits, {2});
    Tensor<double> soft = ops::masked_softmax(&tape, lvec, full);
    return ops::sum_all(&tape, ops::mul(&tape, soft, onehot));
  };
  return grad_check(forward, sm.params.tensors());
}

}  // namespace

ModelConfig grad_check_config() {
  ModelConfig cfg;
  cfg.variant = Variant::qbm;
  cfg.max_len = 6;
  cfg.bag_capacity = 2;
  cfg.embed_dim = 8;
  cfg.conv1_filters = 4;
  cfg.conv1_width = 3;
  cfg.grid_stages = {{2, 3}, {2, 3}};
  cfg.cov_hidden = 4;
  cfg.head_hidden = 8;
  cfg.br_terms = 10;
  cfg.dropout = 0.0;
  return cfg;
}

std::vector<GradSuiteRow> run_grad_suite(uint64_t seed, int points) {
  const ModelConfig cfg = grad_check_config();
  Rng root(seed);
  struct Check {
    const char* name;
    double (*fn)(Rng);
  };
  const std::vector<Check> checks = {
      {"matmul", check_matmul},
      {"relu", check_relu},
      {"conv_text", check_conv_text},
      {"conv_grid", check_conv_grid},
      {"masked_max_pool", check_masked_max_pool},
      {"masked_mean_pool", check_masked_mean_pool},
      {"masked_softmax", check_masked_softmax},
      {"dropout", check_dropout},
      {"cross_entropy", check_cross_entropy},
      {"cross_attention", check_attention},
  };
  std::vector<GradSuiteRow> rows;
  uint64_t stream = 1;
  for (const auto& check : checks) {
    GradSuiteRow row{check.name, 0.0};
    for (int p = 0; p < points; ++p) {
      row.max_rel_err = std::max(row.max_rel_err, check.fn(root.derive(stream++)));
    }
    rows.push_back(row);
  }
  rows.push_back({"adam_trace", check_adam_trace()});
  GradSuiteRow full{"qbm_forward", 0.0};
  for (int p = 0; p < points; ++p) {
    full.max_rel_err = std::max(full.max_rel_err, check_full_forward(cfg, root.derive(stream++)));
  }
  rows.push_back(full);
  return rows;
}

}  // namespace qbm
