#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qbm/error.hpp"
#include "qbm/kernels.hpp"
#include "qbm/rng.hpp"
#include "qbm/tensor.hpp"

// Differentiable operations. Every op computes its forward result eagerly and,
// when a tape is supplied and some input requires gradients, records a closure
// that adds its contribution into the inputs' grad buffers. Gradients therefore
// accumulate additively when a tensor is used more than once.
namespace qbm::ops {

using Mask = std::vector<uint8_t>;

template <class R>
bool wants_grad(Tape<R>* tape, bool any_input_grad) {
  return tape != nullptr && any_input_grad;
}

inline int mask_count(const Mask& m) {
  int c = 0;
  for (uint8_t v : m) c += v ? 1 : 0;
  return c;
}

// Order-canonical summation: sorting the addends makes reductions over a bag
// independent of question order, so permutation invariance holds bit-exactly.
template <class R>
R canonical_sum(std::vector<R>& terms) {
  std::sort(terms.begin(), terms.end());
  R acc = R(0);
  for (R t : terms) acc += t;
  return acc;
}

// --- matmul -----------------------------------------------------------------

template <class R>
Tensor<R> matmul(Tape<R>* tape, const Tensor<R>& a, const Tensor<R>& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const bool rec = wants_grad(tape, a.requires_grad() || b.requires_grad());
  Tensor<R> out = Tensor<R>::zeros({m, n}, rec);
  kernels::matmul(a.data(), b.data(), out.data(), m, k, n);
  if (rec) {
    tape->record([a, b, out, m, k, n]() {
      if (a.requires_grad()) {
        kernels::matmul_acc_nt(out.grad(), b.data(), a.grad(), m, k, n);
      }
      if (b.requires_grad()) {
        kernels::matmul_acc_tn(a.data(), out.grad(), b.grad(), m, k, n);
      }
    });
  }
  return out;
}

// --- elementwise ------------------------------------------------------------

template <class R>
void check_same_shape(const Tensor<R>& a, const Tensor<R>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <class R>
Tensor<R> add(Tape<R>* tape, const Tensor<R>& a, const Tensor<R>& b) {
  check_same_shape(a, b, "add");
  const bool rec = wants_grad(tape, a.requires_grad() || b.requires_grad());
  Tensor<R> out = Tensor<R>::zeros(a.shape(), rec);
  for (size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (rec) {
    tape->record([a, b, out]() {
      if (a.requires_grad()) {
        for (size_t i = 0; i < out.numel(); ++i) a.grad()[i] += out.grad()[i];
      }
      if (b.requires_grad()) {
        for (size_t i = 0; i < out.numel(); ++i) b.grad()[i] += out.grad()[i];
      }
    });
  }
  return out;
}

template <class R>
Tensor<R> sub(Tape<R>* tape, const Tensor<R>& a, const Tensor<R>& b) {
  check_same_shape(a, b, "sub");
  const bool rec = wants_grad(tape, a.requires_grad() || b.requires_grad());
  Tensor<R> out = Tensor<R>::zeros(a.shape(), rec);
  for (size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  if (rec) {
    tape->record([a, b, out]() {
      if (a.requires_grad()) {
        for (size_t i = 0; i < out.numel(); ++i) a.grad()[i] += out.grad()[i];
      }
      if (b.requires_grad()) {
        for (size_t i = 0; i < out.numel(); ++i) b.grad()[i] -= out.grad()[i];
      }
    });
  }
  return out;
}

template <class R>
Tensor<R> mul(Tape<R>* tape, const Tensor<R>& a, const Tensor<R>& b) {
  check_same_shape(a, b, "mul");
  const bool rec = wants_grad(tape, a.requires_grad() || b.requires_grad());
  Tensor<R> out = Tensor<R>::zeros(a.shape(), rec);
  for (size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (rec) {
    tape->record([a, b, out]() {
      if (a.requires_grad()) {
        for (size_t i = 0; i < out.numel(); ++i) a.grad()[i] += out.grad()[i] * b.data()[i];
      }
      if (b.requires_grad()) {
        for (size_t i = 0; i < out.numel(); ++i) b.grad()[i] += out.grad()[i] * a.data()[i];
      }
    });
  }
  return out;
}

template <class R>
Tensor<R> relu(Tape<R>* tape, const Tensor<R>& x) {
  const bool rec = wants_grad(tape, x.requires_grad());
  Tensor<R> out = Tensor<R>::zeros(x.shape(), rec);
  for (size_t i = 0; i < out.numel(); ++i) {
    out.data()[i] = x.data()[i] > R(0) ? x.data()[i] : R(0);
  }
  if (rec) {
    tape->record([x, out]() {
      for (size_t i = 0; i < out.numel(); ++i) {
        if (out.data()[i] > R(0)) x.grad()[i] += out.grad()[i];
      }
    });
  }
  return out;
}

// bias[F] added to each row of x[N x F]
template <class R>
Tensor<R> add_rowwise(Tape<R>* tape, const Tensor<R>& x, const Tensor<R>& bias) {
  if (x.ndim() != 2 || bias.ndim() != 1 || x.dim(1) != bias.dim(0)) {
    throw ShapeError("add_rowwise: " + shape_str(x.shape()) + " vs bias " +
                     shape_str(bias.shape()));
  }
  const int n = x.dim(0), f = x.dim(1);
  const bool rec = wants_grad(tape, x.requires_grad() || bias.requires_grad());
  Tensor<R> out = Tensor<R>::zeros(x.shape(), rec);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) out.data()[i * f + j] = x.data()[i * f + j] + bias.data()[j];
  }
  if (rec) {
    tape->record([x, bias, out, n, f]() {
      if (x.requires_grad()) {
        for (size_t i = 0; i < out.numel(); ++i) x.grad()[i] += out.grad()[i];
      }
      if (bias.requires_grad()) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < f; ++j) bias.grad()[j] += out.grad()[i * f + j];
        }
      }
    });
  }
  return out;
}

// --- joins ------------------------------------------------------------------

// Concatenation of the inputs' flattened values into one vector.
template <class R>
Tensor<R> concat(Tape<R>* tape, const std::vector<Tensor<R>>& parts) {
  size_t total = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    total += p.numel();
    any_grad = any_grad || p.requires_grad();
  }
  const bool rec = wants_grad(tape, any_grad);
  Tensor<R> out = Tensor<R>::zeros({int(total)}, rec);
  size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data(), p.data() + p.numel(), out.data() + off);
    off += p.numel();
  }
  if (rec) {
    tape->record([parts, out]() {
      size_t o = 0;
      for (const auto& p : parts) {
        if (p.requires_grad()) {
          for (size_t i = 0; i < p.numel(); ++i) p.grad()[i] += out.grad()[o + i];
        }
        o += p.numel();
      }
    });
  }
  return out;
}

// Equal-length vectors stacked as the rows of an [N x len] matrix.
template <class R>
Tensor<R> stack_rows(Tape<R>* tape, const std::vector<Tensor<R>>& rows) {
  if (rows.empty()) throw DegenerateInputError("stack_rows: no rows");
  const size_t len = rows[0].numel();
  bool any_grad = false;
  for (const auto& r : rows) {
    if (r.numel() != len) throw ShapeError("stack_rows: ragged rows");
    any_grad = any_grad || r.requires_grad();
  }
  const bool rec = wants_grad(tape, any_grad);
  Tensor<R> out = Tensor<R>::zeros({int(rows.size()), int(len)}, rec);
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].data(), rows[i].data() + len, out.data() + i * len);
  }
  if (rec) {
    tape->record([rows, out, len]() {
      for (size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].requires_grad()) continue;
        for (size_t j = 0; j < len; ++j) rows[i].grad()[j] += out.grad()[i * len + j];
      }
    });
  }
  return out;
}

// Same values under a new shape (copied storage, pass-through gradient).
template <class R>
Tensor<R> reshape_copy(Tape<R>* tape, const Tensor<R>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " cannot become " +
                     shape_str(shape));
  }
  const bool rec = wants_grad(tape, x.requires_grad());
  Tensor<R> out = Tensor<R>::zeros(std::move(shape), rec);
  std::copy(x.data(), x.data() + x.numel(), out.data());
  if (rec) {
    tape->record([x, out]() {
      for (size_t i = 0; i < out.numel(); ++i) x.grad()[i] += out.grad()[i];
    });
  }
  return out;
}

template <class R>
Tensor<R> sum_all(Tape<R>* tape, const Tensor<R>& x) {
  const bool rec = wants_grad(tape, x.requires_grad());
  std::vector<R> terms(x.data(), x.data() + x.numel());
  Tensor<R> out = Tensor<R>::from({1}, {canonical_sum(terms)}, rec);
  if (rec) {
    tape->record([x, out]() {
      const R g = out.grad()[0];
      for (size_t i = 0; i < x.numel(); ++i) x.grad()[i] += g;
    });
  }
  return out;
}

// --- embedding lookup ---------------------------------------------------------

// Gathers table rows for the id sequence; masked positions produce zero rows
// and receive no gradient. Row 0 of the table (PAD) is never written back to.
template <class R>
Tensor<R> embedding_lookup(Tape<R>* tape, const Tensor<R>& table,
                           const std::vector<int>& ids, const Mask& mask) {
  if (table.ndim() != 2) {
    throw ShapeError("embedding_lookup: table must be 2-D, got " +
                     shape_str(table.shape()));
  }
  if (ids.size() != mask.size()) {
    throw ShapeError("embedding_lookup: ids/mask length mismatch");
  }
  const int v = table.dim(0), d = table.dim(1);
  const int l = int(ids.size());
  const bool rec = wants_grad(tape, table.requires_grad());
  Tensor<R> out = Tensor<R>::zeros({l, d}, rec);
  for (int p = 0; p < l; ++p) {
    if (!mask[size_t(p)]) continue;
    const int id = ids[size_t(p)];
    if (id < 0 || id >= v) {
      throw Error("embedding_lookup: id " + std::to_string(id) +
                  " outside table of " + std::to_string(v) + " rows");
    }
    std::copy(table.data() + size_t(id) * d, table.data() + size_t(id + 1) * d,
              out.data() + size_t(p) * d);
  }
  if (rec) {
    tape->record([table, out, ids, mask, d]() {
      for (size_t p = 0; p < ids.size(); ++p) {
        if (!mask[p] || ids[p] == 0) continue;
        R* trow = table.grad() + size_t(ids[p]) * d;
        const R* orow = out.grad() + p * size_t(d);
        for (int t = 0; t < d; ++t) trow[t] += orow[t];
      }
    });
  }
  return out;
}

// --- cross-attention ----------------------------------------------------------

// M[a][b] = dot(qe[a], be[b]) over valid positions; masked cells are zero.
template <class R>
Tensor<R> attention_matrix(Tape<R>* tape, const Tensor<R>& qe,
                           const Tensor<R>& be, const Mask& qmask,
                           const Mask& bmask) {
  if (qe.ndim() != 2 || be.ndim() != 2 || qe.dim(1) != be.dim(1)) {
    throw ShapeError("attention_matrix: embedding dims disagree, " +
                     shape_str(qe.shape()) + " vs " + shape_str(be.shape()));
  }
  const int lq = qe.dim(0), lb = be.dim(0), d = qe.dim(1);
  if (int(qmask.size()) != lq || int(bmask.size()) != lb) {
    throw ShapeError("attention_matrix: mask length mismatch");
  }
  const bool rec = wants_grad(tape, qe.requires_grad() || be.requires_grad());
  Tensor<R> out = Tensor<R>::zeros({lq, lb}, rec);
  kernels::attention(qe.data(), be.data(), qmask.data(), bmask.data(),
                     out.data(), lq, lb, d);
  if (rec) {
    tape->record([qe, be, out, qmask, bmask, lq, lb, d]() {
      if (qe.requires_grad()) {
        kernels::attention_bwd_q(be.data(), qmask.data(), bmask.data(),
                                 out.grad(), qe.grad(), lq, lb, d);
      }
      if (be.requires_grad()) {
        kernels::attention_bwd_b(qe.data(), qmask.data(), bmask.data(),
                                 out.grad(), be.grad(), lq, lb, d);
      }
    });
  }
  return out;
}

// --- text convolution ---------------------------------------------------------

template <class R>
Tensor<R> conv_text(Tape<R>* tape, const Tensor<R>& x, const Tensor<R>& kern,
                    const Tensor<R>& bias, const Mask& mask) {
  if (kern.ndim() != 3) {
    throw ShapeError("conv_text: kernels must be [F x w x D], got " +
                     shape_str(kern.shape()));
  }
  const int f = kern.dim(0), w = kern.dim(1), d = kern.dim(2);
  if (w % 2 == 0) {
    throw ConfigError("conv_text: kernel width must be odd, got " +
                      std::to_string(w));
  }
  if (x.ndim() != 2 || x.dim(1) != d) {
    throw ShapeError("conv_text: input " + shape_str(x.shape()) +
                     " does not match kernel depth " + std::to_string(d));
  }
  if (bias.numel() != size_t(f)) throw ShapeError("conv_text: bias length mismatch");
  const int l = x.dim(0);
  if (int(mask.size()) != l) throw ShapeError("conv_text: mask length mismatch");
  const bool rec = wants_grad(tape, x.requires_grad() || kern.requires_grad() ||
                                        bias.requires_grad());
  Tensor<R> out = Tensor<R>::zeros({l, f}, rec);
  kernels::conv_text(x.data(), kern.data(), bias.data(), mask.data(),
                     out.data(), l, d, f, w);
  if (rec) {
    tape->record([x, kern, bias, out, mask, l, d, f, w]() {
      if (x.requires_grad()) {
        kernels::conv_text_bwd_x(kern.data(), mask.data(), out.data(),
                                 out.grad(), x.grad(), l, d, f, w);
      }
      if (kern.requires_grad() || bias.requires_grad()) {
        kernels::conv_text_bwd_k(x.data(), mask.data(), out.data(), out.grad(),
                                 kern.grad(),
                                 bias.requires_grad() ? bias.grad() : nullptr,
                                 l, d, f, w);
      }
    });
  }
  return out;
}

// --- grid convolution ---------------------------------------------------------

template <class R>
struct GridStage {
  Tensor<R> kernels;  // [F x C x k x k]
  Tensor<R> bias;     // [F]
};

template <class R>
Tensor<R> conv2d_relu(Tape<R>* tape, const Tensor<R>& x, const Tensor<R>& kern,
                      const Tensor<R>& bias) {
  if (x.ndim() != 3 || kern.ndim() != 4 || kern.dim(1) != x.dim(0)) {
    throw ShapeError("conv2d: input " + shape_str(x.shape()) +
                     " vs kernels " + shape_str(kern.shape()));
  }
  const int ch = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int f = kern.dim(0), kh = kern.dim(2), kw = kern.dim(3);
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ConfigError("conv2d: kernel sides must be odd");
  }
  const bool rec = wants_grad(tape, x.requires_grad() || kern.requires_grad() ||
                                        bias.requires_grad());
  Tensor<R> out = Tensor<R>::zeros({f, h, w}, rec);
  kernels::conv2d_relu(x.data(), kern.data(), bias.data(), out.data(), ch, h,
                       w, f, kh, kw);
  if (rec) {
    tape->record([x, kern, bias, out, ch, h, w, f, kh, kw]() {
      if (x.requires_grad()) {
        kernels::conv2d_relu_bwd_x(kern.data(), out.data(), out.grad(),
                                   x.grad(), ch, h, w, f, kh, kw);
      }
      if (kern.requires_grad() || bias.requires_grad()) {
        kernels::conv2d_relu_bwd_k(x.data(), out.data(), out.grad(),
                                   kern.grad(),
                                   bias.requires_grad() ? bias.grad() : nullptr,
                                   ch, h, w, f, kh, kw);
      }
    });
  }
  return out;
}

template <class R>
Tensor<R> maxpool2(Tape<R>* tape, const Tensor<R>& x) {
  if (x.ndim() != 3) throw ShapeError("maxpool2: expects [C x H x W]");
  const int ch = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int ho = (h + 1) / 2, wo = (w + 1) / 2;
  const bool rec = wants_grad(tape, x.requires_grad());
  Tensor<R> out = Tensor<R>::zeros({ch, ho, wo}, rec);
  auto argmax = std::make_shared<std::vector<int>>(size_t(ch) * ho * wo);
  kernels::maxpool2(x.data(), out.data(), argmax->data(), ch, h, w);
  if (rec) {
    tape->record([x, out, argmax, ch, h, w]() {
      kernels::maxpool2_bwd(out.grad(), argmax->data(), x.grad(), ch, h, w);
    });
  }
  return out;
}

// Zeroes the cells of a square interaction matrix whose row or column is
// masked out, then runs the configured conv+pool stages and flattens the
// final maps in storage (row-major) order.
template <class R>
Tensor<R> conv_grid(Tape<R>* tape, const Tensor<R>& m, const Mask& row_mask,
                    const Mask& col_mask, const std::vector<GridStage<R>>& stages) {
  if (m.ndim() != 2 || m.dim(0) != m.dim(1)) {
    throw ShapeError("conv_grid: input must be square, got " +
                     shape_str(m.shape()));
  }
  const int l = m.dim(0);
  if (int(row_mask.size()) != l || int(col_mask.size()) != l) {
    throw ShapeError("conv_grid: mask length mismatch");
  }
  if (stages.empty()) throw ConfigError("conv_grid: no stages configured");
  const bool rec = wants_grad(tape, m.requires_grad());
  Tensor<R> x = Tensor<R>::zeros({1, l, l}, rec);
  for (int i = 0; i < l; ++i) {
    if (!row_mask[size_t(i)]) continue;
    for (int j = 0; j < l; ++j) {
      if (col_mask[size_t(j)]) x.data()[i * l + j] = m.data()[i * l + j];
    }
  }
  if (rec) {
    tape->record([m, x, row_mask, col_mask, l]() {
      for (int i = 0; i < l; ++i) {
        if (!row_mask[size_t(i)]) continue;
        for (int j = 0; j < l; ++j) {
          if (col_mask[size_t(j)]) m.grad()[i * l + j] += x.grad()[i * l + j];
        }
      }
    });
  }
  Tensor<R> cur = x;
  for (const auto& st : stages) {
    cur = maxpool2(tape, conv2d_relu(tape, cur, st.kernels, st.bias));
  }
  // flatten
  const bool frec = wants_grad(tape, cur.requires_grad());
  Tensor<R> flat = Tensor<R>::zeros({int(cur.numel())}, frec);
  std::copy(cur.data(), cur.data() + cur.numel(), flat.data());
  if (frec) {
    tape->record([cur, flat]() {
      for (size_t i = 0; i < flat.numel(); ++i) cur.grad()[i] += flat.grad()[i];
    });
  }
  return flat;
}

// --- masked pooling -------------------------------------------------------

template <class R>
Tensor<R> masked_max_pool(Tape<R>* tape, const Tensor<R>& x, const Mask& mask) {
  if (x.ndim() != 2) throw ShapeError("masked_max_pool: expects [N x F]");
  const int n = x.dim(0), f = x.dim(1);
  if (int(mask.size()) != n) throw ShapeError("masked_max_pool: mask length mismatch");
  if (mask_count(mask) == 0) {
    throw DegenerateInputError("masked_max_pool: all positions masked");
  }
  const bool rec = wants_grad(tape, x.requires_grad());
  Tensor<R> out = Tensor<R>::zeros({f}, rec);
  auto argmax = std::make_shared<std::vector<int>>(size_t(f), -1);
  for (int j = 0; j < f; ++j) {
    int best = -1;
    R bv = R(0);
    for (int i = 0; i < n; ++i) {
      if (!mask[size_t(i)]) continue;
      if (best < 0 || x.data()[i * f + j] > bv) {
        best = i;
        bv = x.data()[i * f + j];
      }
    }
    out.data()[j] = bv;
    (*argmax)[size_t(j)] = best;
  }
  if (rec) {
    tape->record([x, out, argmax, f]() {
      for (int j = 0; j < f; ++j) {
        x.grad()[(*argmax)[size_t(j)] * f + j] += out.grad()[j];
      }
    });
  }
  return out;
}

template <class R>
Tensor<R> masked_mean_pool(Tape<R>* tape, const Tensor<R>& x, const Mask& mask) {
  if (x.ndim() != 2) throw ShapeError("masked_mean_pool: expects [N x F]");
  const int n = x.dim(0), f = x.dim(1);
  if (int(mask.size()) != n) throw ShapeError("masked_mean_pool: mask length mismatch");
  const int cnt = mask_count(mask);
  if (cnt == 0) {
    throw DegenerateInputError("masked_mean_pool: all positions masked");
  }
  const bool rec = wants_grad(tape, x.requires_grad());
  Tensor<R> out = Tensor<R>::zeros({f}, rec);
  std::vector<R> column;
  for (int j = 0; j < f; ++j) {
    column.clear();
    for (int i = 0; i < n; ++i) {
      if (mask[size_t(i)]) column.push_back(x.data()[i * f + j]);
    }
    out.data()[j] = canonical_sum(column) / R(cnt);
  }
  if (rec) {
    tape->record([x, out, mask, n, f, cnt]() {
      for (int j = 0; j < f; ++j) {
        const R g = out.grad()[j] / R(cnt);
        for (int i = 0; i < n; ++i) {
          if (mask[size_t(i)]) x.grad()[i * f + j] += g;
        }
      }
    });
  }
  return out;
}

// --- masked softmax ---------------------------------------------------------

template <class R>
Tensor<R> masked_softmax(Tape<R>* tape, const Tensor<R>& logits, const Mask& mask) {
  if (logits.numel() != mask.size()) {
    throw ShapeError("masked_softmax: logits/mask length mismatch");
  }
  const int n = int(mask.size());
  if (mask_count(mask) == 0) {
    throw DegenerateInputError("masked_softmax: all positions masked");
  }
  R mx = R(0);
  bool first = true;
  for (int i = 0; i < n; ++i) {
    if (!mask[size_t(i)]) continue;
    if (first || logits.data()[i] > mx) mx = logits.data()[i];
    first = false;
  }
  const bool rec = wants_grad(tape, logits.requires_grad());
  Tensor<R> out = Tensor<R>::zeros(logits.shape(), rec);
  std::vector<R> terms;
  for (int i = 0; i < n; ++i) {
    if (!mask[size_t(i)]) continue;
    out.data()[i] = std::exp(logits.data()[i] - mx);
    terms.push_back(out.data()[i]);
  }
  const R z = canonical_sum(terms);
  for (int i = 0; i < n; ++i) {
    if (mask[size_t(i)]) out.data()[i] /= z;
  }
  if (rec) {
    tape->record([logits, out, mask, n]() {
      R dot = R(0);
      for (int i = 0; i < n; ++i) {
        if (mask[size_t(i)]) dot += out.grad()[i] * out.data()[i];
      }
      for (int i = 0; i < n; ++i) {
        if (mask[size_t(i)]) {
          logits.grad()[i] += out.data()[i] * (out.grad()[i] - dot);
        }
      }
    });
  }
  return out;
}

// --- dropout ------------------------------------------------------------------

// Inverted dropout: survivors are scaled by 1/(1-rate) so that evaluation is
// the identity. The rng is consumed one draw per element in training mode.
template <class R>
Tensor<R> dropout(Tape<R>* tape, const Tensor<R>& x, double rate, bool training,
                  Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout: rate must be in [0, 1), got " +
                      std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const R scale = R(1.0 / (1.0 - rate));
  auto keep = std::make_shared<std::vector<uint8_t>>(x.numel());
  for (size_t i = 0; i < x.numel(); ++i) (*keep)[i] = rng.uniform() >= rate;
  const bool rec = wants_grad(tape, x.requires_grad());
  Tensor<R> out = Tensor<R>::zeros(x.shape(), rec);
  for (size_t i = 0; i < x.numel(); ++i) {
    out.data()[i] = (*keep)[i] ? x.data()[i] * scale : R(0);
  }
  if (rec) {
    tape->record([x, out, keep, scale]() {
      for (size_t i = 0; i < out.numel(); ++i) {
        if ((*keep)[i]) x.grad()[i] += out.grad()[i] * scale;
      }
    });
  }
  return out;
}

// --- cross entropy --------------------------------------------------------------

// Mean over the batch of -log softmax(logits)[label], two classes.
template <class R>
Tensor<R> cross_entropy(Tape<R>* tape, const Tensor<R>& logits,
                        const std::vector<int>& labels) {
  if (logits.ndim() != 2 || logits.dim(1) != 2) {
    throw ShapeError("cross_entropy: logits must be [B x 2], got " +
                     shape_str(logits.shape()));
  }
  const int b = logits.dim(0);
  if (int(labels.size()) != b) {
    throw ShapeError("cross_entropy: batch/labels length mismatch");
  }
  for (int lab : labels) {
    if (lab != 0 && lab != 1) {
      throw Error("cross_entropy: label " + std::to_string(lab) +
                  " outside {0,1}");
    }
  }
  auto probs = std::make_shared<std::vector<R>>(size_t(b) * 2);
  R total = R(0);
  for (int i = 0; i < b; ++i) {
    const R l0 = logits.data()[i * 2], l1 = logits.data()[i * 2 + 1];
    const R mx = std::max(l0, l1);
    const R z = std::exp(l0 - mx) + std::exp(l1 - mx);
    (*probs)[size_t(i) * 2] = std::exp(l0 - mx) / z;
    (*probs)[size_t(i) * 2 + 1] = std::exp(l1 - mx) / z;
    R p = (*probs)[size_t(i) * 2 + size_t(labels[size_t(i)])];
    p = std::clamp(p, R(1e-12), R(1));
    total += -std::log(p);
  }
  const bool rec = wants_grad(tape, logits.requires_grad());
  Tensor<R> out = Tensor<R>::from({1}, {total / R(b)}, rec);
  if (rec) {
    tape->record([logits, out, probs, labels, b]() {
      const R g = out.grad()[0] / R(b);
      for (int i = 0; i < b; ++i) {
        for (int c = 0; c < 2; ++c) {
          const R y = labels[size_t(i)] == c ? R(1) : R(0);
          logits.grad()[i * 2 + c] += g * ((*probs)[size_t(i) * 2 + size_t(c)] - y);
        }
      }
    });
  }
  return out;
}

}  // namespace qbm::ops
