#pragma once

#include <cstdint>

namespace qbm::kernels {

// Execution mode for the heavy kernels. `ref` is the serial reference
// implementation; `parallel` runs the OpenMP versions. Both produce
// bit-identical results: every output element is accumulated in the same
// index-ascending order, the parallel versions only partition independent
// output elements across threads.
enum class Exec { serial, parallel };

Exec exec_mode();
void set_exec_mode(Exec mode);

// 0 keeps the OpenMP default thread count.
void set_num_threads(int n);
int num_threads();

// Calls below this many multiply-adds are not worth a parallel region.
inline constexpr long kParallelGrain = 1 << 15;

// ---------------------------------------------------------------------------
// Serial reference kernels
// ---------------------------------------------------------------------------
namespace ref {

// c[m x n] = a[m x k] * b[k x n]
template <class R>
void matmul(const R* a, const R* b, R* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      R acc = R(0);
      for (int t = 0; t < k; ++t) acc += a[i * k + t] * b[t * n + j];
      c[i * n + j] = acc;
    }
  }
}

// da[m x k] += g[m x n] * b^T   (db of matmul w.r.t. its left operand)
template <class R>
void matmul_acc_nt(const R* g, const R* b, R* da, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < k; ++t) {
      R acc = R(0);
      for (int j = 0; j < n; ++j) acc += g[i * n + j] * b[t * n + j];
      da[i * k + t] += acc;
    }
  }
}

// db[k x n] += a^T * g[m x n]   (grad of matmul w.r.t. its right operand)
template <class R>
void matmul_acc_tn(const R* a, const R* g, R* db, int m, int k, int n) {
  for (int t = 0; t < k; ++t) {
    for (int j = 0; j < n; ++j) {
      R acc = R(0);
      for (int i = 0; i < m; ++i) acc += a[i * k + t] * g[i * n + j];
      db[t * n + j] += acc;
    }
  }
}

// M[a][b] = dot(qe[a], be[b]) where both positions are valid, else 0.
template <class R>
void attention(const R* qe, const R* be, const unsigned char* qmask,
               const unsigned char* bmask, R* m, int lq, int lb, int d) {
  for (int a = 0; a < lq; ++a) {
    for (int b = 0; b < lb; ++b) {
      R acc = R(0);
      if (qmask[a] && bmask[b]) {
        for (int t = 0; t < d; ++t) acc += qe[a * d + t] * be[b * d + t];
      }
      m[a * lb + b] = acc;
    }
  }
}

template <class R>
void attention_bwd_q(const R* be, const unsigned char* qmask,
                     const unsigned char* bmask, const R* dm, R* dqe, int lq,
                     int lb, int d) {
  for (int a = 0; a < lq; ++a) {
    if (!qmask[a]) continue;
    for (int t = 0; t < d; ++t) {
      R acc = R(0);
      for (int b = 0; b < lb; ++b) {
        if (bmask[b]) acc += dm[a * lb + b] * be[b * d + t];
      }
      dqe[a * d + t] += acc;
    }
  }
}

template <class R>
void attention_bwd_b(const R* qe, const unsigned char* qmask,
                     const unsigned char* bmask, const R* dm, R* dbe, int lq,
                     int lb, int d) {
  for (int b = 0; b < lb; ++b) {
    if (!bmask[b]) continue;
    for (int t = 0; t < d; ++t) {
      R acc = R(0);
      for (int a = 0; a < lq; ++a) {
        if (qmask[a]) acc += dm[a * lb + b] * qe[a * d + t];
      }
      dbe[b * d + t] += acc;
    }
  }
}

// Text convolution with same-length zero padding and rectification.
// x: [L x D], k: [F x w x D], bias: [F], out: [L x F].
// Masked positions contribute zeros to windows and are zeroed in the output.
template <class R>
void conv_text(const R* x, const R* k, const R* bias,
               const unsigned char* mask, R* out, int l, int d, int f, int w) {
  const int c = w / 2;
  for (int p = 0; p < l; ++p) {
    for (int j = 0; j < f; ++j) {
      R acc = R(0);
      if (mask[p]) {
        acc = bias[j];
        for (int o = 0; o < w; ++o) {
          const int pos = p + o - c;
          if (pos < 0 || pos >= l || !mask[pos]) continue;
          const R* kr = k + (j * w + o) * d;
          const R* xr = x + pos * d;
          for (int t = 0; t < d; ++t) acc += kr[t] * xr[t];
        }
        if (acc < R(0)) acc = R(0);
      }
      out[p * f + j] = acc;
    }
  }
}

template <class R>
void conv_text_bwd_x(const R* k, const unsigned char* mask, const R* out,
                     const R* dout, R* dx, int l, int d, int f, int w) {
  const int c = w / 2;
  for (int pos = 0; pos < l; ++pos) {
    if (!mask[pos]) continue;
    for (int t = 0; t < d; ++t) {
      R acc = R(0);
      for (int o = 0; o < w; ++o) {
        const int p = pos - o + c;
        if (p < 0 || p >= l || !mask[p]) continue;
        for (int j = 0; j < f; ++j) {
          if (out[p * f + j] > R(0)) acc += dout[p * f + j] * k[(j * w + o) * d + t];
        }
      }
      dx[pos * d + t] += acc;
    }
  }
}

template <class R>
void conv_text_bwd_k(const R* x, const unsigned char* mask, const R* out,
                     const R* dout, R* dk, R* dbias, int l, int d, int f,
                     int w) {
  const int c = w / 2;
  for (int j = 0; j < f; ++j) {
    R bacc = R(0);
    for (int p = 0; p < l; ++p) {
      if (!mask[p] || out[p * f + j] <= R(0)) continue;
      const R g = dout[p * f + j];
      bacc += g;
      for (int o = 0; o < w; ++o) {
        const int pos = p + o - c;
        if (pos < 0 || pos >= l || !mask[pos]) continue;
        R* kr = dk + (j * w + o) * d;
        const R* xr = x + pos * d;
        for (int t = 0; t < d; ++t) kr[t] += g * xr[t];
      }
    }
    if (dbias) dbias[j] += bacc;
  }
}

// 2-D convolution over stacked feature maps, zero padding, rectification.
// x: [C x H x W], k: [F x C x kh x kw], bias: [F], out: [F x H x W].
template <class R>
void conv2d_relu(const R* x, const R* k, const R* bias, R* out, int ch, int h,
                 int w, int f, int kh, int kw) {
  const int cy = kh / 2;
  const int cx = kw / 2;
  for (int j = 0; j < f; ++j) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        R acc = bias[j];
        for (int c = 0; c < ch; ++c) {
          for (int oy = 0; oy < kh; ++oy) {
            const int sy = y + oy - cy;
            if (sy < 0 || sy >= h) continue;
            for (int ox = 0; ox < kw; ++ox) {
              const int sx = xx + ox - cx;
              if (sx < 0 || sx >= w) continue;
              acc += k[((j * ch + c) * kh + oy) * kw + ox] * x[(c * h + sy) * w + sx];
            }
          }
        }
        out[(j * h + y) * w + xx] = acc > R(0) ? acc : R(0);
      }
    }
  }
}

template <class R>
void conv2d_relu_bwd_x(const R* k, const R* out, const R* dout, R* dx, int ch,
                       int h, int w, int f, int kh, int kw) {
  const int cy = kh / 2;
  const int cx = kw / 2;
  for (int c = 0; c < ch; ++c) {
    for (int sy = 0; sy < h; ++sy) {
      for (int sx = 0; sx < w; ++sx) {
        R acc = R(0);
        for (int j = 0; j < f; ++j) {
          for (int oy = 0; oy < kh; ++oy) {
            const int y = sy - oy + cy;
            if (y < 0 || y >= h) continue;
            for (int ox = 0; ox < kw; ++ox) {
              const int xx = sx - ox + cx;
              if (xx < 0 || xx >= w) continue;
              if (out[(j * h + y) * w + xx] > R(0)) {
                acc += dout[(j * h + y) * w + xx] * k[((j * ch + c) * kh + oy) * kw + ox];
              }
            }
          }
        }
        dx[(c * h + sy) * w + sx] += acc;
      }
    }
  }
}

template <class R>
void conv2d_relu_bwd_k(const R* x, const R* out, const R* dout, R* dk,
                       R* dbias, int ch, int h, int w, int f, int kh, int kw) {
  const int cy = kh / 2;
  const int cx = kw / 2;
  for (int j = 0; j < f; ++j) {
    R bacc = R(0);
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        if (out[(j * h + y) * w + xx] <= R(0)) continue;
        const R g = dout[(j * h + y) * w + xx];
        bacc += g;
        for (int c = 0; c < ch; ++c) {
          for (int oy = 0; oy < kh; ++oy) {
            const int sy = y + oy - cy;
            if (sy < 0 || sy >= h) continue;
            for (int ox = 0; ox < kw; ++ox) {
              const int sx = xx + ox - cx;
              if (sx < 0 || sx >= w) continue;
              dk[((j * ch + c) * kh + oy) * kw + ox] += g * x[(c * h + sy) * w + sx];
            }
          }
        }
      }
    }
    if (dbias) dbias[j] += bacc;
  }
}

}  // namespace ref

// ---------------------------------------------------------------------------
// OpenMP kernels. Same per-element accumulation order as ref::, partitioned
// over independent outputs only.
// ---------------------------------------------------------------------------
namespace par {

template <class R>
void matmul(const R* a, const R* b, R* c, int m, int k, int n) {
  if (m >= n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        R acc = R(0);
        for (int t = 0; t < k; ++t) acc += a[i * k + t] * b[t * n + j];
        c[i * n + j] = acc;
      }
    }
  } else {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < m; ++i) {
        R acc = R(0);
        for (int t = 0; t < k; ++t) acc += a[i * k + t] * b[t * n + j];
        c[i * n + j] = acc;
      }
    }
  }
}

template <class R>
void matmul_acc_nt(const R* g, const R* b, R* da, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < k; ++t) {
      R acc = R(0);
      for (int j = 0; j < n; ++j) acc += g[i * n + j] * b[t * n + j];
      da[i * k + t] += acc;
    }
  }
}

template <class R>
void matmul_acc_tn(const R* a, const R* g, R* db, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int t = 0; t < k; ++t) {
    for (int j = 0; j < n; ++j) {
      R acc = R(0);
      for (int i = 0; i < m; ++i) acc += a[i * k + t] * g[i * n + j];
      db[t * n + j] += acc;
    }
  }
}

template <class R>
void attention(const R* qe, const R* be, const unsigned char* qmask,
               const unsigned char* bmask, R* m, int lq, int lb, int d) {
#pragma omp parallel for schedule(static)
  for (int a = 0; a < lq; ++a) {
    for (int b = 0; b < lb; ++b) {
      R acc = R(0);
      if (qmask[a] && bmask[b]) {
        for (int t = 0; t < d; ++t) acc += qe[a * d + t] * be[b * d + t];
      }
      m[a * lb + b] = acc;
    }
  }
}

template <class R>
void attention_bwd_q(const R* be, const unsigned char* qmask,
                     const unsigned char* bmask, const R* dm, R* dqe, int lq,
                     int lb, int d) {
#pragma omp parallel for schedule(static)
  for (int a = 0; a < lq; ++a) {
    if (!qmask[a]) continue;
    for (int t = 0; t < d; ++t) {
      R acc = R(0);
      for (int b = 0; b < lb; ++b) {
        if (bmask[b]) acc += dm[a * lb + b] * be[b * d + t];
      }
      dqe[a * d + t] += acc;
    }
  }
}

template <class R>
void attention_bwd_b(const R* qe, const unsigned char* qmask,
                     const unsigned char* bmask, const R* dm, R* dbe, int lq,
                     int lb, int d) {
#pragma omp parallel for schedule(static)
  for (int b = 0; b < lb; ++b) {
    if (!bmask[b]) continue;
    for (int t = 0; t < d; ++t) {
      R acc = R(0);
      for (int a = 0; a < lq; ++a) {
        if (qmask[a]) acc += dm[a * lb + b] * qe[a * d + t];
      }
      dbe[b * d + t] += acc;
    }
  }
}

template <class R>
void conv_text(const R* x, const R* k, const R* bias,
               const unsigned char* mask, R* out, int l, int d, int f, int w) {
  const int c = w / 2;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < l; ++p) {
    for (int j = 0; j < f; ++j) {
      R acc = R(0);
      if (mask[p]) {
        acc = bias[j];
        for (int o = 0; o < w; ++o) {
          const int pos = p + o - c;
          if (pos < 0 || pos >= l || !mask[pos]) continue;
          const R* kr = k + (j * w + o) * d;
          const R* xr = x + pos * d;
          for (int t = 0; t < d; ++t) acc += kr[t] * xr[t];
        }
        if (acc < R(0)) acc = R(0);
      }
      out[p * f + j] = acc;
    }
  }
}

template <class R>
void conv_text_bwd_x(const R* k, const unsigned char* mask, const R* out,
                     const R* dout, R* dx, int l, int d, int f, int w) {
  const int c = w / 2;
#pragma omp parallel for schedule(static)
  for (int pos = 0; pos < l; ++pos) {
    if (!mask[pos]) continue;
    for (int t = 0; t < d; ++t) {
      R acc = R(0);
      for (int o = 0; o < w; ++o) {
        const int p = pos - o + c;
        if (p < 0 || p >= l || !mask[p]) continue;
        for (int j = 0; j < f; ++j) {
          if (out[p * f + j] > R(0)) acc += dout[p * f + j] * k[(j * w + o) * d + t];
        }
      }
      dx[pos * d + t] += acc;
    }
  }
}

template <class R>
void conv_text_bwd_k(const R* x, const unsigned char* mask, const R* out,
                     const R* dout, R* dk, R* dbias, int l, int d, int f,
                     int w) {
  const int c = w / 2;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < f; ++j) {
    R bacc = R(0);
    for (int p = 0; p < l; ++p) {
      if (!mask[p] || out[p * f + j] <= R(0)) continue;
      const R g = dout[p * f + j];
      bacc += g;
      for (int o = 0; o < w; ++o) {
        const int pos = p + o - c;
        if (pos < 0 || pos >= l || !mask[pos]) continue;
        R* kr = dk + (j * w + o) * d;
        const R* xr = x + pos * d;
        for (int t = 0; t < d; ++t) kr[t] += g * xr[t];
      }
    }
    if (dbias) dbias[j] += bacc;
  }
}

template <class R>
void conv2d_relu(const R* x, const R* k, const R* bias, R* out, int ch, int h,
                 int w, int f, int kh, int kw) {
  const int cy = kh / 2;
  const int cx = kw / 2;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < f; ++j) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        R acc = bias[j];
        for (int c = 0; c < ch; ++c) {
          for (int oy = 0; oy < kh; ++oy) {
            const int sy = y + oy - cy;
            if (sy < 0 || sy >= h) continue;
            for (int ox = 0; ox < kw; ++ox) {
              const int sx = xx + ox - cx;
              if (sx < 0 || sx >= w) continue;
              acc += k[((j * ch + c) * kh + oy) * kw + ox] * x[(c * h + sy) * w + sx];
            }
          }
        }
        out[(j * h + y) * w + xx] = acc > R(0) ? acc : R(0);
      }
    }
  }
}

template <class R>
void conv2d_relu_bwd_x(const R* k, const R* out, const R* dout, R* dx, int ch,
                       int h, int w, int f, int kh, int kw) {
  const int cy = kh / 2;
  const int cx = kw / 2;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < ch; ++c) {
    for (int sy = 0; sy < h; ++sy) {
      for (int sx = 0; sx < w; ++sx) {
        R acc = R(0);
        for (int j = 0; j < f; ++j) {
          for (int oy = 0; oy < kh; ++oy) {
            const int y = sy - oy + cy;
            if (y < 0 || y >= h) continue;
            for (int ox = 0; ox < kw; ++ox) {
              const int xx = sx - ox + cx;
              if (xx < 0 || xx >= w) continue;
              if (out[(j * h + y) * w + xx] > R(0)) {
                acc += dout[(j * h + y) * w + xx] * k[((j * ch + c) * kh + oy) * kw + ox];
              }
            }
          }
        }
        dx[(c * h + sy) * w + sx] += acc;
      }
    }
  }
}

template <class R>
void conv2d_relu_bwd_k(const R* x, const R* out, const R* dout, R* dk,
                       R* dbias, int ch, int h, int w, int f, int kh, int kw) {
  const int cy = kh / 2;
  const int cx = kw / 2;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < f; ++j) {
    R bacc = R(0);
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        if (out[(j * h + y) * w + xx] <= R(0)) continue;
        const R g = dout[(j * h + y) * w + xx];
        bacc += g;
        for (int c = 0; c < ch; ++c) {
          for (int oy = 0; oy < kh; ++oy) {
            const int sy = y + oy - cy;
            if (sy < 0 || sy >= h) continue;
            for (int ox = 0; ox < kw; ++ox) {
              const int sx = xx + ox - cx;
              if (sx < 0 || sx >= w) continue;
              dk[((j * ch + c) * kh + oy) * kw + ox] += g * x[(c * h + sy) * w + sx];
            }
          }
        }
      }
    }
    if (dbias) dbias[j] += bacc;
  }
}

}  // namespace par

// ---------------------------------------------------------------------------
// Dispatch wrappers. Small calls stay on the reference path; the grain check
// never changes results, only whether a parallel region is opened.
// ---------------------------------------------------------------------------

inline bool use_parallel(long work) {
  return exec_mode() == Exec::parallel && work >= kParallelGrain;
}

template <class R>
void matmul(const R* a, const R* b, R* c, int m, int k, int n) {
  if (use_parallel(long(m) * k * n)) {
    par::matmul(a, b, c, m, k, n);
  } else {
    ref::matmul(a, b, c, m, k, n);
  }
}

template <class R>
void matmul_acc_nt(const R* g, const R* b, R* da, int m, int k, int n) {
  if (use_parallel(long(m) * k * n)) {
    par::matmul_acc_nt(g, b, da, m, k, n);
  } else {
    ref::matmul_acc_nt(g, b, da, m, k, n);
  }
}

template <class R>
void matmul_acc_tn(const R* a, const R* g, R* db, int m, int k, int n) {
  if (use_parallel(long(m) * k * n)) {
    par::matmul_acc_tn(a, g, db, m, k, n);
  } else {
    ref::matmul_acc_tn(a, g, db, m, k, n);
  }
}

template <class R>
void attention(const R* qe, const R* be, const unsigned char* qmask,
               const unsigned char* bmask, R* m, int lq, int lb, int d) {
  if (use_parallel(long(lq) * lb * d)) {
    par::attention(qe, be, qmask, bmask, m, lq, lb, d);
  } else {
    ref::attention(qe, be, qmask, bmask, m, lq, lb, d);
  }
}

template <class R>
void attention_bwd_q(const R* be, const unsigned char* qmask,
                     const unsigned char* bmask, const R* dm, R* dqe, int lq,
                     int lb, int d) {
  if (use_parallel(long(lq) * lb * d)) {
    par::attention_bwd_q(be, qmask, bmask, dm, dqe, lq, lb, d);
  } else {
    ref::attention_bwd_q(be, qmask, bmask, dm, dqe, lq, lb, d);
  }
}

template <class R>
void attention_bwd_b(const R* qe, const unsigned char* qmask,
                     const unsigned char* bmask, const R* dm, R* dbe, int lq,
                     int lb, int d) {
  if (use_parallel(long(lq) * lb * d)) {
    par::attention_bwd_b(qe, qmask, bmask, dm, dbe, lq, lb, d);
  } else {
    ref::attention_bwd_b(qe, qmask, bmask, dm, dbe, lq, lb, d);
  }
}

template <class R>
void conv_text(const R* x, const R* k, const R* bias,
               const unsigned char* mask, R* out, int l, int d, int f, int w) {
  if (use_parallel(long(l) * d * f * w)) {
    par::conv_text(x, k, bias, mask, out, l, d, f, w);
  } else {
    ref::conv_text(x, k, bias, mask, out, l, d, f, w);
  }
}

template <class R>
void conv_text_bwd_x(const R* k, const unsigned char* mask, const R* out,
                     const R* dout, R* dx, int l, int d, int f, int w) {
  if (use_parallel(long(l) * d * f * w)) {
    par::conv_text_bwd_x(k, mask, out, dout, dx, l, d, f, w);
  } else {
    ref::conv_text_bwd_x(k, mask, out, dout, dx, l, d, f, w);
  }
}

template <class R>
void conv_text_bwd_k(const R* x, const unsigned char* mask, const R* out,
                     const R* dout, R* dk, R* dbias, int l, int d, int f,
                     int w) {
  if (use_parallel(long(l) * d * f * w)) {
    par::conv_text_bwd_k(x, mask, out, dout, dk, dbias, l, d, f, w);
  } else {
    ref::conv_text_bwd_k(x, mask, out, dout, dk, dbias, l, d, f, w);
  }
}

template <class R>
void conv2d_relu(const R* x, const R* k, const R* bias, R* out, int ch, int h,
                 int w, int f, int kh, int kw) {
  if (use_parallel(long(ch) * h * w * f * kh * kw)) {
    par::conv2d_relu(x, k, bias, out, ch, h, w, f, kh, kw);
  } else {
    ref::conv2d_relu(x, k, bias, out, ch, h, w, f, kh, kw);
  }
}

template <class R>
void conv2d_relu_bwd_x(const R* k, const R* out, const R* dout, R* dx, int ch,
                       int h, int w, int f, int kh, int kw) {
  if (use_parallel(long(ch) * h * w * f * kh * kw)) {
    par::conv2d_relu_bwd_x(k, out, dout, dx, ch, h, w, f, kh, kw);
  } else {
    ref::conv2d_relu_bwd_x(k, out, dout, dx, ch, h, w, f, kh, kw);
  }
}

template <class R>
void conv2d_relu_bwd_k(const R* x, const R* out, const R* dout, R* dk,
                       R* dbias, int ch, int h, int w, int f, int kh, int kw) {
  if (use_parallel(long(ch) * h * w * f * kh * kw)) {
    par::conv2d_relu_bwd_k(x, out, dout, dk, dbias, ch, h, w, f, kh, kw);
  } else {
    ref::conv2d_relu_bwd_k(x, out, dout, dk, dbias, ch, h, w, f, kh, kw);
  }
}

// 2x2 max pooling with stride 2 and clipped border windows; the flat
// within-channel argmax index is recorded for the backward pass.
template <class R>
void maxpool2(const R* x, R* out, int* argmax, int ch, int h, int w) {
  const int ho = (h + 1) / 2;
  const int wo = (w + 1) / 2;
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < ho; ++y) {
      for (int xx = 0; xx < wo; ++xx) {
        int best = (2 * y) * w + 2 * xx;
        R bv = x[c * h * w + best];
        for (int oy = 0; oy < 2; ++oy) {
          for (int ox = 0; ox < 2; ++ox) {
            const int sy = 2 * y + oy;
            const int sx = 2 * xx + ox;
            if (sy >= h || sx >= w) continue;
            const int idx = sy * w + sx;
            if (x[c * h * w + idx] > bv) {
              bv = x[c * h * w + idx];
              best = idx;
            }
          }
        }
        out[(c * ho + y) * wo + xx] = bv;
        argmax[(c * ho + y) * wo + xx] = best;
      }
    }
  }
}

template <class R>
void maxpool2_bwd(const R* dout, const int* argmax, R* dx, int ch, int h,
                  int w) {
  const int ho = (h + 1) / 2;
  const int wo = (w + 1) / 2;
  for (int c = 0; c < ch; ++c) {
    for (int i = 0; i < ho * wo; ++i) {
      dx[c * h * w + argmax[c * ho * wo + i]] += dout[c * ho * wo + i];
    }
  }
}

}  // namespace qbm::kernels
