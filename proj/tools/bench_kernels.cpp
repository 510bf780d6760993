// Timing comparison between the serial reference kernels and their OpenMP
// counterparts at model-realistic sizes, plus a bit-equality check on the way.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "qbm/kernels.hpp"
#include "qbm/rng.hpp"

namespace {

using qbm::Rng;
namespace kernels = qbm::kernels;

std::vector<float> random_vec(size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = float(rng.uniform(-1.0, 1.0));
  return v;
}

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-18s %10.3f us %10.3f us %6.2fx  %s\n", name, serial_s * 1e6,
              parallel_s * 1e6, serial_s / parallel_s,
              equal ? "bit-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 50;
  Rng rng(7);
  std::printf("%-18s %13s %13s %7s\n", "kernel", "serial", "openmp", "speedup");

  {
    const int m = 128, k = 300, n = 256;
    auto a = random_vec(size_t(m) * k, rng);
    auto b = random_vec(size_t(k) * n, rng);
    std::vector<float> c_ref(size_t(m) * n), c_par(size_t(m) * n);
    const double ts = time_of(
        [&] { kernels::ref::matmul(a.data(), b.data(), c_ref.data(), m, k, n); },
        reps);
    const double tp = time_of(
        [&] { kernels::par::matmul(a.data(), b.data(), c_par.data(), m, k, n); },
        reps);
    report("matmul 128x300x256", ts, tp,
           std::memcmp(c_ref.data(), c_par.data(), c_ref.size() * 4) == 0);
  }

  {
    const int l = 100, d = 300, f = 128, w = 3;
    auto x = random_vec(size_t(l) * d, rng);
    auto k = random_vec(size_t(f) * w * d, rng);
    auto bias = random_vec(size_t(f), rng);
    std::vector<unsigned char> mask(size_t(l), 1);
    std::vector<float> o_ref(size_t(l) * f), o_par(size_t(l) * f);
    const double ts = time_of(
        [&] {
          kernels::ref::conv_text(x.data(), k.data(), bias.data(), mask.data(),
                                  o_ref.data(), l, d, f, w);
        },
        reps);
    const double tp = time_of(
        [&] {
          kernels::par::conv_text(x.data(), k.data(), bias.data(), mask.data(),
                                  o_par.data(), l, d, f, w);
        },
        reps);
    report("conv_text 100x300", ts, tp,
           std::memcmp(o_ref.data(), o_par.data(), o_ref.size() * 4) == 0);
  }

  {
    const int c = 32, h = 20, w = 20, f = 32, kk = 3;
    auto x = random_vec(size_t(c) * h * w, rng);
    auto k = random_vec(size_t(f) * c * kk * kk, rng);
    auto bias = random_vec(size_t(f), rng);
    std::vector<float> o_ref(size_t(f) * h * w), o_par(size_t(f) * h * w);
    const double ts = time_of(
        [&] {
          kernels::ref::conv2d_relu(x.data(), k.data(), bias.data(), o_ref.data(),
                                    c, h, w, f, kk, kk);
        },
        reps);
    const double tp = time_of(
        [&] {
          kernels::par::conv2d_relu(x.data(), k.data(), bias.data(), o_par.data(),
                                    c, h, w, f, kk, kk);
        },
        reps);
    report("conv2d 32ch 20x20", ts, tp,
           std::memcmp(o_ref.data(), o_par.data(), o_ref.size() * 4) == 0);
  }

  {
    const int lq = 100, lb = 100, d = 300;
    auto qe = random_vec(size_t(lq) * d, rng);
    auto be = random_vec(size_t(lb) * d, rng);
    std::vector<unsigned char> qm(size_t(lq), 1), bm(size_t(lb), 1);
    std::vector<float> m_ref(size_t(lq) * lb), m_par(size_t(lq) * lb);
    const double ts = time_of(
        [&] {
          kernels::ref::attention(qe.data(), be.data(), qm.data(), bm.data(),
                                  m_ref.data(), lq, lb, d);
        },
        reps);
    const double tp = time_of(
        [&] {
          kernels::par::attention(qe.data(), be.data(), qm.data(), bm.data(),
                                  m_par.data(), lq, lb, d);
        },
        reps);
    report("attention 100x100", ts, tp,
           std::memcmp(m_ref.data(), m_par.data(), m_ref.size() * 4) == 0);
  }
  return 0;
}
