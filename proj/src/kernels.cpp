#include "qbm/kernels.hpp"

#include <omp.h>

#include <atomic>

namespace qbm::kernels {

namespace {
std::atomic<Exec> g_mode{Exec::parallel};
std::atomic<int> g_threads{0};
}  // namespace

Exec exec_mode() { return g_mode.load(std::memory_order_relaxed); }

void set_exec_mode(Exec mode) { g_mode.store(mode, std::memory_order_relaxed); }

void set_num_threads(int n) {
  g_threads.store(n, std::memory_order_relaxed);
  if (n > 0) omp_set_num_threads(n);
}

int num_threads() {
  const int n = g_threads.load(std::memory_order_relaxed);
  return n > 0 ? n : omp_get_max_threads();
}

}  // namespace qbm::kernels
