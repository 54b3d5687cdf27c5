#include "defgpa/execution.hpp"

#include <omp.h>

#include <cstdlib>
#include <exception>
#include <mutex>

namespace defgpa {

int thread_cap() {
  const char* env = std::getenv("DEFGPA_THREADS");
  if (!env) return 0;
  int v = std::atoi(env);
  return v > 0 ? v : 0;
}

void apply_thread_cap() {
  int cap = thread_cap();
  if (cap > 0) omp_set_num_threads(cap);
}

namespace detail {

void run_indexed_loop(Eigen::Index count, ExecutionPolicy policy,
                      void (*body)(Eigen::Index, void*), void* ctx) {
  if (policy == ExecutionPolicy::Serial || count < 2) {
    for (Eigen::Index i = 0; i < count; ++i) body(i, ctx);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < count; ++i) {
    try {
      body(i, ctx);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail
}  // namespace defgpa
