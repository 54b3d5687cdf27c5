#pragma once

#include <Eigen/Core>

namespace defgpa {

/// How independent per-view work is scheduled. Serial is the reference
/// implementation; Parallel distributes views over OpenMP threads. Both
/// produce bit-identical results (each view is computed by exactly one
/// thread and Eigen's own threading is disabled).
enum class ExecutionPolicy { Serial, Parallel };

/// Worker cap from the DEFGPA_THREADS environment variable (0 = automatic).
int thread_cap();

/// Applies the DEFGPA_THREADS cap to the OpenMP runtime.
void apply_thread_cap();

namespace detail {
void run_indexed_loop(Eigen::Index count, ExecutionPolicy policy,
                      void (*body)(Eigen::Index, void*), void* ctx);
}

/// Runs f(i) for i in [0, count), serially or with OpenMP. Exceptions thrown
/// by f are captured and rethrown on the calling thread.
template <typename F>
void for_each_index(Eigen::Index count, ExecutionPolicy policy, F&& f) {
  auto trampoline = [](Eigen::Index i, void* ctx) { (*static_cast<F*>(ctx))(i); };
  detail::run_indexed_loop(count, policy, trampoline, &f);
}

}  // namespace defgpa
