#ifndef IPF_KERNELS_HPP
#define IPF_KERNELS_HPP

#include <exception>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ipf/baselines.hpp"
#include "ipf/implicit_sampling.hpp"
#include "ipf/model.hpp"

namespace ipf {

/// serial is the reference path; parallel must reproduce it bit for bit.
enum class Execution { serial, parallel };

/**
 * Runs body(i) for every i in [0, count). Each index writes only its own
 * slot, so the result does not depend on scheduling. An exception thrown for
 * some index is rethrown after the loop (lowest index wins). workers <= 0
 * lets OpenMP choose.
 */
template <class Body>
void for_each_index(Execution exec, int count, int workers, Body&& body) {
  if (exec == Execution::serial || workers == 1 || count < 2) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#ifdef _OPENMP
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Forward implicit step for every particle state; b == nullptr means no
/// observation at this step.
std::vector<StepResult> implicit_forward_kernel(Execution exec, int workers, const StateSpaceModel& model,
                                                std::span<const Vector> states, double t, const Vector* b,
                                                std::span<const Vector> xis, const IterationConfig& cfg);

/// Bootstrap SIR step for every particle state.
std::vector<SirStep> sir_kernel(Execution exec, int workers, const StateSpaceModel& model,
                                std::span<const Vector> states, double t, const Vector* b,
                                std::span<const Vector> noises);

/// Number of threads OpenMP would use (1 without OpenMP).
int max_workers();

}  // namespace ipf

#endif  // IPF_KERNELS_HPP
