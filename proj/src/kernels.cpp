#include "ipf/kernels.hpp"

#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ipf {

std::vector<StepResult> implicit_forward_kernel(Execution exec, int workers, const StateSpaceModel& model,
                                                std::span<const Vector> states, double t, const Vector* b,
                                                std::span<const Vector> xis, const IterationConfig& cfg) {
  if (states.size() != xis.size()) throw std::invalid_argument("implicit_forward_kernel: size mismatch");
  std::vector<StepResult> out(states.size());
  for_each_index(exec, static_cast<int>(states.size()), workers, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = b ? forward_step(model, states[k], t, *b, xis[k], cfg) : prior_step(model, states[k], t, xis[k], cfg);
  });
  return out;
}

std::vector<SirStep> sir_kernel(Execution exec, int workers, const StateSpaceModel& model,
                                std::span<const Vector> states, double t, const Vector* b,
                                std::span<const Vector> noises) {
  if (states.size() != noises.size()) throw std::invalid_argument("sir_kernel: size mismatch");
  std::vector<SirStep> out(states.size());
  for_each_index(exec, static_cast<int>(states.size()), workers, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = sir_step(model, states[k], t, b, noises[k]);
  });
  return out;
}

int max_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ipf
