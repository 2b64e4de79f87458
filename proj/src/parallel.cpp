#include "opweight/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace opweight {

int thread_count() {
  const char* env = std::getenv("OPWEIGHT_THREADS");
  int requested = 0;
  if (env != nullptr) {
    try {
      requested = std::stoi(env);
    } catch (...) {
      requested = 0;
    }
    if (requested < 0) requested = 0;
  }
#ifdef _OPENMP
  if (requested == 0) return omp_get_max_threads();
  return requested;
#else
  return requested == 0 ? 1 : requested;
#endif
}

void serial_for(int n, const std::function<void(int)>& body) {
  for (int i = 0; i < n; ++i) body(i);
}

void parallel_for(int n, const std::function<void(int)>& body) {
#ifdef _OPENMP
  const int threads = thread_count();
  if (threads > 1 && n > 1) {
#pragma omp parallel for num_threads(threads) schedule(static)
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
#endif
  serial_for(n, body);
}

}  // namespace opweight
