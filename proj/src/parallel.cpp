#include "remfit/parallel.hpp"

#include <cstdlib>
#include <string>

namespace remfit {

unsigned default_thread_count() noexcept {
  if (const char* env = std::getenv("REMFIT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace remfit
