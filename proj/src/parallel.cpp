#include "mtlab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace mtlab {
namespace {
std::atomic<int> g_threads{1};
}

int num_threads() { return g_threads.load(std::memory_order_relaxed); }

void set_num_threads(int n) { g_threads.store(std::max(1, n), std::memory_order_relaxed); }

int configure_threads_from_env() {
  int n = 1;
  if (const char* env = std::getenv("MTLAB_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      n = 1;
    }
  }
  set_num_threads(n);
  return num_threads();
}

}  // namespace mtlab
