#include "stochvec/parallel.hpp"

#include <atomic>

namespace stochvec {

namespace {
std::atomic<int> g_jobs{0};
}

int default_jobs() {
  const int j = g_jobs.load();
  if (j > 0) return j;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_default_jobs(int jobs) { g_jobs.store(jobs); }

}  // namespace stochvec
