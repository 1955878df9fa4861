#include "conetest/parallel.hpp"

#include <cstdlib>
#include <string>

namespace conetest {

int default_workers() {
  if (const char* env = std::getenv("CONETEST_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace conetest
