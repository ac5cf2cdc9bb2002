#include "homlab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace homlab {

int default_workers() {
  if (const char* env = std::getenv("HOMLAB_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception&) {
    }
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

}  // namespace homlab
