// FFTW-backed transforms. Plans are created once per (d, L, direction) with
// FFTW_ESTIMATE so the chosen algorithm, and therefore every rounding, is the
// same on every run; plan creation is serialized, execution is thread-safe.

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "homlab/error.hpp"
#include "homlab/lattice.hpp"

namespace homlab {
namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(const TorusGrid& grid, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(grid.dim(), grid.side(), sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<int> dims(static_cast<std::size_t>(grid.dim()), grid.side());
    std::vector<cplx> scratch(grid.sites());
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft(grid.dim(), dims.data(), p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw Error(ErrorCode::InvalidArgument, "FFTW could not plan transform");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(const TorusGrid& grid, std::span<cplx> data, int sign) {
  if (data.size() != grid.sites()) throw Error(ErrorCode::InvalidArgument, "transform length mismatch");
  fftw_plan plan = cache().get(grid, sign);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

}  // namespace

void dft_inplace(const TorusGrid& grid, std::span<cplx> data) { execute(grid, data, FFTW_FORWARD); }

void idft_inplace(const TorusGrid& grid, std::span<cplx> data) {
  execute(grid, data, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(grid.sites());
  for (auto& v : data) v *= scale;
}

}  // namespace homlab
