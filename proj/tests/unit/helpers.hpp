#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "homlab/lattice.hpp"

namespace homlab::test {

inline double uniform(std::mt19937_64& rng) { return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0; }

inline ScalarField random_scalar(const TorusGrid& grid, std::mt19937_64& rng, bool mean_zero = false) {
  ScalarField f(grid);
  for (auto& v : f.values()) v = cplx(uniform(rng), uniform(rng));
  if (mean_zero) {
    const cplx m = f.mean();
    for (auto& v : f.values()) v -= m;
  }
  return f;
}

inline VectorField random_vector(const TorusGrid& grid, std::mt19937_64& rng) {
  VectorField g(grid);
  for (auto& v : g.data()) v = cplx(uniform(rng), uniform(rng));
  return g;
}

inline double max_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(std::span<const cplx> a) {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace homlab::test
