#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "homlab/lattice.hpp"

namespace homlab {

/// Scalar estimate at one probe frequency.
struct SymbolPoint {
  FreqVector k;
  double xi_norm = 0.0;
  double value = 0.0;
  double stderr = 0.0;
};

/// k1(xi) = q^dagger K1^(xi) q / |q|^2, the part of the effective symbol
/// visible along the gradient direction. Both routes to the effective
/// operator reduce to this table, which is what gets compared.
struct K1Table {
  int dim = 1;
  int side = 2;
  double delta = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string source;  // "expansion", "annealed", "oracle"
  std::vector<SymbolPoint> points;
};

/// Columns k_0..k_{d-1},xi_norm,k1,stderr,delta,M,seed,source.
void write_k1_csv(std::ostream& out, const K1Table& table);
K1Table read_k1_csv(const std::string& path);

}  // namespace homlab
