#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "homlab/disorder.hpp"
#include "homlab/lattice.hpp"
#include "homlab/symbol_table.hpp"

namespace homlab {

enum class ProbeKind { Symbol, Kernel };

/// Estimate of the order-n series term <b (K P-perp b)^n>.
///
/// Values are stored for b = sigma (delta = 1) and scaled by delta^{n+1} on
/// read, so the delta dependence is exact. Entries are d x d matrices indexed
/// [probe][row][col]; a probe is a frequency (symbol) or a site (kernel
/// column at `source`).
struct TermEstimate {
  int order = 1;
  ProbeKind kind = ProbeKind::Symbol;
  int dim = 1;
  int side = 2;
  std::vector<FreqVector> freqs;
  std::size_t source = 0;
  double delta = 0.0;
  std::size_t samples = 0;
  bool exact = false;
  std::uint64_t seed = 0;

  std::vector<cplx> unit_value;
  std::vector<double> unit_stderr;
  // Symbol probes only: per-sample pseudo-values (raw value plus the sample's
  // first-order effect through the centering means), [probe][row][col][sample],
  // shared between all orders of one pass. Lets sums over orders keep their
  // cross-order correlation.
  std::shared_ptr<const std::vector<cplx>> unit_per_sample;
  std::shared_ptr<const std::vector<double>> weights;

  std::size_t probes() const noexcept;
  std::size_t entry(std::size_t probe, int row, int col) const noexcept {
    return (probe * static_cast<std::size_t>(dim) + static_cast<std::size_t>(row)) * static_cast<std::size_t>(dim) +
           static_cast<std::size_t>(col);
  }
  double scale() const;
  cplx value(std::size_t probe, int row, int col) const { return scale() * unit_value[entry(probe, row, col)]; }
  double stderr(std::size_t probe, int row, int col) const {
    return std::abs(scale()) * unit_stderr[entry(probe, row, col)];
  }
  /// Same estimate reported at another delta.
  TermEstimate at_delta(double other) const;
};

/// All orders 1..max_order at once: the order-n state is one more
/// [sigma, center, K] stage applied to the order-(n-1) state.
std::vector<TermEstimate> estimate_terms_symbol(int max_order, const Ensemble& ensemble, double delta,
                                                std::span<const FreqVector> freqs, int workers = 1);
TermEstimate estimate_term_symbol(int order, const Ensemble& ensemble, double delta,
                                  std::span<const FreqVector> freqs, int workers = 1);

std::vector<TermEstimate> estimate_terms_kernel(int max_order, const Ensemble& ensemble, double delta,
                                                std::size_t source, int workers = 1);
TermEstimate estimate_term_kernel(int order, const Ensemble& ensemble, double delta, std::size_t source,
                                  int workers = 1);

enum class SignConvention {
  Alternating,  // s_n = (-1)^n
  Printed,      // s_n = (-1)^{n+1}
};

int series_sign(SignConvention convention, int order);
std::vector<int> series_signs(SignConvention convention, int truncation);
const char* to_string(SignConvention convention);

/// Truncated series K1 = sum_{n <= N} s_n term_n.
struct K1Series {
  int truncation = 0;
  std::vector<int> signs;
  std::vector<TermEstimate> terms;
  std::vector<cplx> value;
  std::vector<double> stderr;
  /// Leading order of the omitted tail: delta^{N+2}.
  int tail_order = 0;

  const TermEstimate& layout() const { return terms.front(); }
};

K1Series assemble_K1(std::span<const TermEstimate> terms, std::span<const int> signs, int truncation);

/// q^dagger K1 q / |q|^2 at every probe of a symbol series.
K1Table k1_projection(const K1Series& series);

}  // namespace homlab
