#pragma once

#include <optional>
#include <span>
#include <vector>

#include "homlab/disorder.hpp"
#include "homlab/lattice.hpp"
#include "homlab/operators.hpp"
#include "homlab/symbol_table.hpp"

namespace homlab {

/// Diagonal of the averaged resolvent in the plane-wave basis,
/// r(k) = <e_xi, L^{-1} e_xi> / N, with the derived effective symbol
/// A^(k) = 1 / r(k) and k1(k) = (A^(k) - |q|^2) / |q|^2.
struct AnnealedSymbol {
  TorusGrid grid{1, 2};
  double delta = 0.0;
  std::vector<FreqVector> freqs;
  std::vector<double> resolvent;
  std::vector<double> resolvent_stderr;
  /// r_m(k) per sample, [probe][sample].
  std::vector<double> per_sample;
  std::vector<double> weights;
  bool exact = false;
  std::uint64_t seed = 0;
  int max_iterations_used = 0;

  std::size_t samples() const noexcept { return weights.size(); }
  double q2(std::size_t probe) const { return laplacian_symbol(freqs[probe], grid.side()); }
  double effective(std::size_t probe) const { return 1.0 / resolvent[probe]; }
  double effective_stderr(std::size_t probe) const {
    return resolvent_stderr[probe] / (resolvent[probe] * resolvent[probe]);
  }
  double k1(std::size_t probe) const { return effective(probe) / q2(probe) - 1.0; }
  double k1_stderr(std::size_t probe) const { return effective_stderr(probe) / q2(probe); }

  K1Table k1_table() const;
};

AnnealedSymbol annealed_symbol(const Ensemble& ensemble, double delta, std::span<const FreqVector> freqs,
                               double tol = 1e-10, int workers = 1);

struct FluctuationPoint {
  FreqVector k;
  double xi_norm = 0.0;
  double magnitude = 0.0;
  double stderr = 0.0;
};

/// |k1(xi) - k1_ref|. Without `reference` the value at the smallest |xi|
/// probe is used and errors are propagated pairwise over samples.
std::vector<FluctuationPoint> k1_fluctuation(const AnnealedSymbol& symbol,
                                             std::optional<double> reference = std::nullopt);

/// 1/E[1/(1 + delta sigma)] - 1: the one-dimensional (series resistance)
/// effective coefficient minus one.
double harmonic_mean_k1(const DistributionSpec& spec, double delta);

enum class FitMode { Symbol, Kernel };
const char* to_string(FitMode mode);

struct DecayPoint {
  double abscissa = 0.0;  // |xi| or distance r
  double magnitude = 0.0;
  double stderr = 0.0;
};

struct FitOptions {
  FitMode mode = FitMode::Kernel;
  /// Fit range; 0 selects the default ([2, L/4] for kernels, the two lowest
  /// octaves above the smallest positive abscissa for symbols).
  double lo = 0.0;
  double hi = 0.0;
  int side = 0;
  int bins_per_octave = 2;
  /// Points with magnitude within this many stderr of zero are dropped.
  double zero_sigma = 2.0;
};

/// Weighted least-squares line through (log x, log y).
struct DecayFit {
  FitMode mode = FitMode::Kernel;
  std::vector<double> log_x;
  std::vector<double> log_y;
  std::vector<double> weights;
  double slope = 0.0;
  double intercept = 0.0;
  double ci95 = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;
  std::size_t excluded = 0;

  std::size_t n_points() const noexcept { return log_x.size(); }
  DecayFit refit() const;
};

DecayFit fit_decay(std::span<const DecayPoint> points, const FitOptions& options);

/// Largest slope change when the fitted set loses its first or last
/// (binned) point.
double fit_range_sensitivity(const DecayFit& fit);

}  // namespace homlab
