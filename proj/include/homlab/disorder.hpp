#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "homlab/lattice.hpp"
#include "homlab/operators.hpp"

namespace homlab {

enum class DistributionKind { Rademacher, UniformSymmetric, TwoPoint };

struct Atom {
  double value;
  double probability;
};

/// Law of a single site value sigma_x: mean exactly zero, bounded support.
class DistributionSpec {
 public:
  static DistributionSpec rademacher();
  static DistributionSpec uniform_symmetric(double half_width);
  /// Value v_plus with probability p, v_minus otherwise; p v_plus + (1-p) v_minus must vanish.
  static DistributionSpec two_point(double p, double v_plus, double v_minus);

  DistributionKind kind() const noexcept { return kind_; }
  double bound() const noexcept { return bound_; }
  double variance() const noexcept { return variance_; }
  double param_a() const noexcept { return a_; }
  double param_p() const noexcept { return p_; }
  double param_v_plus() const noexcept { return v_plus_; }
  double param_v_minus() const noexcept { return v_minus_; }
  bool symmetric() const noexcept;
  /// Atoms of a finite-support law; empty for the uniform law.
  std::vector<Atom> atoms() const;
  std::string describe() const;

  /// Maps one 64-bit draw to a site value.
  double draw(std::uint64_t bits) const noexcept;

 private:
  DistributionSpec(DistributionKind kind, double a, double p, double vp, double vm);

  DistributionKind kind_;
  double a_ = 0.0;
  double p_ = 0.0;
  double v_plus_ = 0.0;
  double v_minus_ = 0.0;
  double bound_ = 0.0;
  double variance_ = 0.0;
};

/// Seed of sample `index` in the stream of `master`: a pure function, so any
/// sample can be regenerated without the others.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

DisorderSample sample_sigma(const TorusGrid& grid, const DistributionSpec& spec, std::uint64_t seed);

/// A weighted set of disorder realizations. Monte Carlo ensembles carry
/// uniform weights 1/M; exhaustive ensembles list every configuration of a
/// finite-support law with its probability and are flagged `exact`.
struct Ensemble {
  TorusGrid grid;
  std::optional<DistributionSpec> spec;
  std::vector<DisorderSample> samples;
  std::vector<double> weights;
  bool exact = false;
  std::uint64_t master_seed = 0;

  std::size_t size() const noexcept { return samples.size(); }
};

Ensemble make_ensemble(const TorusGrid& grid, const DistributionSpec& spec, std::size_t count,
                       std::uint64_t master_seed, int workers = 1);
/// Uniform-weight ensemble over explicit samples (degenerate laws in tests).
Ensemble ensemble_from_samples(const TorusGrid& grid, std::vector<DisorderSample> samples);
/// Every configuration of a finite-support law; TooLarge beyond `cap`.
Ensemble enumerate_ensemble(const TorusGrid& grid, const DistributionSpec& spec,
                            std::size_t cap = std::size_t{1} << 20);

/// Empirical P-perp: subtracts the weighted cross-sample mean from `count`
/// stacked blocks of `stride` values each. Throws EnsembleTooSmall if count < 2.
void center_stage(std::span<cplx> stacked, std::size_t count, std::size_t stride,
                  std::span<const double> weights, int workers = 1);
std::vector<ScalarField> center_stage(std::vector<ScalarField> fields);
std::vector<VectorField> center_stage(std::vector<VectorField> fields);

}  // namespace homlab
