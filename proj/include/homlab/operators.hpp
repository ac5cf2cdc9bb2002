#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "homlab/lattice.hpp"

namespace homlab {

/// Translation-invariant operator on VectorFields given by a d x d complex
/// matrix per frequency (row-major, frequency-major storage).
class FourierMultiplier {
 public:
  /// When `hermitian` is set the symbol is checked entrywise against its
  /// adjoint at construction.
  FourierMultiplier(TorusGrid grid, std::vector<cplx> symbol, bool hermitian);

  static FourierMultiplier identity(const TorusGrid& grid);

  const TorusGrid& grid() const noexcept { return grid_; }
  bool hermitian() const noexcept { return hermitian_; }
  std::span<const cplx> at(std::size_t freq) const noexcept {
    const auto dd = static_cast<std::size_t>(grid_.dim() * grid_.dim());
    return std::span<const cplx>(symbol_).subspan(freq * dd, dd);
  }

  /// Applies the operator in place to d stacked components of length N.
  /// `scratch` must hold d * N values.
  void apply_inplace(std::span<cplx> components, std::span<cplx> scratch) const;

  /// Position-space kernel m(x) = N^{-1} sum_k m^(k) e^{i xi.x}, laid out like
  /// the symbol (site-major, d x d row-major per site).
  std::vector<cplx> kernel() const;

 private:
  TorusGrid grid_;
  std::vector<cplx> symbol_;
  bool hermitian_;
};

/// K = grad (-Delta)^+ grad^*: symbol q q^dagger / |q|^2, zero at k = 0.
FourierMultiplier make_K(const TorusGrid& grid);

VectorField apply_multiplier(const FourierMultiplier& m, const VectorField& g);

/// Pseudo-inverse of -Delta on scalar fields (symbol 1/|q|^2, 0 at k = 0).
ScalarField apply_laplacian_pinv(const ScalarField& f);

/// One realization of the coefficient field sigma with its sup bound C.
struct DisorderSample {
  DisorderSample(TorusGrid grid, std::vector<double> sigma, double bound);

  TorusGrid grid;
  std::vector<double> sigma;
  double bound;
};

/// L f = grad^*((1 + delta sigma) grad f), by stencil.
ScalarField apply_L(const DisorderSample& sample, double delta, const ScalarField& f);

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iterations = 0;  // 0 selects 50 * L
};

/// Preconditioned conjugate gradients for L u = f on the mean-zero sector,
/// preconditioner (-Delta)^+. Throws NotMeanZero, DeltaTooLarge, NoConvergence.
std::pair<ScalarField, SolveReport> solve_L(const DisorderSample& sample, double delta,
                                            const ScalarField& f, SolveOptions options = {});

/// T = K sigma_1 K sigma_2 ... K sigma_s acting on VectorFields.
class ChainOperator {
 public:
  ChainOperator(TorusGrid grid, std::vector<DisorderSample> sigmas);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t length() const noexcept { return sigmas_.size(); }

  VectorField apply(const VectorField& g) const;
  /// Kernel column T(., source): site-major, d x d row-major per site.
  std::vector<cplx> column(std::size_t source) const;

 private:
  TorusGrid grid_;
  std::shared_ptr<const FourierMultiplier> k_;
  std::vector<DisorderSample> sigmas_;
};

ChainOperator compose_chain(std::vector<DisorderSample> sigmas, const TorusGrid& grid);

}  // namespace homlab
