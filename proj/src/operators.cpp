#include "homlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "homlab/error.hpp"

namespace homlab {

FourierMultiplier::FourierMultiplier(TorusGrid grid, std::vector<cplx> symbol, bool hermitian)
    : grid_(grid), symbol_(std::move(symbol)), hermitian_(hermitian) {
  const auto d = static_cast<std::size_t>(grid_.dim());
  if (symbol_.size() != grid_.sites() * d * d)
    throw Error(ErrorCode::InvalidArgument, "multiplier symbol must hold d*d entries per frequency");
  if (!hermitian_) return;
  for (std::size_t k = 0; k < grid_.sites(); ++k) {
    auto m = at(k);
    double scale = 0.0;
    for (const auto& v : m) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (std::abs(m[i * d + j] - std::conj(m[j * d + i])) > 1e-12 * std::max(scale, 1.0))
          throw Error(ErrorCode::InvalidArgument,
                      "multiplier flagged Hermitian is not Hermitian at frequency " + std::to_string(k));
  }
}

FourierMultiplier FourierMultiplier::identity(const TorusGrid& grid) {
  const auto d = static_cast<std::size_t>(grid.dim());
  std::vector<cplx> symbol(grid.sites() * d * d);
  for (std::size_t k = 0; k < grid.sites(); ++k)
    for (std::size_t i = 0; i < d; ++i) symbol[k * d * d + i * d + i] = 1.0;
  return FourierMultiplier(grid, std::move(symbol), true);
}

void FourierMultiplier::apply_inplace(std::span<cplx> components, std::span<cplx> scratch) const {
  const auto n = grid_.sites();
  const auto d = static_cast<std::size_t>(grid_.dim());
  if (components.size() != n * d || scratch.size() < n * d)
    throw Error(ErrorCode::InvalidArgument, "multiplier input has wrong size");
  for (std::size_t j = 0; j < d; ++j) dft_inplace(grid_, components.subspan(j * n, n));
  if (d == 1) {
    for (std::size_t k = 0; k < n; ++k) components[k] *= symbol_[k];
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      const cplx* m = symbol_.data() + k * d * d;
      for (std::size_t i = 0; i < d; ++i) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += m[i * d + j] * components[j * n + k];
        scratch[i * n + k] = s;
      }
    }
    std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(n * d), components.begin());
  }
  for (std::size_t j = 0; j < d; ++j) idft_inplace(grid_, components.subspan(j * n, n));
}

std::vector<cplx> FourierMultiplier::kernel() const {
  const auto n = grid_.sites();
  const auto dd = static_cast<std::size_t>(grid_.dim() * grid_.dim());
  std::vector<cplx> out(n * dd);
  std::vector<cplx> entry(n);
  for (std::size_t e = 0; e < dd; ++e) {
    for (std::size_t k = 0; k < n; ++k) entry[k] = symbol_[k * dd + e];
    idft_inplace(grid_, entry);
    for (std::size_t x = 0; x < n; ++x) out[x * dd + e] = entry[x];
  }
  return out;
}

FourierMultiplier make_K(const TorusGrid& grid) {
  const auto d = static_cast<std::size_t>(grid.dim());
  std::vector<cplx> symbol(grid.sites() * d * d);
  for (std::size_t k = 1; k < grid.sites(); ++k) {
    const auto freq = frequency_of(grid, k);
    const auto q = freq.q_vector(grid.side());
    const double q2 = laplacian_symbol(freq, grid.side());
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) symbol[k * d * d + i * d + j] = q[i] * std::conj(q[j]) / q2;
  }
  return FourierMultiplier(grid, std::move(symbol), true);
}

VectorField apply_multiplier(const FourierMultiplier& m, const VectorField& g) {
  if (!(m.grid() == g.grid())) throw Error(ErrorCode::InvalidArgument, "multiplier and field grids differ");
  VectorField out = g;
  std::vector<cplx> scratch(out.data().size());
  m.apply_inplace(out.data(), scratch);
  return out;
}

ScalarField apply_laplacian_pinv(const ScalarField& f) {
  const auto& grid = f.grid();
  auto spec = dft(f);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < grid.sites(); ++k)
    spec[k] /= laplacian_symbol(frequency_of(grid, k), grid.side());
  return idft(grid, std::move(spec));
}

DisorderSample::DisorderSample(TorusGrid grid_, std::vector<double> sigma_, double bound_)
    : grid(grid_), sigma(std::move(sigma_)), bound(bound_) {
  if (sigma.size() != grid.sites())
    throw Error(ErrorCode::InvalidArgument, "disorder sample length does not match lattice size");
  for (double s : sigma)
    if (!(std::abs(s) <= bound))
      throw Error(ErrorCode::InvalidSpec, "disorder value exceeds its declared bound");
}

ScalarField apply_L(const DisorderSample& sample, double delta, const ScalarField& f) {
  if (!(sample.grid == f.grid())) throw Error(ErrorCode::InvalidArgument, "sample and field grids differ");
  VectorField g = grad(f);
  for (int j = 0; j < f.grid().dim(); ++j) {
    auto c = g.component(j);
    for (std::size_t x = 0; x < c.size(); ++x) c[x] *= 1.0 + delta * sample.sigma[x];
  }
  return grad_adjoint(g);
}

std::pair<ScalarField, SolveReport> solve_L(const DisorderSample& sample, double delta,
                                            const ScalarField& f, SolveOptions options) {
  const auto& grid = f.grid();
  if (std::abs(delta) * sample.bound >= 1.0)
    throw Error(ErrorCode::DeltaTooLarge, "|delta| * C must be < 1");
  if (!f.is_mean_zero(1e-12)) throw Error(ErrorCode::NotMeanZero, "right-hand side has a k=0 component");
  const int cap = options.max_iterations > 0 ? options.max_iterations : 50 * grid.side();

  SolveReport report;
  ScalarField u(grid);
  const double fnorm = norm2(f.values());
  if (fnorm == 0.0) {
    report.converged = true;
    return {u, report};
  }

  ScalarField r = f;
  ScalarField z = apply_laplacian_pinv(r);
  ScalarField p = z;
  cplx rz = inner(r.values(), z.values());
  double rel = 1.0;
  const auto n = grid.sites();

  while (report.iterations < cap) {
    ScalarField ap = apply_L(sample, delta, p);
    const cplx alpha = rz / inner(p.values(), ap.values());
    for (std::size_t x = 0; x < n; ++x) {
      u[x] += alpha * p[x];
      r[x] -= alpha * ap[x];
    }
    ++report.iterations;
    rel = norm2(r.values()) / fnorm;
    if (rel <= options.tol) {
      // Confirm against the true residual before accepting.
      ScalarField lu = apply_L(sample, delta, u);
      for (std::size_t x = 0; x < n; ++x) r[x] = f[x] - lu[x];
      rel = norm2(r.values()) / fnorm;
      if (rel <= options.tol) break;
    }
    z = apply_laplacian_pinv(r);
    const cplx rz_next = inner(r.values(), z.values());
    const cplx beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t x = 0; x < n; ++x) p[x] = z[x] + beta * p[x];
  }

  const cplx m = u.mean();
  for (auto& v : u.values()) v -= m;
  report.relative_residual = rel;
  report.converged = rel <= options.tol;
  if (!report.converged)
    throw Error(ErrorCode::NoConvergence, "solver stopped after " + std::to_string(report.iterations) +
                                              " iterations at relative residual " + std::to_string(rel));
  return {u, report};
}

ChainOperator::ChainOperator(TorusGrid grid, std::vector<DisorderSample> sigmas)
    : grid_(grid), k_(std::make_shared<const FourierMultiplier>(make_K(grid))), sigmas_(std::move(sigmas)) {
  if (sigmas_.empty()) throw Error(ErrorCode::InvalidArgument, "chain needs at least one factor");
  for (const auto& s : sigmas_)
    if (!(s.grid == grid_)) throw Error(ErrorCode::InvalidArgument, "chain factors live on different grids");
}

VectorField ChainOperator::apply(const VectorField& g) const {
  VectorField out = g;
  std::vector<cplx> scratch(out.data().size());
  const auto n = grid_.sites();
  for (auto it = sigmas_.rbegin(); it != sigmas_.rend(); ++it) {
    for (int j = 0; j < grid_.dim(); ++j) {
      auto c = out.component(j);
      for (std::size_t x = 0; x < n; ++x) c[x] *= it->sigma[x];
    }
    k_->apply_inplace(out.data(), scratch);
  }
  return out;
}

std::vector<cplx> ChainOperator::column(std::size_t source) const {
  const auto n = grid_.sites();
  const auto d = static_cast<std::size_t>(grid_.dim());
  std::vector<cplx> out(n * d * d);
  for (std::size_t j = 0; j < d; ++j) {
    VectorField e(grid_);
    e.at(static_cast<int>(j), source) = 1.0;
    VectorField t = apply(e);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t i = 0; i < d; ++i) out[x * d * d + i * d + j] = t.at(static_cast<int>(i), x);
  }
  return out;
}

ChainOperator compose_chain(std::vector<DisorderSample> sigmas, const TorusGrid& grid) {
  return ChainOperator(grid, std::move(sigmas));
}

}  // namespace homlab
