#include "homlab/annealed.hpp"

#include <algorithm>
#include <cmath>

#include "homlab/error.hpp"
#include "homlab/parallel.hpp"

namespace homlab {

K1Table AnnealedSymbol::k1_table() const {
  K1Table table;
  table.dim = grid.dim();
  table.side = grid.side();
  table.delta = delta;
  table.samples = samples();
  table.seed = seed;
  table.source = "annealed";
  for (std::size_t p = 0; p < freqs.size(); ++p)
    table.points.push_back({freqs[p], freqs[p].norm(grid.side()), k1(p), k1_stderr(p)});
  return table;
}

AnnealedSymbol annealed_symbol(const Ensemble& ensemble, double delta, std::span<const FreqVector> freqs,
                               double tol, int workers) {
  const auto& grid = ensemble.grid;
  if (ensemble.size() < 2) throw Error(ErrorCode::EnsembleTooSmall, "annealed average needs M >= 2");
  for (const auto& s : ensemble.samples)
    if (std::abs(delta) * s.bound >= 1.0) throw Error(ErrorCode::DeltaTooLarge, "|delta| * C must be < 1");
  for (const auto& f : freqs)
    if (f.is_zero()) throw Error(ErrorCode::ZeroFrequency, "resolvent probes must be nonzero");

  const std::size_t count = ensemble.size();
  const std::size_t probes = freqs.size();
  AnnealedSymbol out;
  out.grid = grid;
  out.delta = delta;
  out.freqs.assign(freqs.begin(), freqs.end());
  out.per_sample.assign(probes * count, 0.0);
  out.weights = ensemble.weights;
  out.exact = ensemble.exact;
  out.seed = ensemble.master_seed;

  std::vector<ScalarField> waves;
  for (const auto& f : freqs) waves.push_back(plane_wave(grid, f));
  std::vector<int> iterations(count, 0);
  const SolveOptions options{tol, 0};
  const double n = static_cast<double>(grid.sites());

  parallel_for(count, workers, [&](std::size_t m) {
    for (std::size_t p = 0; p < probes; ++p) {
      auto [u, report] = solve_L(ensemble.samples[m], delta, waves[p], options);
      out.per_sample[p * count + m] = inner(waves[p].values(), u.values()).real() / n;
      iterations[m] = std::max(iterations[m], report.iterations);
    }
  });
  out.max_iterations_used = *std::max_element(iterations.begin(), iterations.end());

  out.resolvent.resize(probes);
  out.resolvent_stderr.resize(probes);
  for (std::size_t p = 0; p < probes; ++p) {
    const double* r = out.per_sample.data() + p * count;
    double mean = 0.0;
    for (std::size_t m = 0; m < count; ++m) mean += out.weights[m] * r[m];
    double err = 0.0;
    if (!out.exact) {
      double ss = 0.0;
      for (std::size_t m = 0; m < count; ++m) ss += (r[m] - mean) * (r[m] - mean);
      err = std::sqrt(ss / (static_cast<double>(count) * (static_cast<double>(count) - 1.0)));
    }
    out.resolvent[p] = mean;
    out.resolvent_stderr[p] = err;
  }
  return out;
}

std::vector<FluctuationPoint> k1_fluctuation(const AnnealedSymbol& symbol, std::optional<double> reference) {
  const std::size_t probes = symbol.freqs.size();
  std::vector<double> norms;
  for (const auto& f : symbol.freqs) norms.push_back(f.norm(symbol.grid.side()));
  {
    std::vector<double> distinct = norms;
    std::sort(distinct.begin(), distinct.end());
    auto last = std::unique(distinct.begin(), distinct.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); });
    if (std::distance(distinct.begin(), last) < 3)
      throw Error(ErrorCode::InsufficientProbes, "fluctuation needs at least 3 distinct |xi|");
  }

  const std::size_t count = symbol.samples();
  const std::size_t ref = static_cast<std::size_t>(std::min_element(norms.begin(), norms.end()) - norms.begin());
  const double ref_value = reference ? *reference : symbol.k1(ref);

  // Linearized influence of each sample on k1(p): -g (r_m - rbar) / rbar with
  // g = 1 / (|q|^2 rbar). Pairing with the reference cancels shared noise.
  auto influence = [&](std::size_t p, std::size_t m) {
    const double rbar = symbol.resolvent[p];
    const double g = 1.0 / (symbol.q2(p) * rbar);
    return -g * (symbol.per_sample[p * count + m] - rbar) / rbar;
  };

  std::vector<FluctuationPoint> out;
  for (std::size_t p = 0; p < probes; ++p) {
    FluctuationPoint point{symbol.freqs[p], norms[p], std::abs(symbol.k1(p) - ref_value), 0.0};
    if (!symbol.exact) {
      if (reference) {
        point.stderr = symbol.k1_stderr(p);
      } else if (p != ref) {
        double ss = 0.0;
        for (std::size_t m = 0; m < count; ++m) {
          const double diff = influence(p, m) - influence(ref, m);
          ss += diff * diff;
        }
        point.stderr = std::sqrt(ss / (static_cast<double>(count) * (static_cast<double>(count) - 1.0)));
      }
    }
    out.push_back(point);
  }
  return out;
}

double harmonic_mean_k1(const DistributionSpec& spec, double delta) {
  if (std::abs(delta) * spec.bound() >= 1.0) throw Error(ErrorCode::DeltaTooLarge, "|delta| * C must be < 1");
  if (delta == 0.0) return 0.0;
  double inv_mean = 0.0;
  if (spec.kind() == DistributionKind::UniformSymmetric) {
    const double t = spec.param_a() * delta;
    inv_mean = std::log((1.0 + t) / (1.0 - t)) / (2.0 * t);
  } else {
    for (const auto& a : spec.atoms()) inv_mean += a.probability / (1.0 + delta * a.value);
  }
  return 1.0 / inv_mean - 1.0;
}

}  // namespace homlab
