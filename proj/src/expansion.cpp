#include "homlab/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "homlab/error.hpp"
#include "homlab/operators.hpp"
#include "homlab/parallel.hpp"

namespace homlab {

std::size_t TermEstimate::probes() const noexcept {
  const auto dd = static_cast<std::size_t>(dim * dim);
  return dd == 0 ? 0 : unit_value.size() / dd;
}

double TermEstimate::scale() const { return std::pow(delta, order + 1); }

TermEstimate TermEstimate::at_delta(double other) const {
  TermEstimate out = *this;
  out.delta = other;
  return out;
}

namespace {

void check_ensemble(int max_order, const Ensemble& ensemble) {
  if (max_order < 1) throw Error(ErrorCode::InvalidArgument, "series order must be >= 1");
  if (ensemble.size() < 2) throw Error(ErrorCode::EnsembleTooSmall, "series estimates need M >= 2");
}

/// Weighted mean and standard error of one estimator across the ensemble.
/// Exhaustive ensembles are exact expectations, so their error is zero.
std::pair<cplx, double> reduce(std::span<const cplx> per_sample, std::span<const double> weights, bool exact) {
  cplx mean = 0.0;
  for (std::size_t m = 0; m < per_sample.size(); ++m) mean += weights[m] * per_sample[m];
  if (exact) return {mean, 0.0};
  double ss = 0.0;
  for (const auto& v : per_sample) ss += std::norm(v - mean);
  const auto count = static_cast<double>(per_sample.size());
  return {mean, std::sqrt(ss / (count * (count - 1.0)))};
}

/// Mean from the raw values, standard error from the pseudo-values.
std::pair<cplx, double> reduce(std::span<const cplx> raw, std::span<const cplx> pseudo,
                               std::span<const double> weights, bool exact) {
  cplx mean = 0.0;
  for (std::size_t m = 0; m < raw.size(); ++m) mean += weights[m] * raw[m];
  if (exact) return {mean, 0.0};
  return {mean, reduce(pseudo, weights, false).second};
}

using StageCallback =
    std::function<void(int order, std::span<const cplx> states, std::span<const cplx> pseudo)>;

/// Averaged chain operators E[sigma (K sigma)^r], r = 1..r_max, as Fourier
/// multipliers read off one kernel column at site 0.
std::vector<FourierMultiplier> averaged_chain_operators(const Ensemble& ensemble, int r_max, int workers,
                                                        const FourierMultiplier& k) {
  const auto& grid = ensemble.grid;
  const std::size_t n = grid.sites();
  const auto d = static_cast<std::size_t>(grid.dim());
  const std::size_t stride = n * d;
  const std::size_t count = ensemble.size();
  const auto rs = static_cast<std::size_t>(std::max(r_max, 0));
  std::vector<std::vector<cplx>> symbols(rs, std::vector<cplx>(n * d * d));
  std::vector<cplx> states(count * stride);
  std::vector<cplx> column(stride);
  for (std::size_t b = 0; b < d && rs > 0; ++b) {
    parallel_for(count, workers, [&](std::size_t m) {
      cplx* s = states.data() + m * stride;
      std::fill(s, s + stride, cplx{});
      s[b * n] = ensemble.samples[m].sigma[0];
    });
    for (std::size_t r = 1; r <= rs; ++r) {
      parallel_for(count, workers, [&](std::size_t m) {
        std::vector<cplx> scratch(stride);
        auto s = std::span<cplx>(states).subspan(m * stride, stride);
        k.apply_inplace(s, scratch);
        const auto& sigma = ensemble.samples[m].sigma;
        for (std::size_t j = 0; j < d; ++j)
          for (std::size_t x = 0; x < n; ++x) s[j * n + x] *= sigma[x];
      });
      std::fill(column.begin(), column.end(), cplx{});
      for (std::size_t m = 0; m < count; ++m)
        for (std::size_t i = 0; i < stride; ++i) column[i] += ensemble.weights[m] * states[m * stride + i];
      for (std::size_t a = 0; a < d; ++a) {
        auto comp = std::span<cplx>(column).subspan(a * n, n);
        dft_inplace(grid, comp);
        for (std::size_t f = 0; f < n; ++f) symbols[r - 1][f * d * d + a * d + b] = comp[f];
      }
    }
  }
  std::vector<FourierMultiplier> out;
  for (auto& sym : symbols) out.emplace_back(grid, std::move(sym), false);
  return out;
}

/// Propagates `input` (d*N values, shared by all samples) through the chain
/// b (K P-perp b)^n. After each order the callback sees the M stacked states
/// b (K P-perp b)^n input, and for sampled ensembles their pseudo-values:
/// the states plus the first-order effect each sample has on the others
/// through the empirical means removed at every centering.
void run_chain(const Ensemble& ensemble, std::span<const cplx> input, int max_order, int workers,
               const FourierMultiplier& k, const StageCallback& on_order) {
  const auto& grid = ensemble.grid;
  const std::size_t n = grid.sites();
  const auto d = static_cast<std::size_t>(grid.dim());
  const std::size_t stride = n * d;
  const std::size_t count = ensemble.size();
  const bool linearize = !ensemble.exact && max_order > 1;
  std::vector<cplx> states(count * stride);
  for (std::size_t m = 0; m < count; ++m)
    std::copy(input.begin(), input.end(), states.begin() + static_cast<std::ptrdiff_t>(m * stride));

  // t_ops[r-1] = E[sigma (K sigma)^r]; r = 0 averages to zero and is dropped.
  std::vector<FourierMultiplier> t_ops;
  std::vector<cplx> history;  // K du^(t) per sample, t = 1..max_order
  std::vector<cplx> pseudo;
  if (linearize) {
    t_ops = averaged_chain_operators(ensemble, max_order - 1, workers, k);
    history.resize(static_cast<std::size_t>(max_order) * count * stride);
    pseudo.resize(count * stride);
  }
  auto hist = [&](int t, std::size_t m) {
    return std::span<cplx>(history).subspan((static_cast<std::size_t>(t - 1) * count + m) * stride, stride);
  };
  // acc -= sum_{t=1}^{upto} T_{order-t} h^(t), skipping r = 0.
  auto subtract_feedback = [&](int order, int upto, std::size_t m, std::span<cplx> acc, std::span<cplx> work,
                               std::span<cplx> scratch) {
    for (int t = 1; t <= upto; ++t) {
      const int r = order - t;
      if (r < 1) continue;
      auto h = hist(t, m);
      std::copy(h.begin(), h.end(), work.begin());
      t_ops[static_cast<std::size_t>(r - 1)].apply_inplace(work, scratch);
      for (std::size_t i = 0; i < stride; ++i) acc[i] -= work[i];
    }
  };

  auto multiply_sigma = [&](std::size_t m) {
    const auto& sigma = ensemble.samples[m].sigma;
    cplx* s = states.data() + m * stride;
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t x = 0; x < n; ++x) s[j * n + x] *= sigma[x];
  };

  for (int order = 1;; ++order) {
    parallel_for(count, workers, multiply_sigma);
    if (order > 1) {
      if (linearize) {
        parallel_for(count, workers, [&](std::size_t m) {
          std::vector<cplx> work(stride), scratch(stride);
          auto acc = std::span<cplx>(pseudo).subspan(m * stride, stride);
          std::copy_n(states.begin() + static_cast<std::ptrdiff_t>(m * stride), stride, acc.begin());
          subtract_feedback(order - 1, order - 1, m, acc, work, scratch);
        });
      }
      on_order(order - 1, states, pseudo);
    }
    if (order > max_order) break;
    center_stage(states, count, stride, ensemble.weights, workers);
    if (linearize) {
      // du^(t) = c^(t) - sum_{t' < t} T_{t-1-t'} K du^(t'), stored as K du^(t).
      parallel_for(count, workers, [&](std::size_t m) {
        std::vector<cplx> work(stride), scratch(stride);
        auto h = hist(order, m);
        std::copy_n(states.begin() + static_cast<std::ptrdiff_t>(m * stride), stride, h.begin());
        subtract_feedback(order - 1, order - 1, m, h, work, scratch);
        k.apply_inplace(h, scratch);
      });
    }
    parallel_for(count, workers, [&](std::size_t m) {
      std::vector<cplx> scratch(stride);
      k.apply_inplace(std::span<cplx>(states).subspan(m * stride, stride), scratch);
    });
  }
}

TermEstimate blank_estimate(int order, ProbeKind kind, const Ensemble& ensemble, double delta) {
  TermEstimate t;
  t.order = order;
  t.kind = kind;
  t.dim = ensemble.grid.dim();
  t.side = ensemble.grid.side();
  t.delta = delta;
  t.samples = ensemble.size();
  t.exact = ensemble.exact;
  t.seed = ensemble.master_seed;
  return t;
}

}  // namespace

std::vector<TermEstimate> estimate_terms_symbol(int max_order, const Ensemble& ensemble, double delta,
                                                std::span<const FreqVector> freqs, int workers) {
  check_ensemble(max_order, ensemble);
  const auto& grid = ensemble.grid;
  for (const auto& f : freqs) {
    if (f.dim() != grid.dim()) throw Error(ErrorCode::InvalidArgument, "probe frequency has wrong dimension");
    if (f.is_zero()) throw Error(ErrorCode::ZeroFrequency, "symbol probes must be nonzero");
  }
  const std::size_t n = grid.sites();
  const auto d = static_cast<std::size_t>(grid.dim());
  const std::size_t count = ensemble.size();
  const std::size_t probes = freqs.size();
  const std::size_t per_order = probes * d * d * count;
  const auto orders = static_cast<std::size_t>(max_order);

  auto per_sample = std::make_shared<std::vector<cplx>>(orders * per_order);
  std::vector<cplx> raw(orders * per_order);
  const FourierMultiplier k = make_K(grid);

  for (std::size_t p = 0; p < probes; ++p) {
    const ScalarField wave = plane_wave(grid, freqs[p]);
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<cplx> input(n * d);
      std::copy(wave.values().begin(), wave.values().end(), input.begin() + static_cast<std::ptrdiff_t>(j * n));
      run_chain(ensemble, input, max_order, workers, k,
                [&](int order, std::span<const cplx> states, std::span<const cplx> pseudo) {
                  const std::size_t at = static_cast<std::size_t>(order - 1) * per_order;
                  const bool split = !pseudo.empty();
                  parallel_for(count, workers, [&](std::size_t m) {
                    const cplx* s = states.data() + m * n * d;
                    const cplx* ps = split ? pseudo.data() + m * n * d : nullptr;
                    for (std::size_t i = 0; i < d; ++i) {
                      cplx acc = 0.0, pacc = 0.0;
                      for (std::size_t x = 0; x < n; ++x) acc += std::conj(wave[x]) * s[i * n + x];
                      if (split)
                        for (std::size_t x = 0; x < n; ++x) pacc += std::conj(wave[x]) * ps[i * n + x];
                      const std::size_t slot = at + ((p * d + i) * d + j) * count + m;
                      raw[slot] = acc / static_cast<double>(n);
                      (*per_sample)[slot] = split ? pacc / static_cast<double>(n) : raw[slot];
                    }
                  });
                });
    }
  }

  auto weights = std::make_shared<const std::vector<double>>(ensemble.weights);
  std::vector<TermEstimate> terms;
  for (int order = 1; order <= max_order; ++order) {
    TermEstimate t = blank_estimate(order, ProbeKind::Symbol, ensemble, delta);
    t.freqs.assign(freqs.begin(), freqs.end());
    t.unit_value.resize(probes * d * d);
    t.unit_stderr.resize(probes * d * d);
    const std::size_t at = static_cast<std::size_t>(order - 1) * per_order;
    for (std::size_t e = 0; e < probes * d * d; ++e) {
      auto [mean, err] = reduce(std::span<const cplx>(raw.data() + at + e * count, count),
                                std::span<const cplx>(per_sample->data() + at + e * count, count),
                                ensemble.weights, ensemble.exact);
      t.unit_value[e] = mean;
      t.unit_stderr[e] = err;
    }
    t.unit_per_sample = per_sample;
    t.weights = weights;
    terms.push_back(std::move(t));
  }
  return terms;
}

TermEstimate estimate_term_symbol(int order, const Ensemble& ensemble, double delta,
                                  std::span<const FreqVector> freqs, int workers) {
  return estimate_terms_symbol(order, ensemble, delta, freqs, workers).back();
}

std::vector<TermEstimate> estimate_terms_kernel(int max_order, const Ensemble& ensemble, double delta,
                                                std::size_t source, int workers) {
  check_ensemble(max_order, ensemble);
  const auto& grid = ensemble.grid;
  if (source >= grid.sites()) throw Error(ErrorCode::InvalidArgument, "kernel source outside the lattice");
  const std::size_t n = grid.sites();
  const auto d = static_cast<std::size_t>(grid.dim());
  const std::size_t count = ensemble.size();
  const FourierMultiplier k = make_K(grid);

  std::vector<TermEstimate> terms;
  for (int order = 1; order <= max_order; ++order) {
    TermEstimate t = blank_estimate(order, ProbeKind::Kernel, ensemble, delta);
    t.source = source;
    t.unit_value.resize(n * d * d);
    t.unit_stderr.resize(n * d * d);
    terms.push_back(std::move(t));
  }

  for (std::size_t j = 0; j < d; ++j) {
    std::vector<cplx> input(n * d);
    input[j * n + source] = 1.0;
    run_chain(ensemble, input, max_order, workers, k,
              [&](int order, std::span<const cplx> states, std::span<const cplx> pseudo) {
      TermEstimate& t = terms[static_cast<std::size_t>(order - 1)];
      const auto& ps = pseudo.empty() ? states : pseudo;
      parallel_for(n, workers, [&](std::size_t x) {
        std::vector<cplx> column(count), pcolumn(count);
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t m = 0; m < count; ++m) {
            column[m] = states[m * n * d + i * n + x];
            pcolumn[m] = ps[m * n * d + i * n + x];
          }
          auto [mean, err] = reduce(column, pcolumn, ensemble.weights, ensemble.exact);
          t.unit_value[t.entry(x, static_cast<int>(i), static_cast<int>(j))] = mean;
          t.unit_stderr[t.entry(x, static_cast<int>(i), static_cast<int>(j))] = err;
        }
      });
    });
  }
  return terms;
}

TermEstimate estimate_term_kernel(int order, const Ensemble& ensemble, double delta, std::size_t source,
                                  int workers) {
  return estimate_terms_kernel(order, ensemble, delta, source, workers).back();
}

int series_sign(SignConvention convention, int order) {
  const int alternating = (order % 2 == 0) ? 1 : -1;
  return convention == SignConvention::Alternating ? alternating : -alternating;
}

std::vector<int> series_signs(SignConvention convention, int truncation) {
  std::vector<int> out;
  for (int n = 1; n <= truncation; ++n) out.push_back(series_sign(convention, n));
  return out;
}

const char* to_string(SignConvention convention) {
  return convention == SignConvention::Alternating ? "alternating" : "printed";
}

K1Series assemble_K1(std::span<const TermEstimate> terms, std::span<const int> signs, int truncation) {
  if (truncation < 1) throw Error(ErrorCode::InvalidArgument, "truncation order must be >= 1");
  if (signs.size() < static_cast<std::size_t>(truncation))
    throw Error(ErrorCode::InvalidArgument, "need one sign per retained order");
  K1Series series;
  series.truncation = truncation;
  series.tail_order = truncation + 2;
  series.signs.assign(signs.begin(), signs.begin() + truncation);

  for (int order = 1; order <= truncation; ++order) {
    const TermEstimate* found = nullptr;
    for (const auto& t : terms)
      if (t.order == order) found = &t;
    if (!found) throw Error(ErrorCode::InconsistentProbes, "missing term of order " + std::to_string(order));
    series.terms.push_back(*found);
  }
  const TermEstimate& first = series.terms.front();
  for (const auto& t : series.terms) {
    if (t.kind != first.kind || t.dim != first.dim || t.side != first.side || t.freqs != first.freqs ||
        t.source != first.source || t.unit_value.size() != first.unit_value.size() || t.delta != first.delta ||
        t.samples != first.samples)
      throw Error(ErrorCode::InconsistentProbes, "series terms were estimated on different probes");
  }

  const std::size_t entries = first.unit_value.size();
  series.value.assign(entries, 0.0);
  series.stderr.assign(entries, 0.0);
  for (std::size_t o = 0; o < series.terms.size(); ++o) {
    const auto& t = series.terms[o];
    const double c = series.signs[o] * t.scale();
    for (std::size_t e = 0; e < entries; ++e) series.value[e] += c * t.unit_value[e];
  }
  if (first.exact) return series;

  // Same samples feed every order, so combine per sample when the pass kept
  // them; otherwise fall back to root-sum-square.
  bool shared = first.unit_per_sample != nullptr;
  for (const auto& t : series.terms) shared = shared && t.unit_per_sample == first.unit_per_sample;
  const std::size_t count = first.samples;
  if (shared) {
    const std::size_t per_order = entries * count;
    std::vector<cplx> combined(count);
    for (std::size_t e = 0; e < entries; ++e) {
      std::fill(combined.begin(), combined.end(), cplx{});
      for (std::size_t o = 0; o < series.terms.size(); ++o) {
        const auto& t = series.terms[o];
        const double c = series.signs[o] * t.scale();
        const cplx* src = t.unit_per_sample->data() + static_cast<std::size_t>(t.order - 1) * per_order + e * count;
        for (std::size_t m = 0; m < count; ++m) combined[m] += c * src[m];
      }
      series.stderr[e] = reduce(combined, *first.weights, false).second;
    }
  } else {
    for (std::size_t e = 0; e < entries; ++e) {
      double ss = 0.0;
      for (const auto& t : series.terms) ss += std::pow(std::abs(t.scale()) * t.unit_stderr[e], 2);
      series.stderr[e] = std::sqrt(ss);
    }
  }
  return series;
}

K1Table k1_projection(const K1Series& series) {
  const TermEstimate& layout = series.layout();
  if (layout.kind != ProbeKind::Symbol)
    throw Error(ErrorCode::InvalidArgument, "k1 projection needs symbol probes");
  const auto d = static_cast<std::size_t>(layout.dim);
  const std::size_t count = layout.samples;
  K1Table table;
  table.dim = layout.dim;
  table.side = layout.side;
  table.delta = layout.delta;
  table.samples = count;
  table.seed = layout.seed;
  table.source = "expansion";

  bool shared = !layout.exact && layout.unit_per_sample != nullptr;
  for (const auto& t : series.terms) shared = shared && t.unit_per_sample == layout.unit_per_sample;
  const std::size_t per_order = layout.unit_value.size() * count;

  for (std::size_t p = 0; p < layout.freqs.size(); ++p) {
    const auto& f = layout.freqs[p];
    const auto q = f.q_vector(layout.side);
    const double q2 = laplacian_symbol(f, layout.side);
    cplx v = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        v += std::conj(q[i]) * q[j] * series.value[layout.entry(p, static_cast<int>(i), static_cast<int>(j))];
    SymbolPoint point{f, f.norm(layout.side), v.real() / q2, 0.0};
    if (shared) {
      std::vector<cplx> combined(count);
      for (std::size_t o = 0; o < series.terms.size(); ++o) {
        const auto& t = series.terms[o];
        const double c = series.signs[o] * t.scale();
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) {
            const cplx w = c * std::conj(q[i]) * q[j] / q2;
            const cplx* src = t.unit_per_sample->data() + static_cast<std::size_t>(t.order - 1) * per_order +
                              layout.entry(p, static_cast<int>(i), static_cast<int>(j)) * count;
            for (std::size_t m = 0; m < count; ++m) combined[m] += w * src[m];
          }
      }
      std::vector<cplx> real_part(count);
      for (std::size_t m = 0; m < count; ++m) real_part[m] = combined[m].real();
      point.stderr = reduce(real_part, *layout.weights, false).second;
    } else if (!layout.exact) {
      double ss = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          ss += std::pow(std::abs(q[i]) * std::abs(q[j]) / q2 *
                             series.stderr[layout.entry(p, static_cast<int>(i), static_cast<int>(j))],
                         2);
      point.stderr = std::sqrt(ss);
    }
    table.points.push_back(point);
  }
  return table;
}

}  // namespace homlab
