#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "homlab/annealed.hpp"
#include "homlab/error.hpp"

namespace homlab {

const char* to_string(FitMode mode) { return mode == FitMode::Symbol ? "symbol" : "kernel"; }

namespace {

void solve_line(DecayFit& fit, std::size_t min_points = 4) {
  const std::size_t n = fit.log_x.size();
  if (n < std::max<std::size_t>(min_points, 3))
    throw Error(ErrorCode::InsufficientPoints,
                "decay fit needs at least " + std::to_string(min_points) + " points, have " + std::to_string(n));
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += fit.weights[i];
    sx += fit.weights[i] * fit.log_x[i];
    sy += fit.weights[i] * fit.log_y[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = fit.log_x[i] - mx;
    sxx += fit.weights[i] * dx * dx;
    sxy += fit.weights[i] * dx * (fit.log_y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InsufficientPoints, "decay fit needs distinct abscissae");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  // Residual scale rather than trusting the weights' absolute level.
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = fit.log_y[i] - fit.intercept - fit.slope * fit.log_x[i];
    rss += fit.weights[i] * r * r;
  }
  const double dof = static_cast<double>(n) - 2.0;
  const double se = std::sqrt(rss / dof / sxx);
  const boost::math::students_t dist(dof);
  fit.ci95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
}

}  // namespace

DecayFit DecayFit::refit() const {
  DecayFit out = *this;
  solve_line(out);
  return out;
}

DecayFit fit_decay(std::span<const DecayPoint> points, const FitOptions& options) {
  DecayFit fit;
  fit.mode = options.mode;

  std::vector<DecayPoint> kept;
  for (const auto& p : points) {
    if (!(p.abscissa > 0.0)) continue;
    if (!(p.magnitude > 0.0) || (p.stderr > 0.0 && p.magnitude <= options.zero_sigma * p.stderr)) {
      ++fit.excluded;
      continue;
    }
    kept.push_back(p);
  }

  double lo = options.lo;
  double hi = options.hi;
  if (options.mode == FitMode::Kernel) {
    if (lo <= 0.0) lo = 2.0;
    if (hi <= 0.0) {
      if (options.side < 2) throw Error(ErrorCode::InvalidArgument, "default kernel fit range needs the lattice side");
      hi = options.side / 4.0;
    }
  } else if (lo <= 0.0 || hi <= 0.0) {
    double smallest = 0.0;
    for (const auto& p : kept)
      if (smallest == 0.0 || p.abscissa < smallest) smallest = p.abscissa;
    if (lo <= 0.0) lo = smallest;
    if (hi <= 0.0) hi = 4.0 * lo;
  }
  fit.range_lo = lo;
  fit.range_hi = hi;
  const double slack = 1e-9;
  std::erase_if(kept, [&](const DecayPoint& p) {
    return p.abscissa < lo * (1.0 - slack) || p.abscissa > hi * (1.0 + slack);
  });

  if (options.mode == FitMode::Kernel) {
    // Sup over each bin of width 2^{1/bins_per_octave}, placed at the
    // abscissa where the maximum is attained.
    std::map<long, DecayPoint> bins;
    for (const auto& p : kept) {
      const long b = static_cast<long>(std::floor(std::log2(p.abscissa / lo) * options.bins_per_octave + 1e-9));
      auto [it, inserted] = bins.emplace(b, p);
      if (!inserted && p.magnitude > it->second.magnitude) it->second = p;
    }
    kept.clear();
    for (const auto& [b, p] : bins) kept.push_back(p);
  } else {
    std::stable_sort(kept.begin(), kept.end(),
                     [](const DecayPoint& a, const DecayPoint& b) { return a.abscissa < b.abscissa; });
  }

  bool weighted = !kept.empty();
  for (const auto& p : kept) weighted = weighted && p.stderr > 0.0;
  for (const auto& p : kept) {
    fit.log_x.push_back(std::log(p.abscissa));
    fit.log_y.push_back(std::log(p.magnitude));
    const double rel = weighted ? p.stderr / p.magnitude : 1.0;
    fit.weights.push_back(1.0 / (rel * rel));
  }
  solve_line(fit);
  return fit;
}

double fit_range_sensitivity(const DecayFit& fit) {
  double worst = 0.0;
  for (int end = 0; end < 2; ++end) {
    DecayFit shrunk = fit;
    const auto drop = end == 0 ? 0 : static_cast<std::ptrdiff_t>(fit.n_points() - 1);
    shrunk.log_x.erase(shrunk.log_x.begin() + drop);
    shrunk.log_y.erase(shrunk.log_y.begin() + drop);
    shrunk.weights.erase(shrunk.weights.begin() + drop);
    solve_line(shrunk, 3);
    worst = std::max(worst, std::abs(shrunk.slope - fit.slope));
  }
  return worst;
}

}  // namespace homlab
