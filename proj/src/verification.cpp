#include "homlab/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "homlab/error.hpp"
#include "homlab/io.hpp"
#include "homlab/operators.hpp"
#include "homlab/parallel.hpp"

namespace homlab {

// ---------------------------------------------------------------------------
// Exhaustive averages
// ---------------------------------------------------------------------------

namespace {

/// Neumaier-compensated running sum of matrices.
struct CompensatedMatrix {
  Eigen::MatrixXd sum;
  Eigen::MatrixXd carry;

  explicit CompensatedMatrix(Eigen::Index n) : sum(Eigen::MatrixXd::Zero(n, n)), carry(Eigen::MatrixXd::Zero(n, n)) {}

  void add(const Eigen::MatrixXd& m, double weight) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) add_entry(i, j, weight * m(i, j));
  }
  void merge(const CompensatedMatrix& other) {
    for (Eigen::Index j = 0; j < sum.cols(); ++j)
      for (Eigen::Index i = 0; i < sum.rows(); ++i) {
        add_entry(i, j, other.sum(i, j));
        add_entry(i, j, other.carry(i, j));
      }
  }
  Eigen::MatrixXd total() const { return sum + carry; }

 private:
  void add_entry(Eigen::Index i, Eigen::Index j, double v) {
    double& s = sum(i, j);
    const double t = s + v;
    if (std::abs(s) >= std::abs(v))
      carry(i, j) += (s - t) + v;
    else
      carry(i, j) += (v - t) + s;
    s = t;
  }
};

/// Pseudo-inverse of a symmetric matrix whose kernel is exactly the constants.
Eigen::MatrixXd constant_kernel_pinv(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  const Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m + j);
  Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
  return inv - j;
}

/// L = grad^* diag(1 + delta sigma) grad assembled edge by edge.
Eigen::MatrixXd assemble_L(const TorusGrid& grid, std::span<const double> sigma, double delta) {
  const auto n = static_cast<Eigen::Index>(grid.sites());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t x = 0; x < grid.sites(); ++x) {
    const double a = 1.0 + delta * sigma[x];
    for (int j = 0; j < grid.dim(); ++j) {
      const auto xi = static_cast<Eigen::Index>(x);
      const auto yi = static_cast<Eigen::Index>(grid.shift(x, j, 1));
      l(xi, xi) += a;
      l(yi, yi) += a;
      l(xi, yi) -= a;
      l(yi, xi) -= a;
    }
  }
  return l;
}

}  // namespace

Eigen::MatrixXd dense_L(const DisorderSample& sample, double delta) {
  const auto& grid = sample.grid;
  const auto n = static_cast<Eigen::Index>(grid.sites());
  Eigen::MatrixXd m(n, n);
  for (std::size_t y = 0; y < grid.sites(); ++y) {
    const ScalarField col = apply_L(sample, delta, delta_field(grid, y));
    for (std::size_t x = 0; x < grid.sites(); ++x)
      m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = col[x].real();
  }
  return m;
}

K1Table ExactResult::k1_table() const {
  K1Table table;
  table.dim = grid.dim();
  table.side = grid.side();
  table.delta = delta;
  table.samples = configurations;
  table.source = "oracle";
  for (std::size_t p = 0; p < freqs.size(); ++p)
    table.points.push_back({freqs[p], freqs[p].norm(grid.side()), k1[p], 0.0});
  return table;
}

ExactResult enumerate_exact(const TorusGrid& grid, const DistributionSpec& spec, double delta, std::size_t cap,
                            int workers) {
  if (grid.sites() > kMaxExactSites)
    throw Error(ErrorCode::TooLarge, "exact enumeration is limited to " + std::to_string(kMaxExactSites) + " sites");
  if (std::abs(delta) * spec.bound() >= 1.0) throw Error(ErrorCode::DeltaTooLarge, "|delta| * C must be < 1");
  const auto atoms = spec.atoms();
  if (atoms.empty()) throw Error(ErrorCode::InvalidSpec, "exact enumeration needs a finite-support law");
  const std::size_t n = grid.sites();
  std::size_t total = 1;
  for (std::size_t x = 0; x < n; ++x) {
    if (total > cap / atoms.size()) throw Error(ErrorCode::TooLarge, "configuration count exceeds cap");
    total *= atoms.size();
  }

  // Fixed-size chunks keep the summation order independent of worker count.
  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (total + kChunk - 1) / kChunk;
  std::vector<CompensatedMatrix> partial(chunks, CompensatedMatrix(static_cast<Eigen::Index>(n)));
  parallel_for(chunks, workers, [&](std::size_t c) {
    std::vector<double> sigma(n);
    for (std::size_t cfg = c * kChunk; cfg < std::min(total, (c + 1) * kChunk); ++cfg) {
      std::size_t rest = cfg;
      double w = 1.0;
      for (std::size_t x = n; x-- > 0;) {
        const auto& a = atoms[rest % atoms.size()];
        rest /= atoms.size();
        sigma[x] = a.value;
        w *= a.probability;
      }
      partial[c].add(constant_kernel_pinv(assemble_L(grid, sigma, delta)), w);
    }
  });
  CompensatedMatrix acc(static_cast<Eigen::Index>(n));
  for (const auto& p : partial) acc.merge(p);

  ExactResult out;
  out.grid = grid;
  out.spec = spec;
  out.delta = delta;
  out.configurations = total;
  out.mean_resolvent = acc.total();
  out.mean_resolvent = 0.5 * (out.mean_resolvent + out.mean_resolvent.transpose()).eval();
  out.effective = constant_kernel_pinv(out.mean_resolvent);
  out.effective = 0.5 * (out.effective + out.effective.transpose()).eval();

  for (std::size_t k = 1; k < n; ++k) {
    const FreqVector f = frequency_of(grid, k);
    const ScalarField wave = plane_wave(grid, f);
    Eigen::VectorXcd e(static_cast<Eigen::Index>(n));
    for (std::size_t x = 0; x < n; ++x) e(static_cast<Eigen::Index>(x)) = wave[x];
    const double a = (e.adjoint() * out.effective.cast<cplx>() * e)(0, 0).real() / static_cast<double>(n);
    out.freqs.push_back(f);
    out.symbol.push_back(a);
    out.k1.push_back(a / laplacian_symbol(f, grid.side()) - 1.0);
  }
  return out;
}

void write_dense_matrix(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  for (const auto& h : header) out << "# " << h << '\n';
  out << "# rows=" << m.rows() << " cols=" << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_double(m(i, j)));
    write_row(out, row);
  }
}

// ---------------------------------------------------------------------------
// Bound scan
// ---------------------------------------------------------------------------

SigmaSource random_sign_source(const TorusGrid& grid, std::uint64_t seed) {
  return [grid, seed](int s, int factor, int trial) {
    const std::uint64_t stream =
        (static_cast<std::uint64_t>(s) << 40) ^ (static_cast<std::uint64_t>(factor) << 20) ^
        static_cast<std::uint64_t>(trial);
    return sample_sigma(grid, DistributionSpec::rademacher(), derive_seed(seed, stream));
  };
}

std::vector<Lemma1Row> lemma1_scan(const TorusGrid& grid, const Lemma1Options& options, const SigmaSource& source) {
  if (options.s_max < 1) throw Error(ErrorCode::InvalidArgument, "s_max must be >= 1");
  if (options.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  const std::size_t n = grid.sites();
  const auto dd = static_cast<std::size_t>(grid.dim() * grid.dim());
  const double lo = options.r_lo > 0.0 ? options.r_lo : 2.0;
  const double hi = options.r_hi > 0.0 ? options.r_hi : grid.side() / 4.0;
  const double power = grid.dim() - options.eps;
  constexpr std::size_t kSource = 0;

  std::vector<Lemma1Row> rows;
  for (int s = 1; s <= options.s_max; ++s) {
    std::vector<std::vector<double>> magnitude(static_cast<std::size_t>(options.trials));
    parallel_for(static_cast<std::size_t>(options.trials), options.workers, [&](std::size_t t) {
      std::vector<DisorderSample> sigmas;
      for (int j = 1; j <= s; ++j) sigmas.push_back(source(s, j, static_cast<int>(t)));
      const auto column = compose_chain(std::move(sigmas), grid).column(kSource);
      auto& mag = magnitude[t];
      mag.assign(n, 0.0);
      for (std::size_t x = 0; x < n; ++x) {
        double f = 0.0;
        for (std::size_t e = 0; e < dd; ++e) f += std::norm(column[x * dd + e]);
        mag[x] = std::sqrt(f);
      }
    });

    Lemma1Row row;
    row.s = s;
    for (std::size_t x = 0; x < n; ++x) {
      if (x == kSource) continue;
      double sup = 0.0;
      for (const auto& mag : magnitude) sup = std::max(sup, mag[x]);
      const double r = grid.distance(x, kSource);
      row.profile.push_back({r, sup, 0.0});
      if (r >= lo - 1e-9 && r <= hi + 1e-9) row.constant = std::max(row.constant, sup * std::pow(r, power));
    }
    row.growth_ratio = rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : (rows.back().constant > 0.0 ? row.constant / rows.back().constant
                                                                  : std::numeric_limits<double>::quiet_NaN());
    if (row.constant > 0.0) {
      try {
        FitOptions fo;
        fo.mode = FitMode::Kernel;
        fo.lo = lo;
        fo.hi = hi;
        fo.side = grid.side();
        fo.bins_per_octave = options.bins_per_octave;
        const DecayFit fit = fit_decay(row.profile, fo);
        row.slope = fit.slope;
        row.ci95 = fit.ci95;
        row.sensitivity = fit_range_sensitivity(fit);
        row.fitted = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientPoints) throw;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Lemma1Row> lemma1_scan(const TorusGrid& grid, const Lemma1Options& options) {
  return lemma1_scan(grid, options, random_sign_source(grid, options.seed));
}

// ---------------------------------------------------------------------------
// Markov brothers' inequality
// ---------------------------------------------------------------------------

double markov_bound(int degree, int order) {
  if (order < 1 || order > degree) throw Error(ErrorCode::InvalidOrder, "need 1 <= k <= D");
  const double d2 = static_cast<double>(degree) * degree;
  double num = 1.0;
  double den = 1.0;
  for (int i = 0; i < order; ++i) {
    num *= d2 - static_cast<double>(i) * i;
    den *= 2.0 * i + 1.0;
  }
  return num / den;
}

std::vector<double> derivative(std::span<const double> coefficients, int order) {
  std::vector<double> c(coefficients.begin(), coefficients.end());
  for (int o = 0; o < order && !c.empty(); ++o) {
    std::vector<double> next;
    for (std::size_t i = 1; i < c.size(); ++i) next.push_back(static_cast<double>(i) * c[i]);
    c = std::move(next);
  }
  if (c.empty()) c.push_back(0.0);
  return c;
}

std::vector<double> chebyshev_coefficients(int degree) {
  if (degree < 0) throw Error(ErrorCode::InvalidArgument, "degree must be >= 0");
  std::vector<double> prev{1.0};
  if (degree == 0) return prev;
  std::vector<double> cur{0.0, 1.0};
  for (int n = 1; n < degree; ++n) {
    std::vector<double> next(cur.size() + 1, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += 2.0 * cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

namespace {

double horner(std::span<const double> c, double t) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
  return v;
}

}  // namespace

double max_abs_on_interval(std::span<const double> coefficients) {
  const int degree = std::max<int>(1, static_cast<int>(coefficients.size()) - 1);
  const int points = std::max(50 * degree, 64);
  std::vector<double> t(static_cast<std::size_t>(points) + 1);
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = -1.0 + 2.0 * static_cast<double>(i) / points;
    v[i] = std::abs(horner(coefficients, t[i]));
  }
  double best = std::max(v.front(), v.back());
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    if (v[i] < v[i - 1] || v[i] < v[i + 1]) continue;
    double a = t[i - 1], b = t[i + 1];
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = std::abs(horner(coefficients, c)), fd = std::abs(horner(coefficients, d));
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = std::abs(horner(coefficients, c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = std::abs(horner(coefficients, d));
      }
    }
    best = std::max({best, v[i], fc, fd});
  }
  return best;
}

double markov_verify(std::span<const double> coefficients, int order) {
  const int degree = static_cast<int>(coefficients.size()) - 1;
  const double bound = markov_bound(degree, order);
  const double top = max_abs_on_interval(coefficients);
  if (top == 0.0) return 0.0;
  const auto der = derivative(coefficients, order);
  return max_abs_on_interval(der) / (bound * top);
}

// ---------------------------------------------------------------------------
// Path families
// ---------------------------------------------------------------------------

std::vector<std::size_t> DiagramSets::decode(std::uint64_t code) const {
  std::vector<std::size_t> x(static_cast<std::size_t>(n) + 1);
  const auto base = static_cast<std::uint64_t>(grid.sites());
  for (std::size_t i = x.size(); i-- > 0;) {
    x[i] = static_cast<std::size_t>(code % base);
    code /= base;
  }
  return x;
}

DiagramSets diagram_enumerate(int n, int j0, const TorusGrid& grid, std::uint64_t cap) {
  if (n < 1 || n > 4) throw Error(ErrorCode::TooLarge, "path families are enumerated for 1 <= n <= 4");
  if (j0 < 0 || j0 >= n) throw Error(ErrorCode::InvalidArgument, "need 0 <= j0 < n");
  if (grid.sites() > 64) throw Error(ErrorCode::TooLarge, "path families need L^d <= 64");
  std::uint64_t total = 1;
  for (int i = 0; i <= n; ++i) {
    if (total > cap / grid.sites()) throw Error(ErrorCode::TooLarge, "path count exceeds cap");
    total *= grid.sites();
  }

  DiagramSets sets;
  sets.n = n;
  sets.j0 = j0;
  sets.grid = grid;
  for (int j1 = 0; j1 <= j0; ++j1)
    for (int j2 = j0 + 1; j2 <= n; ++j2) {
      sets.families[{j1, j2}];
      sets.disjoint[{j1, j2}];
    }

  auto in_family = [](const std::vector<std::size_t>& x, int j1, int j2) {
    return x[static_cast<std::size_t>(j1)] == x[static_cast<std::size_t>(j2)];
  };

  for (std::uint64_t code = 0; code < total; ++code) {
    const auto x = sets.decode(code);
    bool in_union = false;
    for (int j1 = 0; j1 <= j0; ++j1)
      for (int j2 = j0 + 1; j2 <= n; ++j2) {
        if (!in_family(x, j1, j2)) continue;
        in_union = true;
        sets.families[{j1, j2}].push_back(code);
        bool excluded = false;
        for (int j = 0; j < j1 && !excluded; ++j)
          for (int jp = j0 + 1; jp <= n && !excluded; ++jp) excluded = in_family(x, j, jp);
        for (int jp = j0 + 1; jp < j2 && !excluded; ++jp) excluded = in_family(x, j1, jp);
        if (!excluded) sets.disjoint[{j1, j2}].push_back(code);
      }
    if (in_union) sets.union_set.push_back(code);
  }

  // Partition checks.
  std::vector<std::uint64_t> merged;
  for (const auto& [key, members] : sets.disjoint) merged.insert(merged.end(), members.begin(), members.end());
  std::sort(merged.begin(), merged.end());
  sets.pairwise_disjoint = std::adjacent_find(merged.begin(), merged.end()) == merged.end();
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  sets.union_matches = merged == sets.union_set;

  sets.condition_412 = true;
  for (const auto& [key, members] : sets.disjoint) {
    const int j1 = key.first;
    for (auto code : members) {
      const auto x = sets.decode(code);
      for (int a = 0; a < j1; ++a)
        for (int b = j0 + 1; b <= n; ++b)
          if (x[static_cast<std::size_t>(a)] == x[static_cast<std::size_t>(b)]) sets.condition_412 = false;
    }
  }
  return sets;
}

IrreducibilityResult irreducibility_check(int n, int j0, const TorusGrid& grid, const DistributionSpec& spec,
                                          double delta, std::size_t x0, std::size_t xn, std::uint64_t cap) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "order must be >= 1");
  if (j0 < 0 || j0 >= n) throw Error(ErrorCode::InvalidArgument, "need 0 <= j0 < n");
  const auto atoms = spec.atoms();
  if (atoms.empty()) throw Error(ErrorCode::InvalidSpec, "irreducibility check needs a finite-support law");
  const std::size_t sites = grid.sites();
  if (x0 >= sites || xn >= sites) throw Error(ErrorCode::InvalidArgument, "endpoint outside the lattice");
  std::uint64_t paths = 1;
  for (int i = 1; i < n; ++i) {
    if (paths > cap / sites) throw Error(ErrorCode::TooLarge, "path count exceeds cap");
    paths *= sites;
  }

  const auto d = static_cast<std::size_t>(grid.dim());
  const auto kernel = make_K(grid).kernel();
  auto k_of = [&](std::size_t a, std::size_t b) {
    std::vector<int> diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = grid.coord(a, static_cast<int>(j)) - grid.coord(b, static_cast<int>(j));
    return std::span<const cplx>(kernel).subspan(grid.index(diff) * d * d, d * d);
  };

  IrreducibilityResult result;
  result.lhs.assign(d * d, 0.0);
  result.rhs.assign(d * d, 0.0);
  const double scale_delta = std::pow(delta, n + 1);
  std::vector<std::size_t> x(static_cast<std::size_t>(n) + 1);
  x.front() = x0;
  x.back() = xn;

  for (std::uint64_t code = 0; code < paths; ++code) {
    std::uint64_t rest = code;
    for (int i = n - 1; i >= 1; --i) {
      x[static_cast<std::size_t>(i)] = static_cast<std::size_t>(rest % sites);
      rest /= sites;
    }

    // Only the sites on the path carry randomness; integrate the rest out.
    std::vector<std::size_t> distinct(x.begin(), x.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::size_t> slot(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      slot[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), x[i]) - distinct.begin());
    std::size_t configs = 1;
    for (std::size_t i = 0; i < distinct.size(); ++i) configs *= atoms.size();
    std::vector<double> weight(configs, 1.0);
    std::vector<std::vector<double>> value(distinct.size(), std::vector<double>(configs));
    for (std::size_t c = 0; c < configs; ++c) {
      std::size_t r = c;
      for (std::size_t s = 0; s < distinct.size(); ++s) {
        const auto& a = atoms[r % atoms.size()];
        r /= atoms.size();
        value[s][c] = a.value;
        weight[c] *= a.probability;
      }
    }
    // Z <- sigma_{x_j} (Z - E Z), innermost factor first.
    std::vector<double> z = value[slot.back()];
    for (int j = n - 1; j >= 0; --j) {
      double mean = 0.0;
      for (std::size_t c = 0; c < configs; ++c) mean += weight[c] * z[c];
      for (std::size_t c = 0; c < configs; ++c) z[c] = value[slot[static_cast<std::size_t>(j)]][c] * (z[c] - mean);
    }
    double expectation = 0.0, magnitude = 0.0;
    for (std::size_t c = 0; c < configs; ++c) {
      expectation += weight[c] * z[c];
      magnitude += weight[c] * std::abs(z[c]);
    }

    // K(x0 - x1) K(x1 - x2) ... K(x_{n-1} - x_n).
    std::vector<cplx> prod(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) prod[i * d + i] = 1.0;
    for (int j = 0; j < n; ++j) {
      const auto kk = k_of(x[static_cast<std::size_t>(j)], x[static_cast<std::size_t>(j) + 1]);
      std::vector<cplx> next(d * d, 0.0);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          for (std::size_t c = 0; c < d; ++c) next[a * d + c] += prod[a * d + b] * kk[b * d + c];
      prod = std::move(next);
    }

    bool in_s = false;
    for (int a = 0; a <= j0 && !in_s; ++a)
      for (int b = j0 + 1; b <= n && !in_s; ++b) in_s = x[static_cast<std::size_t>(a)] == x[static_cast<std::size_t>(b)];

    for (std::size_t e = 0; e < d * d; ++e) {
      const cplx contribution = scale_delta * expectation * prod[e];
      result.lhs[e] += contribution;
      if (in_s) result.rhs[e] += contribution;
      result.scale += std::abs(scale_delta) * magnitude * std::abs(prod[e]);
    }
  }
  for (std::size_t e = 0; e < d * d; ++e)
    result.difference = std::max(result.difference, std::abs(result.lhs[e] - result.rhs[e]));
  return result;
}

}  // namespace homlab
