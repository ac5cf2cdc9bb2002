#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "homlab/annealed.hpp"
#include "homlab/disorder.hpp"
#include "homlab/lattice.hpp"
#include "homlab/symbol_table.hpp"

namespace homlab {

// ---------------------------------------------------------------------------
// Exhaustive disorder averages
// ---------------------------------------------------------------------------

/// Exact <L^{-1}> over every configuration of a finite-support law, with the
/// effective operator and its symbol derived from it. All inverses are
/// pseudo-inverses on the mean-zero sector.
struct ExactResult {
  TorusGrid grid{1, 2};
  DistributionSpec spec = DistributionSpec::rademacher();
  double delta = 0.0;
  std::size_t configurations = 0;
  Eigen::MatrixXd mean_resolvent;
  Eigen::MatrixXd effective;
  std::vector<FreqVector> freqs;  // every nonzero frequency
  std::vector<double> symbol;     // A^(k)
  std::vector<double> k1;         // A^(k)/|q|^2 - 1

  K1Table k1_table() const;
};

inline constexpr std::size_t kMaxExactSites = 20;

ExactResult enumerate_exact(const TorusGrid& grid, const DistributionSpec& spec, double delta,
                            std::size_t cap = std::size_t{1} << 20, int workers = 1);

/// Dense L (or any site operator) as an N x N matrix, built column by column.
Eigen::MatrixXd dense_L(const DisorderSample& sample, double delta);

/// Row-major dense matrix with '#' header lines.
void write_dense_matrix(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& header);

// ---------------------------------------------------------------------------
// Pointwise bound scan for T = K sigma_1 ... K sigma_s
// ---------------------------------------------------------------------------

using SigmaSource = std::function<DisorderSample(int s, int factor, int trial)>;

struct Lemma1Options {
  int s_max = 4;
  double eps = 0.5;
  int trials = 4;
  std::uint64_t seed = 1;
  double r_lo = 0.0;  // 0 -> 2
  double r_hi = 0.0;  // 0 -> L/4
  int bins_per_octave = 2;
  int workers = 1;
};

struct Lemma1Row {
  int s = 0;
  /// sup over trials and sites in range of |T(x0, xs)| r^{d - eps}.
  double constant = 0.0;
  /// constant(s) / constant(s-1); NaN for s = 1.
  double growth_ratio = 0.0;
  double slope = 0.0;
  double ci95 = 0.0;
  double sensitivity = 0.0;
  bool fitted = false;
  /// (r, sup over trials |T|) for every site other than the source.
  std::vector<DecayPoint> profile;
};

/// Random sign fields, independent per (s, factor, trial).
SigmaSource random_sign_source(const TorusGrid& grid, std::uint64_t seed);

std::vector<Lemma1Row> lemma1_scan(const TorusGrid& grid, const Lemma1Options& options,
                                   const SigmaSource& source);
std::vector<Lemma1Row> lemma1_scan(const TorusGrid& grid, const Lemma1Options& options);

// ---------------------------------------------------------------------------
// Markov brothers' inequality
// ---------------------------------------------------------------------------

/// D^2 (D^2 - 1^2) ... (D^2 - (k-1)^2) / (1 * 3 * ... * (2k-1)) = T_D^{(k)}(1).
double markov_bound(int degree, int order);

/// max_{[-1,1]} |P^{(k)}| / (markov_bound(D, k) max_{[-1,1]} |P|) for P given
/// by monomial coefficients (constant term first), D = coefficients.size()-1.
double markov_verify(std::span<const double> coefficients, int order);

/// max over [-1,1] of |P| via a dense grid plus golden-section refinement.
double max_abs_on_interval(std::span<const double> coefficients);
std::vector<double> derivative(std::span<const double> coefficients, int order);
/// Monomial coefficients of T_D, constant term first.
std::vector<double> chebyshev_coefficients(int degree);

// ---------------------------------------------------------------------------
// Path families and the irreducibility identity
// ---------------------------------------------------------------------------

/// Paths (x_0..x_n) on the lattice with the intersection families
///   S          = { {x_0..x_j0} meets {x_{j0+1}..x_n} }
///   S_{j1,j2}  = { x_j1 = x_j2 },           0 <= j1 <= j0 < j2 <= n
///   S'_{j1,j2} = S_{j1,j2} minus S_{j,j'} (j < j1) and S_{j1,j'} (j' < j2).
/// Paths are encoded as base-N integers, x_0 most significant.
struct DiagramSets {
  int n = 0;
  int j0 = 0;
  TorusGrid grid{1, 2};
  std::vector<std::uint64_t> union_set;  // S, sorted
  std::map<std::pair<int, int>, std::vector<std::uint64_t>> families;
  std::map<std::pair<int, int>, std::vector<std::uint64_t>> disjoint;
  bool pairwise_disjoint = false;
  bool union_matches = false;
  bool condition_412 = false;

  std::vector<std::size_t> decode(std::uint64_t code) const;
};

DiagramSets diagram_enumerate(int n, int j0, const TorusGrid& grid, std::uint64_t cap = std::uint64_t{1} << 24);

/// E over all configurations of the full path sum b (K P-perp b)^n (x0, xn)
/// (lhs) and of the same sum restricted to paths in S (rhs); d x d entries.
struct IrreducibilityResult {
  std::vector<cplx> lhs;
  std::vector<cplx> rhs;
  double difference = 0.0;
  /// Sum over paths of delta^{n+1} E|Z| |K...K|, which bounds every
  /// contribution and sets the rounding floor of the identity.
  double scale = 0.0;
};

IrreducibilityResult irreducibility_check(int n, int j0, const TorusGrid& grid, const DistributionSpec& spec,
                                          double delta, std::size_t x0, std::size_t xn,
                                          std::uint64_t cap = std::uint64_t{1} << 22);

}  // namespace homlab
