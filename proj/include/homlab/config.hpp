#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "homlab/disorder.hpp"
#include "homlab/lattice.hpp"

namespace homlab {

/// Full description of a run. The text form is `key = value` per line with
/// `#` comments; unknown or repeated keys are rejected.
struct ExperimentConfig {
  int d = 1;
  int L = 8;
  double delta = 0.1;

  std::string dist = "rademacher";  // rademacher | uniform | two_point
  double dist_a = 1.0;
  double dist_p = 0.5;
  double dist_vplus = 1.0;
  double dist_vminus = -1.0;

  std::uint64_t M = 1000;
  int N = 4;
  std::uint64_t seed = 1;

  std::string probes = "axes_diag";  // axes_diag | all
  int probe_max = 0;                 // 0 -> max(1, L/4)
  std::string target = "symbol";     // symbol | kernel
  int order = 0;                     // 0 -> every order up to N
  std::uint64_t source = 0;
  std::string signs = "alternating";  // alternating | printed

  std::string fit_mode = "kernel";  // kernel | symbol
  double fit_lo = 0.0;
  double fit_hi = 0.0;
  int bins_per_octave = 2;

  double eps = 0.5;
  int s_max = 4;
  int trials = 4;
  double tol = 1e-10;
  std::uint64_t enum_cap = std::uint64_t{1} << 20;

  int markov_trials = 1000;
  int markov_max_degree = 6;
  int markov_max_order = 3;
  int diagram_n = 3;

  std::string input;
  std::string reference;
  double z = 3.0;

  std::string out = "out";
  int workers = 0;  // 0 -> HOMLAB_WORKERS or hardware concurrency

  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig from_file(const std::string& path);

  /// Every key, sorted; parse(serialize()) reproduces the config exactly.
  std::string serialize() const;
  /// Sorted keys without `out` and `workers`, which do not affect results.
  std::string canonical() const;
  std::string fingerprint() const;

  /// Throws ConfigError for anything that would fail later.
  void validate(std::string_view subcommand) const;

  TorusGrid grid() const;
  DistributionSpec distribution() const;
  std::vector<FreqVector> probe_set() const;
  int resolved_workers() const;

  bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace homlab
