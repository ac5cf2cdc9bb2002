#include "homlab/cli.hpp"

#include <CLI11.hpp>

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "homlab/annealed.hpp"
#include "homlab/config.hpp"
#include "homlab/disorder.hpp"
#include "homlab/error.hpp"
#include "homlab/expansion.hpp"
#include "homlab/io.hpp"
#include "homlab/operators.hpp"
#include "homlab/symbol_table.hpp"
#include "homlab/verification.hpp"

namespace homlab {

namespace {

namespace fs = std::filesystem;

/// Writes files into the output directory, each opened with the fingerprint line.
class OutputDir {
 public:
  OutputDir(const ExperimentConfig& config, std::string command)
      : dir_(config.out), command_(std::move(command)), fingerprint_(config.fingerprint()) {
    meta_ = "# fingerprint=" + fingerprint_ + " command=" + command_ + " d=" + std::to_string(config.d) +
            " L=" + std::to_string(config.L) + "\n";
  }

  void write(const std::string& name, const std::string& body) const {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + (dir_ / name).string());
    f << meta_ << body;
    if (!f) throw Error(ErrorCode::IoError, "write failed for " + (dir_ / name).string());
  }

  const std::string& fingerprint() const { return fingerprint_; }

 private:
  fs::path dir_;
  std::string command_;
  std::string fingerprint_;
  std::string meta_;
};

std::vector<std::string> k_header(int d, const char* prefix) {
  std::vector<std::string> h;
  for (int j = 0; j < d; ++j) h.push_back(prefix + std::to_string(j));
  return h;
}

std::vector<std::string> k_cells(const FreqVector& k) {
  std::vector<std::string> c;
  for (int v : k.k()) c.push_back(std::to_string(v));
  return c;
}

std::string cell(double v) { return format_double(v); }
std::string cell(bool v) { return v ? "true" : "false"; }

Ensemble build_ensemble(const ExperimentConfig& c, int workers) {
  return make_ensemble(c.grid(), c.distribution(), static_cast<std::size_t>(c.M), c.seed, workers);
}

void cmd_expansion(const ExperimentConfig& c, const OutputDir& out, int workers) {
  const TorusGrid grid = c.grid();
  const Ensemble ens = build_ensemble(c, workers);
  const int d = c.d;
  const auto tail = [&](const TermEstimate& t) {
    return std::vector<std::string>{cell(c.delta), std::to_string(t.samples), std::to_string(t.seed)};
  };

  if (c.target == "kernel") {
    const auto terms = estimate_terms_kernel(c.N, ens, c.delta, static_cast<std::size_t>(c.source), workers);
    std::ostringstream s;
    auto h = k_header(d, "x_");
    h.insert(h.end(), {"r", "n", "row", "col", "re", "im", "stderr", "delta", "M", "seed"});
    write_row(s, h);
    for (const auto& t : terms) {
      if (c.order != 0 && t.order != c.order) continue;
      for (std::size_t x = 0; x < grid.sites(); ++x)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            std::vector<std::string> row;
            for (int v : grid.coords(x)) row.push_back(std::to_string(v));
            const cplx v = t.value(x, i, j);
            row.insert(row.end(), {cell(grid.distance(x, t.source)), std::to_string(t.order), std::to_string(i),
                                   std::to_string(j), cell(v.real()), cell(v.imag()), cell(t.stderr(x, i, j))});
            const auto tl = tail(t);
            row.insert(row.end(), tl.begin(), tl.end());
            write_row(s, row);
          }
    }
    out.write("kernel_terms.csv", s.str());
    return;
  }

  const auto freqs = c.probe_set();
  const auto terms = estimate_terms_symbol(c.N, ens, c.delta, freqs, workers);
  {
    std::ostringstream s;
    auto h = k_header(d, "k_");
    h.insert(h.end(), {"n", "row", "col", "re", "im", "stderr", "delta", "M", "seed"});
    write_row(s, h);
    for (const auto& t : terms) {
      if (c.order != 0 && t.order != c.order) continue;
      for (std::size_t p = 0; p < freqs.size(); ++p)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            auto row = k_cells(freqs[p]);
            const cplx v = t.value(p, i, j);
            row.insert(row.end(), {std::to_string(t.order), std::to_string(i), std::to_string(j), cell(v.real()),
                                   cell(v.imag()), cell(t.stderr(p, i, j))});
            const auto tl = tail(t);
            row.insert(row.end(), tl.begin(), tl.end());
            write_row(s, row);
          }
    }
    out.write("terms.csv", s.str());
  }

  const SignConvention conv = c.signs == "printed" ? SignConvention::Printed : SignConvention::Alternating;
  const auto signs = series_signs(conv, c.N);
  const K1Series series = assemble_K1(terms, signs, c.N);
  {
    std::ostringstream s;
    auto h = k_header(d, "k_");
    h.insert(h.end(), {"row", "col", "re", "im", "stderr", "N", "signs", "tail_order", "delta", "M", "seed"});
    write_row(s, h);
    const TermEstimate& lay = series.layout();
    for (std::size_t p = 0; p < freqs.size(); ++p)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          auto row = k_cells(freqs[p]);
          const std::size_t e = lay.entry(p, i, j);
          row.insert(row.end(), {std::to_string(i), std::to_string(j), cell(series.value[e].real()),
                                 cell(series.value[e].imag()), cell(series.stderr[e]), std::to_string(c.N),
                                 to_string(conv), std::to_string(series.tail_order)});
          const auto tl = tail(lay);
          row.insert(row.end(), tl.begin(), tl.end());
          write_row(s, row);
        }
    out.write("series.csv", s.str());
  }
  std::ostringstream s;
  write_k1_csv(s, k1_projection(series));
  out.write("k1.csv", s.str());
}

void cmd_annealed(const ExperimentConfig& c, const OutputDir& out, int workers) {
  const Ensemble ens = build_ensemble(c, workers);
  const auto freqs = c.probe_set();
  const AnnealedSymbol sym = annealed_symbol(ens, c.delta, freqs, c.tol, workers);
  {
    std::ostringstream s;
    auto h = k_header(c.d, "k_");
    h.insert(h.end(), {"xi_norm", "r", "r_stderr", "A", "A_stderr", "q2", "delta", "M", "seed"});
    write_row(s, h);
    for (std::size_t p = 0; p < freqs.size(); ++p) {
      auto row = k_cells(freqs[p]);
      row.insert(row.end(), {cell(freqs[p].norm(c.L)), cell(sym.resolvent[p]), cell(sym.resolvent_stderr[p]),
                             cell(sym.effective(p)), cell(sym.effective_stderr(p)), cell(sym.q2(p)), cell(c.delta),
                             std::to_string(c.M), std::to_string(c.seed)});
      write_row(s, row);
    }
    out.write("resolvent.csv", s.str());
  }
  {
    std::ostringstream s;
    write_k1_csv(s, sym.k1_table());
    out.write("k1.csv", s.str());
  }
  std::vector<FluctuationPoint> fluct;
  try {
    fluct = k1_fluctuation(sym);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientProbes) throw;
    return;
  }
  std::ostringstream s;
  auto h = k_header(c.d, "k_");
  h.insert(h.end(), {"xi_norm", "magnitude", "stderr", "delta", "M", "seed"});
  write_row(s, h);
  for (const auto& f : fluct) {
    auto row = k_cells(f.k);
    row.insert(row.end(), {cell(f.xi_norm), cell(f.magnitude), cell(f.stderr), cell(c.delta), std::to_string(c.M),
                           std::to_string(c.seed)});
    write_row(s, row);
  }
  out.write("fluctuation.csv", s.str());
}

void cmd_oracle(const ExperimentConfig& c, const OutputDir& out, int workers) {
  const TorusGrid grid = c.grid();
  const ExactResult r = enumerate_exact(grid, c.distribution(), c.delta, static_cast<std::size_t>(c.enum_cap), workers);
  {
    std::ostringstream s;
    write_dense_matrix(s, r.effective, {"effective operator A, rows and columns indexed by site"});
    out.write("effective.csv", s.str());
  }
  {
    std::ostringstream s;
    write_k1_csv(s, r.k1_table());
    out.write("k1.csv", s.str());
  }
  // Deviation of A from the clean Laplacian.
  DisorderSample clean{grid, std::vector<double>(grid.sites(), 0.0), 1.0};
  const Eigen::MatrixXd lap = dense_L(clean, 0.0);
  const double dev = (r.effective - lap).cwiseAbs().maxCoeff();
  const double scale = lap.cwiseAbs().maxCoeff();
  std::ostringstream s;
  write_row(s, {"d", "L", "delta", "dist", "configurations", "max_abs_deviation", "equals_neg_laplacian"});
  write_row(s, {std::to_string(c.d), std::to_string(c.L), cell(c.delta), c.distribution().describe(),
                std::to_string(r.configurations), cell(dev), cell(dev <= 1e-12 * scale)});
  out.write("oracle_report.csv", s.str());
}

void cmd_bounds(const ExperimentConfig& c, const OutputDir& out, int workers) {
  Lemma1Options o;
  o.s_max = c.s_max;
  o.eps = c.eps;
  o.trials = c.trials;
  o.seed = c.seed;
  o.r_lo = c.fit_lo;
  o.r_hi = c.fit_hi;
  o.bins_per_octave = c.bins_per_octave;
  o.workers = workers;
  const auto rows = lemma1_scan(c.grid(), o);
  std::ostringstream s;
  write_row(s, {"s", "constant", "growth_ratio", "slope", "ci95", "sensitivity", "fitted", "target_slope", "eps", "d",
                "L", "seed"});
  for (const auto& r : rows)
    write_row(s, {std::to_string(r.s), cell(r.constant), cell(r.growth_ratio), cell(r.slope), cell(r.ci95),
                  cell(r.sensitivity), cell(r.fitted), cell(-(c.d - c.eps)), cell(c.eps), std::to_string(c.d),
                  std::to_string(c.L), std::to_string(c.seed)});
  out.write("bounds.csv", s.str());
  std::ostringstream p;
  write_row(p, {"s", "r", "magnitude"});
  for (const auto& r : rows)
    for (const auto& pt : r.profile) write_row(p, {std::to_string(r.s), cell(pt.abscissa), cell(pt.magnitude)});
  out.write("profiles.csv", p.str());
}

void cmd_diagrams(const ExperimentConfig& c, const OutputDir& out, int) {
  const TorusGrid grid = c.grid();
  const DistributionSpec spec = c.distribution();
  std::ostringstream summary, families, irr;
  write_row(summary, {"n", "j0", "union_size", "pairwise_disjoint", "union_matches", "condition_412"});
  write_row(families, {"n", "j0", "j1", "j2", "family_size", "disjoint_size"});
  write_row(irr, {"n", "j0", "x0", "xn", "difference", "scale", "pass"});
  for (int n = 1; n <= c.diagram_n; ++n)
    for (int j0 = 0; j0 < n; ++j0) {
      const DiagramSets sets = diagram_enumerate(n, j0, grid);
      write_row(summary, {std::to_string(n), std::to_string(j0), std::to_string(sets.union_set.size()),
                          cell(sets.pairwise_disjoint), cell(sets.union_matches), cell(sets.condition_412)});
      for (const auto& [key, members] : sets.families)
        write_row(families, {std::to_string(n), std::to_string(j0), std::to_string(key.first),
                             std::to_string(key.second), std::to_string(members.size()),
                             std::to_string(sets.disjoint.at(key).size())});
      for (std::size_t xn = 0; xn < grid.sites(); ++xn) {
        const auto r = irreducibility_check(n, j0, grid, spec, c.delta, static_cast<std::size_t>(c.source), xn);
        write_row(irr, {std::to_string(n), std::to_string(j0), std::to_string(c.source), std::to_string(xn),
                        cell(r.difference), cell(r.scale), cell(r.difference <= 1e-12 * std::max(r.scale, 1e-300))});
      }
    }
  out.write("diagram_summary.csv", summary.str());
  out.write("diagram_families.csv", families.str());
  out.write("irreducibility.csv", irr.str());
}

void cmd_markov(const ExperimentConfig& c, const OutputDir& out, int) {
  std::ostringstream s;
  write_row(s, {"trial", "D", "k", "ratio", "pass"});
  for (int t = 0; t < c.markov_trials; ++t) {
    std::mt19937_64 rng(derive_seed(c.seed, static_cast<std::uint64_t>(t)));
    const int degree = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(c.markov_max_degree));
    const int top = std::min(degree, c.markov_max_order);
    const int order = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(top));
    std::vector<double> coeffs(static_cast<std::size_t>(degree) + 1);
    for (auto& v : coeffs) v = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
    const double ratio = markov_verify(coeffs, order);
    write_row(s, {std::to_string(t), std::to_string(degree), std::to_string(order), cell(ratio),
                  cell(ratio <= 1.0 + 1e-9)});
  }
  out.write("markov.csv", s.str());
  std::ostringstream ch;
  write_row(ch, {"D", "k", "ratio", "saturated"});
  for (int degree = 1; degree <= c.markov_max_degree; ++degree)
    for (int order = 1; order <= std::min(degree, c.markov_max_order); ++order) {
      const double ratio = markov_verify(chebyshev_coefficients(degree), order);
      write_row(ch, {std::to_string(degree), std::to_string(order), cell(ratio), cell(std::abs(ratio - 1.0) <= 1e-6)});
    }
  out.write("chebyshev.csv", ch.str());
}

void cmd_fit(const ExperimentConfig& c, const OutputDir& out, int) {
  const CsvTable table = read_csv_file(c.input);
  std::vector<DecayPoint> points;
  FitOptions o;
  o.lo = c.fit_lo;
  o.hi = c.fit_hi;
  o.side = c.L;
  o.bins_per_octave = c.bins_per_octave;
  double target = 0.0;
  int d = c.d;
  std::string delta = cell(c.delta), samples = std::to_string(c.M), seed = std::to_string(c.seed);

  if (c.fit_mode == "kernel") {
    o.mode = FitMode::Kernel;
    if (!table.has_column("r") || !table.has_column("n"))
      throw Error(ErrorCode::IoError, c.input + " is not a kernel term table");
    int order = c.order;
    if (order == 0)
      for (std::size_t i = 0; i < table.rows.size(); ++i)
        order = std::max(order, static_cast<int>(table.number(i, "n")));
    d = 0;
    while (table.has_column("x_" + std::to_string(d))) ++d;
    if (table.meta.count("L")) o.side = std::stoi(table.meta.at("L"));
    // Frobenius magnitude per site, first-order error propagation.
    std::map<std::string, std::pair<double, std::pair<double, double>>> sites;
    std::vector<std::string> order_of_sites;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      if (static_cast<int>(table.number(i, "n")) != order) continue;
      std::string key;
      for (int j = 0; j < d; ++j) key += table.text(i, "x_" + std::to_string(j)) + ":";
      const double re = table.number(i, "re"), im = table.number(i, "im"), se = table.number(i, "stderr");
      auto [it, inserted] = sites.try_emplace(key, table.number(i, "r"), std::pair{0.0, 0.0});
      if (inserted) order_of_sites.push_back(key);
      it->second.second.first += re * re + im * im;
      it->second.second.second += (re * re + im * im) * se * se;
      delta = table.text(i, "delta");
      samples = table.text(i, "M");
      seed = table.text(i, "seed");
    }
    for (const auto& key : order_of_sites) {
      const auto& [r, acc] = sites.at(key);
      const double mag = std::sqrt(acc.first);
      points.push_back({r, mag, mag > 0.0 ? std::sqrt(acc.second) / mag : 0.0});
    }
    target = -2.0 * d + c.eps;
  } else {
    o.mode = FitMode::Symbol;
    const K1Table k1 = read_k1_csv(c.input);
    d = k1.dim;
    if (k1.points.empty()) throw Error(ErrorCode::IoError, c.input + " has no probes");
    const auto ref = std::min_element(k1.points.begin(), k1.points.end(),
                                      [](const SymbolPoint& a, const SymbolPoint& b) { return a.xi_norm < b.xi_norm; });
    for (const auto& p : k1.points) {
      if (&p == &*ref) continue;
      points.push_back({p.xi_norm, std::abs(p.value - ref->value), std::hypot(p.stderr, ref->stderr)});
    }
    delta = cell(k1.delta);
    samples = std::to_string(k1.samples);
    seed = std::to_string(k1.seed);
    target = d - c.eps;
  }

  const DecayFit fit = fit_decay(points, o);
  std::ostringstream s;
  write_row(s, {"mode", "slope", "ci95", "intercept", "n_points", "range_lo", "range_hi", "d", "L", "delta", "M",
                "seed", "target", "sensitivity", "excluded"});
  double sens = std::numeric_limits<double>::quiet_NaN();
  if (fit.n_points() >= 4) sens = fit_range_sensitivity(fit);
  write_row(s, {to_string(fit.mode), cell(fit.slope), cell(fit.ci95), cell(fit.intercept),
                std::to_string(fit.n_points()), cell(fit.range_lo), cell(fit.range_hi), std::to_string(d),
                std::to_string(o.side), delta, samples, seed, cell(target), cell(sens), std::to_string(fit.excluded)});
  out.write("fit.csv", s.str());
}

void cmd_compare(const ExperimentConfig& c, const OutputDir& out, int) {
  const K1Table a = read_k1_csv(c.input);
  const K1Table b = read_k1_csv(c.reference);
  std::ostringstream s;
  auto h = k_header(a.dim, "k_");
  h.insert(h.end(), {"xi_norm", "a", "a_stderr", "b", "b_stderr", "z", "pass"});
  write_row(s, h);
  std::size_t matched = 0;
  double worst = 0.0;
  for (const auto& pa : a.points) {
    // Same physical frequency k/L, so runs on different lattices line up.
    const auto pb = std::find_if(b.points.begin(), b.points.end(), [&](const SymbolPoint& p) {
      if (a.dim != b.dim) return false;
      for (int j = 0; j < a.dim; ++j)
        if (static_cast<long>(pa.k.k()[static_cast<std::size_t>(j)]) * b.side !=
            static_cast<long>(p.k.k()[static_cast<std::size_t>(j)]) * a.side) return false;
      return true;
    });
    if (pb == b.points.end()) continue;
    ++matched;
    const double diff = pa.value - pb->value;
    const double se = std::hypot(pa.stderr, pb->stderr);
    double z = 0.0;
    if (se > 0.0)
      z = diff / se;
    else if (diff != 0.0)
      z = std::copysign(std::numeric_limits<double>::infinity(), diff);
    worst = std::max(worst, std::abs(z));
    auto row = k_cells(pa.k);
    row.insert(row.end(), {cell(pa.xi_norm), cell(pa.value), cell(pa.stderr), cell(pb->value), cell(pb->stderr),
                           cell(z), cell(std::abs(z) <= c.z)});
    write_row(s, row);
  }
  if (matched == 0) throw Error(ErrorCode::NoOverlap, "the two runs share no probe frequency");
  out.write("compare.csv", s.str());

  // Under independent Gaussian errors this many probes would exceed z by chance.
  const boost::math::normal unit;
  const double expected = static_cast<double>(matched) * 2.0 * boost::math::cdf(boost::math::complement(unit, c.z));
  std::ostringstream summary;
  write_row(summary, {"probes", "max_abs_z", "tolerance", "pass", "expected_exceedances", "source_a", "source_b"});
  write_row(summary, {std::to_string(matched), cell(worst), cell(c.z), cell(worst <= c.z), cell(expected), a.source,
                      b.source});
  out.write("compare_summary.csv", summary.str());
}

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidSpec:
    case ErrorCode::DeltaTooLarge:
    case ErrorCode::EnsembleTooSmall:
    case ErrorCode::TooLarge:
    case ErrorCode::InvalidOrder:
    case ErrorCode::ZeroFrequency:
    case ErrorCode::IoError:
      return true;
    default:
      return false;
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"homlab: numerical experiments for the homogenization expansion"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  std::vector<std::string> sets;
  std::optional<std::string> path_a, path_b;
  std::optional<double> z;

  const std::vector<std::string> names{"expansion", "annealed", "oracle", "bounds", "diagrams", "markov", "fit",
                                       "compare"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "config file (key = value lines)");
    sub->add_option("--seed", seed, "master seed override");
    sub->add_option("--workers", workers, "worker threads");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", sets, "extra key=value override")->allow_extra_args(false);
    if (name == "compare") {
      sub->add_option("--a", path_a, "k1 table of the first run");
      sub->add_option("--b", path_b, "k1 table of the second run");
      sub->add_option("--z", z, "tolerance in combined stderr");
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "config_error: " << one_line(e.what()) << '\n';
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig config;
  try {
    std::string text;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    config = ExperimentConfig::parse(text);
    // Overrides replace keys rather than duplicating them.
    if (!sets.empty()) {
      std::map<std::string, std::string> merged;
      auto absorb = [&](const std::string& line) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + line + "'");
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        key.erase(0, key.find_first_not_of(" \t"));
        merged[key] = line.substr(eq + 1);
      };
      std::istringstream lines(config.serialize());
      for (std::string line; std::getline(lines, line);) absorb(line);
      for (const auto& kv : sets) absorb(kv);
      std::string doc;
      for (const auto& [k, v] : merged) doc += k + " =" + v + "\n";
      config = ExperimentConfig::parse(doc);
    }
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (out_dir) config.out = *out_dir;
    if (path_a) config.input = *path_a;
    if (path_b) config.reference = *path_b;
    if (z) config.z = *z;
    config.validate(command);
    std::error_code ec;
    fs::create_directories(config.out, ec);
    if (ec || !fs::is_directory(config.out))
      throw Error(ErrorCode::ConfigError, "output directory " + config.out + " is not writable");
  } catch (const Error& e) {
    err << "config_error: " << one_line(e.what()) << '\n';
    return kExitConfig;
  }

  const OutputDir dir(config, command);
  const int nworkers = config.resolved_workers();
  auto write_status = [&](const std::string& status, const std::string& detail) {
    try {
      dir.write("status.txt", "status=" + status + (detail.empty() ? "" : "\nerror=" + one_line(detail)) + "\n");
    } catch (const Error&) {
    }
  };
  try {
    dir.write("config.txt", config.canonical());
    if (command == "expansion") cmd_expansion(config, dir, nworkers);
    if (command == "annealed") cmd_annealed(config, dir, nworkers);
    if (command == "oracle") cmd_oracle(config, dir, nworkers);
    if (command == "bounds") cmd_bounds(config, dir, nworkers);
    if (command == "diagrams") cmd_diagrams(config, dir, nworkers);
    if (command == "markov") cmd_markov(config, dir, nworkers);
    if (command == "fit") cmd_fit(config, dir, nworkers);
    if (command == "compare") cmd_compare(config, dir, nworkers);
  } catch (const Error& e) {
    if (is_config_error(e.code())) {
      write_status("failed", e.what());
      err << "config_error: " << one_line(e.what()) << '\n';
      return kExitConfig;
    }
    write_status("partial", e.what());
    err << "numerical_failure: " << one_line(e.what()) << '\n';
    return kExitNumerical;
  }
  write_status("complete", "");
  out << command << " fingerprint=" << dir.fingerprint() << " out=" << config.out << '\n';
  return kExitOk;
}

}  // namespace homlab
