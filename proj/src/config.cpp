#include "homlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "homlab/error.hpp"
#include "homlab/io.hpp"
#include "homlab/parallel.hpp"

namespace homlab {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string text_of(int v) { return std::to_string(v); }
std::string text_of(std::uint64_t v) { return std::to_string(v); }
std::string text_of(double v) { return format_double(v); }
std::string text_of(const std::string& v) { return v; }

template <class T>
void read_integer(std::string_view key, std::string_view s, T& v) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail("key '" + std::string(key) + "' expects an integer, got '" + std::string(s) + "'");
}
void read_value(std::string_view key, std::string_view s, int& v) { read_integer(key, s, v); }
void read_value(std::string_view key, std::string_view s, std::uint64_t& v) { read_integer(key, s, v); }
void read_value(std::string_view key, std::string_view s, double& v) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    fail("key '" + std::string(key) + "' expects a number, got '" + std::string(s) + "'");
}
void read_value(std::string_view, std::string_view s, std::string& v) { v = std::string(s); }

template <class Config, class F>
void visit(Config& c, F&& f) {
  f("L", c.L);
  f("M", c.M);
  f("N", c.N);
  f("bins_per_octave", c.bins_per_octave);
  f("d", c.d);
  f("delta", c.delta);
  f("diagram_n", c.diagram_n);
  f("dist", c.dist);
  f("dist_a", c.dist_a);
  f("dist_p", c.dist_p);
  f("dist_vminus", c.dist_vminus);
  f("dist_vplus", c.dist_vplus);
  f("enum_cap", c.enum_cap);
  f("eps", c.eps);
  f("fit_hi", c.fit_hi);
  f("fit_lo", c.fit_lo);
  f("fit_mode", c.fit_mode);
  f("input", c.input);
  f("markov_max_degree", c.markov_max_degree);
  f("markov_max_order", c.markov_max_order);
  f("markov_trials", c.markov_trials);
  f("order", c.order);
  f("out", c.out);
  f("probe_max", c.probe_max);
  f("probes", c.probes);
  f("reference", c.reference);
  f("s_max", c.s_max);
  f("seed", c.seed);
  f("signs", c.signs);
  f("source", c.source);
  f("target", c.target);
  f("tol", c.tol);
  f("trials", c.trials);
  f("workers", c.workers);
  f("z", c.z);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string render(const ExperimentConfig& c, bool all) {
  std::map<std::string, std::string> kv;
  visit(c, [&](const char* key, const auto& value) {
    const std::string k = key;
    if (!all && (k == "out" || k == "workers")) return;
    kv[k] = text_of(value);
  });
  std::string s;
  for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!seen.insert(key).second) fail("duplicate key '" + key + "'");
    bool known = false;
    visit(c, [&](const char* k, auto& field) {
      if (key != k) return;
      known = true;
      read_value(key, value, field);
    });
    if (!known) fail("unknown key '" + key + "'");
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::serialize() const { return render(*this, true); }
std::string ExperimentConfig::canonical() const { return render(*this, false); }
std::string ExperimentConfig::fingerprint() const { return hex64(fnv1a64(canonical())); }

TorusGrid ExperimentConfig::grid() const { return TorusGrid(d, L); }

DistributionSpec ExperimentConfig::distribution() const {
  try {
    if (dist == "rademacher") return DistributionSpec::rademacher();
    if (dist == "uniform") return DistributionSpec::uniform_symmetric(dist_a);
    if (dist == "two_point") return DistributionSpec::two_point(dist_p, dist_vplus, dist_vminus);
  } catch (const Error& e) {
    fail(std::string("distribution: ") + e.what());
  }
  fail("dist must be rademacher, uniform or two_point");
}

std::vector<FreqVector> ExperimentConfig::probe_set() const {
  const TorusGrid g = grid();
  std::vector<FreqVector> out;
  if (probes == "all") {
    for (std::size_t i = 1; i < g.sites(); ++i) out.push_back(frequency_of(g, i));
    return out;
  }
  const int top = probe_max > 0 ? probe_max : std::max(1, L / 4);
  std::set<std::vector<int>> seen;
  auto add = [&](std::vector<int> k) {
    for (auto& v : k) v = ((v % L) + L) % L;
    if (std::all_of(k.begin(), k.end(), [](int v) { return v == 0; })) return;
    if (seen.insert(k).second) out.emplace_back(std::move(k));
  };
  for (int m = 1; m <= top; ++m) {
    for (int j = 0; j < d; ++j) {
      std::vector<int> k(static_cast<std::size_t>(d), 0);
      k[static_cast<std::size_t>(j)] = m;
      add(k);
    }
    if (d > 1) add(std::vector<int>(static_cast<std::size_t>(d), m));
  }
  return out;
}

int ExperimentConfig::resolved_workers() const { return workers > 0 ? workers : default_workers(); }

void ExperimentConfig::validate(std::string_view subcommand) const {
  if (d < 1 || d > 3) fail("d must be 1, 2 or 3");
  if (L < 2) fail("L must be >= 2");
  {
    double sites = 1.0;
    for (int j = 0; j < d; ++j) sites *= L;
    if (sites > double(1 << 24)) fail("L^d exceeds 2^24 sites");
  }
  const DistributionSpec spec = distribution();
  if (!(std::abs(delta) * spec.bound() < 1.0)) fail("|delta| * C must be < 1");
  if (M < 2) fail("M must be >= 2");
  if (N < 1) fail("N must be >= 1");
  if (order < 0 || order > N) fail("order must lie in [0, N]");
  if (probes != "axes_diag" && probes != "all") fail("probes must be axes_diag or all");
  if (probe_max < 0) fail("probe_max must be >= 0");
  if (target != "symbol" && target != "kernel") fail("target must be symbol or kernel");
  if (signs != "alternating" && signs != "printed") fail("signs must be alternating or printed");
  if (fit_mode != "symbol" && fit_mode != "kernel") fail("fit_mode must be symbol or kernel");
  if (fit_lo < 0.0 || fit_hi < 0.0 || (fit_hi > 0.0 && fit_hi < fit_lo)) fail("fit range must satisfy 0 <= lo <= hi");
  if (bins_per_octave < 1) fail("bins_per_octave must be >= 1");
  if (!(eps > 0.0 && eps < d)) fail("eps must lie in (0, d)");
  if (s_max < 1) fail("s_max must be >= 1");
  if (trials < 1) fail("trials must be >= 1");
  if (!(tol > 0.0 && tol < 1.0)) fail("tol must lie in (0, 1)");
  if (enum_cap < 1) fail("enum_cap must be >= 1");
  if (markov_trials < 1) fail("markov_trials must be >= 1");
  if (markov_max_degree < 1) fail("markov_max_degree must be >= 1");
  if (markov_max_order < 1 || markov_max_order > markov_max_degree)
    fail("markov_max_order must lie in [1, markov_max_degree]");
  if (diagram_n < 1 || diagram_n > 4) fail("diagram_n must lie in [1, 4]");
  if (!(z > 0.0)) fail("z must be > 0");
  if (workers < 0) fail("workers must be >= 0");

  const TorusGrid g = grid();
  if (source >= g.sites()) fail("source must be a site index below L^d");
  if (subcommand == "oracle") {
    if (spec.atoms().empty()) fail("oracle needs a finite-support distribution");
    if (g.sites() > 20) fail("oracle is limited to L^d <= 20");
    double configs = std::pow(static_cast<double>(spec.atoms().size()), static_cast<double>(g.sites()));
    if (configs > static_cast<double>(enum_cap)) fail("configuration count exceeds enum_cap");
  }
  if (subcommand == "diagrams") {
    if (spec.atoms().empty()) fail("diagrams need a finite-support distribution");
    if (g.sites() > 64) fail("diagrams need L^d <= 64");
  }
  if (subcommand == "fit" && input.empty()) fail("fit needs input");
  if (subcommand == "compare" && (input.empty() || reference.empty())) fail("compare needs input and reference");
  if (out.empty()) fail("out must be non-empty");
}

}  // namespace homlab
