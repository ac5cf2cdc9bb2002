#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "homlab/cli.hpp"
#include "homlab/symbol_table.hpp"

namespace fs = std::filesystem;
using namespace homlab;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("homlab_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run call(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = run(args, o, e);
  return {code, o.str(), e.str()};
}

/// Every regular file below `dir`, name -> contents.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files[entry.path().filename().string()] = slurp(entry.path());
  return files;
}

}  // namespace

TEST_CASE("oracle at zero contrast reports the bare Laplacian") {
  const auto dir = scratch("oracle0");
  const Run r = call({"oracle", "--set", "L=6", "--set", "delta=0", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const std::string report = slurp(dir / "oracle_report.csv");
  CHECK(report.rfind("# fingerprint=", 0) == 0);
  CHECK(report.find("command=oracle d=1 L=6") != std::string::npos);
  std::istringstream lines(report);
  std::string line, last;
  while (std::getline(lines, line))
    if (!line.empty()) last = line;
  CHECK(last.substr(last.rfind(',') + 1) == "true");
  CHECK(slurp(dir / "status.txt").find("\nstatus=complete\n") != std::string::npos);
  for (const auto& name : {"effective.csv", "k1.csv", "config.txt"}) CHECK(fs::exists(dir / name));
}

TEST_CASE("reruns and worker counts give identical files") {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  const auto c = scratch("rerun_c");
  const std::vector<std::string> common{"expansion", "--set", "d=2", "--set", "L=8", "--set", "M=64",
                                        "--set",     "N=3", "--set", "delta=0.2", "--seed", "11"};
  auto with = [&](const fs::path& dir, const char* workers) {
    auto args = common;
    args.insert(args.end(), {"--out", dir.string(), "--workers", workers});
    return call(args);
  };
  REQUIRE(with(a, "1").code == 0);
  REQUIRE(with(b, "1").code == 0);
  REQUIRE(with(c, "4").code == 0);
  const auto sa = snapshot(a);
  CHECK(sa.size() >= 5);
  CHECK(sa == snapshot(b));
  CHECK(sa == snapshot(c));
}

TEST_CASE("config errors exit with code 2 and one line") {
  const auto dir = scratch("bad");
  Run r = call({"expansion", "--set", "delta=1.5", "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("config_error: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  r = call({"expansion", "--set", "nonsense=1", "--out", dir.string()});
  CHECK(r.code == 2);
  r = call({"annealed", "--config", "/nonexistent.cfg"});
  CHECK(r.code == 2);
  r = call({"frobnicate"});
  CHECK(r.code == 2);
  r = call({"oracle", "--set", "L=32", "--out", dir.string()});
  CHECK(r.code == 2);
}

TEST_CASE("solver failure exits with code 3 and marks the run partial") {
  const auto dir = scratch("tol");
  const Run r = call({"annealed", "--set", "L=16", "--set", "M=4", "--set", "delta=0.9", "--set", "tol=1e-300",
                      "--out", dir.string()});
  CHECK(r.code == 3);
  CHECK(r.err.rfind("numerical_failure: ", 0) == 0);
  CHECK(slurp(dir / "status.txt").find("\nstatus=partial\n") != std::string::npos);
}

TEST_CASE("config file plus overrides") {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.cfg");
    f << "L = 8\nM = 40\nseed = 3\n";
  }
  const Run r = call({"annealed", "--config", (dir / "run.cfg").string(), "--set", "M=50", "--out",
                      (dir / "o").string()});
  REQUIRE(r.code == 0);
  const std::string cfg = slurp(dir / "o" / "config.txt");
  CHECK(cfg.find("M = 50") != std::string::npos);
  CHECK(cfg.find("seed = 3") != std::string::npos);
  CHECK(cfg.find("workers") == std::string::npos);
}

TEST_CASE("fit reads a kernel term table") {
  const auto run_dir = scratch("fit_src");
  const auto fit_dir = scratch("fit_out");
  REQUIRE(call({"expansion", "--set", "d=2", "--set", "L=32", "--set", "N=3", "--set", "M=200", "--set",
                "target=kernel", "--set", "delta=0.3", "--out", run_dir.string()})
              .code == 0);
  const Run r =
      call({"fit", "--set", "input=" + (run_dir / "kernel_terms.csv").string(), "--out", fit_dir.string()});
  REQUIRE(r.code == 0);
  const std::string fit = slurp(fit_dir / "fit.csv");
  CHECK(fit.find("mode,slope,ci95") != std::string::npos);
  CHECK(fit.find("\nkernel,") != std::string::npos);
  // A symbol fit cannot read a kernel table.
  CHECK(call({"fit", "--set", "fit_mode=symbol", "--set", "input=" + (run_dir / "kernel_terms.csv").string(),
              "--out", fit_dir.string()})
            .code == 2);
}

TEST_CASE("compare against itself and across methods") {
  const auto a = scratch("cmp_a");
  const auto same = scratch("cmp_same");
  REQUIRE(call({"annealed", "--set", "L=16", "--set", "M=200", "--set", "delta=0.4", "--out", a.string()}).code == 0);
  Run r = call({"compare", "--a", (a / "k1.csv").string(), "--b", (a / "k1.csv").string(), "--z", "0.001", "--out",
                same.string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(same / "compare_summary.csv").find(",true,") != std::string::npos);

  // One retained order against the exact oracle at delta = 0.8: the missing
  // delta^4 terms dominate the sampling error.
  const auto o = scratch("cmp_o");
  const auto e = scratch("cmp_e");
  const auto diff = scratch("cmp_diff");
  REQUIRE(call({"oracle", "--set", "L=4", "--set", "delta=0.8", "--out", o.string()}).code == 0);
  REQUIRE(call({"expansion", "--set", "L=4", "--set", "M=2000", "--set", "delta=0.8", "--set", "N=1", "--out",
                e.string()})
              .code == 0);
  r = call({"compare", "--a", (e / "k1.csv").string(), "--b", (o / "k1.csv").string(), "--out", diff.string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(diff / "compare_summary.csv").find(",false,") != std::string::npos);

  // L = 9 shares no frequency k/L with L = 16.
  const auto other = scratch("cmp_other");
  REQUIRE(call({"annealed", "--set", "L=9", "--set", "M=4", "--set", "probe_max=1", "--out", other.string()}).code == 0);
  r = call({"compare", "--a", (a / "k1.csv").string(), "--b", (other / "k1.csv").string(), "--out",
            scratch("cmp_none").string()});
  CHECK(r.code == 3);
}

TEST_CASE("installed binary behaves like run()") {
  const char* bin = std::getenv("HOMLAB_BIN");
  if (!bin) return;
  const auto dir = scratch("bin");
  const std::string cmd = std::string(bin) + " markov --set markov_trials=20 --out " + dir.string() + " >/dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "markov.csv"));
  const std::string bad = std::string(bin) + " markov --set eps=-1 2>/dev/null";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}
