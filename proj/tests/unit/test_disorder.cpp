#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "homlab/disorder.hpp"
#include "homlab/error.hpp"

using namespace homlab;

TEST_CASE("distribution validation") {
  CHECK_NOTHROW(DistributionSpec::two_point(0.2, 2.0, -0.5));
  CHECK_THROWS_AS(DistributionSpec::two_point(0.5, 1.0, -0.5), Error);
  CHECK_THROWS_AS(DistributionSpec::two_point(0.0, 1.0, 0.0), Error);
  CHECK_THROWS_AS(DistributionSpec::two_point(1.5, 1.0, -1.0), Error);
  CHECK_THROWS_AS(DistributionSpec::uniform_symmetric(0.0), Error);
  CHECK_THROWS_AS(DistributionSpec::uniform_symmetric(-1.0), Error);
  try {
    DistributionSpec::two_point(0.5, 0.0, 0.0);
    FAIL("zero-variance law accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSpec);
  }
}

TEST_CASE("distribution moments") {
  const auto r = DistributionSpec::rademacher();
  CHECK(r.variance() == 1.0);
  CHECK(r.bound() == 1.0);
  CHECK(r.symmetric());
  const auto u = DistributionSpec::uniform_symmetric(0.6);
  CHECK(u.variance() == doctest::Approx(0.12));
  CHECK(u.bound() == 0.6);
  CHECK(u.atoms().empty());
  const auto t = DistributionSpec::two_point(0.2, 2.0, -0.5);
  CHECK(t.variance() == doctest::Approx(0.2 * 4.0 + 0.8 * 0.25));
  CHECK(t.bound() == 2.0);
  CHECK_FALSE(t.symmetric());
  double mean = 0.0, total = 0.0;
  for (const auto& a : t.atoms()) {
    mean += a.probability * a.value;
    total += a.probability;
  }
  CHECK(std::abs(mean) < 1e-15);
  CHECK(total == doctest::Approx(1.0));
  CHECK(DistributionSpec::two_point(0.5, 1.0, -1.0).symmetric());
}

TEST_CASE("rademacher values are signs and sampling is deterministic") {
  const TorusGrid g(2, 16);
  const auto spec = DistributionSpec::rademacher();
  const auto a = sample_sigma(g, spec, 42);
  const auto b = sample_sigma(g, spec, 42);
  const auto c = sample_sigma(g, spec, 43);
  CHECK(a.sigma == b.sigma);
  CHECK(a.sigma != c.sigma);
  for (double v : a.sigma) CHECK((v == 1.0 || v == -1.0));
}

TEST_CASE("uniform and two-point draws stay in the support") {
  const TorusGrid g(1, 4096);
  const auto u = sample_sigma(g, DistributionSpec::uniform_symmetric(0.5), 1);
  for (double v : u.sigma) CHECK(std::abs(v) <= 0.5);
  const auto t = sample_sigma(g, DistributionSpec::two_point(0.2, 2.0, -0.5), 1);
  std::size_t plus = 0;
  for (double v : t.sigma) {
    CHECK((v == 2.0 || v == -0.5));
    plus += v == 2.0;
  }
  // Binomial(4096, 0.2): mean 819, sd 25.6.
  CHECK(std::abs(static_cast<double>(plus) - 819.2) < 5 * 25.6);
}

TEST_CASE("empirical mean at a fixed site obeys the CLT bound") {
  const TorusGrid g(1, 8);
  for (const auto& spec : {DistributionSpec::rademacher(), DistributionSpec::uniform_symmetric(1.0),
                           DistributionSpec::two_point(0.2, 2.0, -0.5)}) {
    const Ensemble ens = make_ensemble(g, spec, 10000, 7);
    double mean = 0.0;
    for (const auto& s : ens.samples) mean += s.sigma[3];
    mean /= 10000.0;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(spec.variance() / 10000.0));
  }
}

TEST_CASE("seed derivation") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(5, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  CHECK(derive_seed(5, 3) != derive_seed(6, 3));
}

TEST_CASE("ensembles do not depend on worker count") {
  const TorusGrid g(2, 8);
  const auto spec = DistributionSpec::uniform_symmetric(1.0);
  const Ensemble a = make_ensemble(g, spec, 37, 99, 1);
  const Ensemble b = make_ensemble(g, spec, 37, 99, 4);
  REQUIRE(a.size() == 37);
  for (std::size_t m = 0; m < 37; ++m) CHECK(a.samples[m].sigma == b.samples[m].sigma);
  CHECK(a.weights == b.weights);
  CHECK_FALSE(a.exact);
  // Sample m is regenerable alone.
  CHECK(a.samples[11].sigma == sample_sigma(g, spec, derive_seed(99, 11)).sigma);
  try {
    make_ensemble(g, spec, 1, 1);
    FAIL("M = 1 accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EnsembleTooSmall);
  }
}

TEST_CASE("exhaustive ensembles list every configuration once") {
  const TorusGrid g(1, 4);
  const auto spec = DistributionSpec::two_point(0.2, 2.0, -0.5);
  const Ensemble ens = enumerate_ensemble(g, spec);
  CHECK(ens.exact);
  REQUIRE(ens.size() == 16);
  std::set<std::vector<double>> configs;
  double total = 0.0;
  for (std::size_t m = 0; m < ens.size(); ++m) {
    configs.insert(ens.samples[m].sigma);
    total += ens.weights[m];
    double w = 1.0;
    for (double v : ens.samples[m].sigma) w *= v == 2.0 ? 0.2 : 0.8;
    CHECK(ens.weights[m] == doctest::Approx(w).epsilon(1e-15));
  }
  CHECK(configs.size() == 16);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(enumerate_ensemble(TorusGrid(1, 8), spec, 100), Error);
  CHECK_THROWS_AS(enumerate_ensemble(g, DistributionSpec::uniform_symmetric(1.0)), Error);
}

TEST_CASE("centering examples") {
  std::mt19937_64 rng(1);
  const TorusGrid g(2, 4);
  const ScalarField f = test::random_scalar(g, rng);
  ScalarField neg(g);
  for (std::size_t x = 0; x < g.sites(); ++x) neg[x] = -f[x];

  auto pair = center_stage(std::vector<ScalarField>{f, neg});
  CHECK(test::max_diff(pair[0].values(), f.values()) == 0.0);
  CHECK(test::max_diff(pair[1].values(), neg.values()) == 0.0);

  auto same = center_stage(std::vector<ScalarField>{f, f, f});
  for (const auto& s : same) CHECK(test::max_abs(s.values()) <= 1e-15 * f.max_abs());

  std::vector<VectorField> many;
  for (int m = 0; m < 25; ++m) many.push_back(test::random_vector(g, rng));
  double top = 0.0;
  for (const auto& v : many) top = std::max(top, test::max_abs(v.data()));
  const auto centered = center_stage(many);
  for (std::size_t i = 0; i < many[0].data().size(); ++i) {
    cplx mean = 0.0;
    for (const auto& v : centered) mean += v.data()[i];
    CHECK(std::abs(mean / 25.0) <= 1e-13 * top);
  }
  CHECK_THROWS_AS(center_stage(std::vector<ScalarField>{f}), Error);
}

TEST_CASE("weighted centering uses the weights") {
  std::vector<cplx> stacked{1.0, 2.0, 3.0, 6.0};  // two samples of stride 2
  const std::vector<double> w{0.25, 0.75};
  center_stage(stacked, 2, 2, w);
  // Means: 0.25*1 + 0.75*3 = 2.5 and 0.25*2 + 0.75*6 = 5.
  CHECK(stacked[0] == cplx(-1.5));
  CHECK(stacked[1] == cplx(-3.0));
  CHECK(stacked[2] == cplx(0.5));
  CHECK(stacked[3] == cplx(1.0));
}
