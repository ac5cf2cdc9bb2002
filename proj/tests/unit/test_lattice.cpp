#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "homlab/error.hpp"
#include "homlab/lattice.hpp"

using namespace homlab;
using homlab::test::max_abs;
using homlab::test::max_diff;

namespace {

/// Direct sum_x f(x) e^{-i xi.x}.
std::vector<cplx> naive_dft(const ScalarField& f) {
  const auto& g = f.grid();
  std::vector<cplx> out(g.sites());
  for (std::size_t k = 0; k < g.sites(); ++k) {
    const FreqVector fk = frequency_of(g, k);
    for (std::size_t x = 0; x < g.sites(); ++x) {
      double phase = 0.0;
      for (int j = 0; j < g.dim(); ++j) phase += fk.angle(j, g.side()) * g.coord(x, j);
      out[k] += f[x] * std::polar(1.0, -phase);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("grid indexing round-trips and wraps") {
  const TorusGrid g(3, 5);
  CHECK(g.sites() == 125);
  for (std::size_t i = 0; i < g.sites(); ++i) {
    const auto c = g.coords(i);
    CHECK(g.index(c) == i);
  }
  const std::vector<int> c{4, 0, 2};
  const auto i = g.index(c);
  CHECK(g.coord(g.shift(i, 0, 1), 0) == 0);
  CHECK(g.coord(g.shift(i, 1, -1), 1) == 4);
  CHECK(g.distance(g.index(std::vector<int>{0, 0, 0}), g.index(std::vector<int>{4, 0, 0})) == doctest::Approx(1.0));
  CHECK(g.distance(g.index(std::vector<int>{0, 0, 0}), g.index(std::vector<int>{2, 2, 0})) ==
        doctest::Approx(std::sqrt(8.0)));
  CHECK_THROWS_AS(TorusGrid(0, 4), Error);
  CHECK_THROWS_AS(TorusGrid(1, 1), Error);
}

TEST_CASE("grad stencil examples") {
  const TorusGrid g(1, 4);
  ScalarField f(g, {0.0, 1.0, 0.0, 0.0});
  const VectorField df = grad(f);
  CHECK(df.at(0, 0) == cplx(1.0));
  CHECK(df.at(0, 1) == cplx(-1.0));
  CHECK(df.at(0, 2) == cplx(0.0));
  CHECK(df.at(0, 3) == cplx(0.0));

  VectorField gv(g, {1.0, 0.0, 0.0, 0.0});
  const ScalarField adj = grad_adjoint(gv);
  CHECK(adj[0] == cplx(-1.0));
  CHECK(adj[1] == cplx(1.0));
  CHECK(adj[2] == cplx(0.0));
  CHECK(adj[3] == cplx(0.0));

  const ScalarField lap = neg_laplacian(delta_field(g, 0));
  CHECK(lap[0] == cplx(2.0));
  CHECK(lap[1] == cplx(-1.0));
  CHECK(lap[2] == cplx(0.0));
  CHECK(lap[3] == cplx(-1.0));
}

TEST_CASE("grad of a constant vanishes") {
  for (auto [d, L] : {std::pair{1, 7}, {2, 5}, {3, 3}}) {
    const TorusGrid g(d, L);
    ScalarField f(g);
    for (auto& v : f.values()) v = cplx(2.5, -1.0);
    CHECK(max_abs(grad(f).data()) == 0.0);
  }
}

TEST_CASE("grad of a plane wave is q times the wave") {
  const TorusGrid g(2, 8);
  const FreqVector k({3, 5});
  const ScalarField e = plane_wave(g, k);
  const VectorField de = grad(e);
  for (int j = 0; j < 2; ++j)
    for (std::size_t x = 0; x < g.sites(); ++x) CHECK(std::abs(de.at(j, x) - k.q(j, 8) * e[x]) < 1e-13);
}

TEST_CASE("adjointness on random pairs") {
  std::mt19937_64 rng(11);
  for (auto [d, L] : {std::pair{1, 64}, {2, 16}, {3, 8}}) {
    const TorusGrid g(d, L);
    for (int t = 0; t < 100; ++t) {
      const ScalarField f = test::random_scalar(g, rng);
      const VectorField h = test::random_vector(g, rng);
      const cplx lhs = inner(grad(f).data(), h.data());
      const cplx rhs = inner(f.values(), grad_adjoint(h).values());
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("plane waves are Laplacian eigenvectors") {
  const TorusGrid g(3, 6);
  for (std::size_t k = 0; k < g.sites(); k += 7) {
    const FreqVector f = frequency_of(g, k);
    const ScalarField e = plane_wave(g, f);
    const ScalarField le = neg_laplacian(e);
    const double lam = laplacian_symbol(f, g.side());
    for (std::size_t x = 0; x < g.sites(); ++x) CHECK(std::abs(le[x] - lam * e[x]) < 1e-12);
  }
}

TEST_CASE("laplacian symbol examples") {
  CHECK(laplacian_symbol(FreqVector({4}), 8) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(laplacian_symbol(FreqVector({0}), 8) == 0.0);
  CHECK(laplacian_symbol(FreqVector({0, 0, 0}), 8) == 0.0);
  CHECK(laplacian_symbol(FreqVector({1, 0}), 8) == doctest::Approx(2.0 * (1.0 - std::cos(std::numbers::pi / 4))));
  CHECK(laplacian_symbol(FreqVector({1, 0}), 8) == doctest::Approx(0.585786437626905).epsilon(1e-14));
}

TEST_CASE("frequency norm uses the centered representative") {
  CHECK(FreqVector({7}).norm(8) == doctest::Approx(2.0 * std::numbers::pi / 8));
  CHECK(FreqVector({4}).norm(8) == doctest::Approx(std::numbers::pi));
  CHECK(FreqVector({1, 7}).norm(8) == doctest::Approx(std::sqrt(2.0) * 2.0 * std::numbers::pi / 8));
  CHECK(FreqVector({3}).negated(8) == FreqVector({5}));
}

TEST_CASE("dft matches the direct sum") {
  std::mt19937_64 rng(3);
  for (auto [d, L] : {std::pair{1, 12}, {2, 6}, {3, 4}}) {
    const TorusGrid g(d, L);
    const ScalarField f = test::random_scalar(g, rng);
    const auto fast = dft(f);
    const auto slow = naive_dft(f);
    CHECK(max_diff(fast, slow) < 1e-11);
  }
}

TEST_CASE("dft of a delta is flat and roundtrip is exact") {
  const TorusGrid g(2, 8);
  const auto spec = dft(delta_field(g, 0));
  for (const auto& v : spec) CHECK(std::abs(v - cplx(1.0)) < 1e-15);

  std::mt19937_64 rng(5);
  for (auto [d, L] : {std::pair{1, 64}, {2, 16}, {3, 8}}) {
    const TorusGrid gg(d, L);
    const ScalarField f = test::random_scalar(gg, rng);
    const ScalarField back = idft(gg, dft(f));
    CHECK(max_diff(back.values(), f.values()) <= 1e-12 * f.max_abs());
  }
}

TEST_CASE("dft of grad is q times dft") {
  std::mt19937_64 rng(9);
  const TorusGrid g(2, 8);
  const ScalarField f = test::random_scalar(g, rng);
  const auto fh = dft(f);
  const auto gh = dft(grad(f));
  for (std::size_t k = 0; k < g.sites(); ++k) {
    const FreqVector fk = frequency_of(g, k);
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(gh[static_cast<std::size_t>(j) * g.sites() + k] - fk.q(j, 8) * fh[k]) < 1e-11);
  }
}

TEST_CASE("plane wave phases stay exact at large k") {
  const TorusGrid g(1, 256);
  const ScalarField e = plane_wave(g, FreqVector({64}));
  // e^{i pi/2 x} cycles through 1, i, -1, -i; the phase is reduced mod L first.
  CHECK(std::abs(e[1] - cplx(0.0, 1.0)) < 1e-15);
  CHECK(std::abs(e[2] - cplx(-1.0, 0.0)) < 1e-15);
  CHECK(std::abs(e[255] - cplx(0.0, -1.0)) < 1e-15);
}

TEST_CASE("field csv round-trip") {
  std::mt19937_64 rng(1);
  const TorusGrid g(2, 3);
  const ScalarField f = test::random_scalar(g, rng);
  std::stringstream ss;
  write_field_csv(ss, f);
  const ScalarField back = read_field_csv(ss, g);
  CHECK(max_diff(back.values(), f.values()) == 0.0);
}

TEST_CASE("mean-zero detection") {
  const TorusGrid g(1, 4);
  CHECK(ScalarField(g, {1.0, -1.0, 2.0, -2.0}).is_mean_zero());
  CHECK_FALSE(ScalarField(g, {1.0, 0.0, 0.0, 0.0}).is_mean_zero());
}
