#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "homlab/error.hpp"
#include "homlab/expansion.hpp"
#include "homlab/operators.hpp"
#include "homlab/verification.hpp"

using namespace homlab;

namespace {

std::vector<FreqVector> all_nonzero(const TorusGrid& g) {
  std::vector<FreqVector> out;
  for (std::size_t k = 1; k < g.sites(); ++k) out.push_back(frequency_of(g, k));
  return out;
}

}  // namespace

TEST_CASE("first term is the covariance times K(0), exactly") {
  for (auto [d, L] : {std::pair{1, 4}, {2, 3}}) {
    const TorusGrid g(d, L);
    for (const auto& spec : {DistributionSpec::rademacher(), DistributionSpec::two_point(0.2, 2.0, -0.5)}) {
      const Ensemble ens = enumerate_ensemble(g, spec);
      const double delta = 0.1;
      const auto freqs = all_nonzero(g);
      const TermEstimate t = estimate_term_symbol(1, ens, delta, freqs);
      const auto k0 = make_K(g).kernel();
      for (std::size_t p = 0; p < freqs.size(); ++p)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            const cplx want = delta * delta * spec.variance() * k0[static_cast<std::size_t>(i * d + j)];
            CHECK(std::abs(t.value(p, i, j) - want) < 1e-14);
            CHECK(t.stderr(p, i, j) == 0.0);
          }
    }
  }
}

TEST_CASE("first term by Monte Carlo within 3 stderr") {
  const TorusGrid g(1, 8);
  const Ensemble ens = make_ensemble(g, DistributionSpec::rademacher(), 10000, 3);
  const double delta = 0.2;
  const std::vector<FreqVector> freqs{FreqVector({1}), FreqVector({2}), FreqVector({4})};
  const TermEstimate t = estimate_term_symbol(1, ens, delta, freqs);
  const double want = delta * delta * (7.0 / 8.0);
  for (std::size_t p = 0; p < 3; ++p) {
    CHECK(t.stderr(p, 0, 0) > 0.0);
    CHECK(std::abs(t.value(p, 0, 0).real() - want) <= 3.0 * t.stderr(p, 0, 0));
  }
}

TEST_CASE("second term vanishes for symmetric disorder") {
  const TorusGrid g(1, 4);
  const Ensemble exact = enumerate_ensemble(g, DistributionSpec::rademacher());
  const auto freqs = all_nonzero(g);
  const TermEstimate t = estimate_term_symbol(2, exact, 0.3, freqs);
  for (std::size_t p = 0; p < freqs.size(); ++p) CHECK(std::abs(t.value(p, 0, 0)) < 1e-15);

  const TorusGrid g1(1, 8);
  const Ensemble mc1 = make_ensemble(g1, DistributionSpec::rademacher(), 10000, 5);
  const TermEstimate m1 = estimate_term_symbol(2, mc1, 0.3, std::vector<FreqVector>{FreqVector({1})});
  CHECK(std::abs(m1.value(0, 0, 0).real()) <= 3.0 * m1.stderr(0, 0, 0));

  // Eight entries at once: Bonferroni-adjusted two-sided 0.27% familywise level.
  const TorusGrid g2(2, 6);
  const Ensemble mc = make_ensemble(g2, DistributionSpec::rademacher(), 4000, 5);
  const std::vector<FreqVector> probes{FreqVector({1, 0}), FreqVector({1, 1})};
  const TermEstimate m = estimate_term_symbol(2, mc, 0.3, probes);
  for (std::size_t p = 0; p < probes.size(); ++p)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(std::abs(m.value(p, i, j).real()) <= 3.9 * m.stderr(p, i, j));
}

TEST_CASE("terms scale exactly with delta") {
  const TorusGrid g(2, 4);
  const Ensemble ens = make_ensemble(g, DistributionSpec::two_point(0.2, 2.0, -0.5), 50, 9);
  const std::vector<FreqVector> freqs{FreqVector({1, 0}), FreqVector({1, 2})};
  const auto a = estimate_terms_symbol(4, ens, 0.1, freqs);
  const auto b = estimate_terms_symbol(4, ens, 0.2, freqs);
  for (int n = 1; n <= 4; ++n) {
    const auto& ta = a[static_cast<std::size_t>(n - 1)];
    const auto& tb = b[static_cast<std::size_t>(n - 1)];
    const TermEstimate tc = ta.at_delta(0.2);
    for (std::size_t e = 0; e < ta.unit_value.size(); ++e) {
      const cplx va = ta.scale() * ta.unit_value[e];
      const cplx vb = tb.scale() * tb.unit_value[e];
      CHECK(std::abs(vb - std::pow(2.0, n + 1) * va) <= 1e-12 * std::abs(vb));
      CHECK(tc.scale() * tc.unit_value[e] == vb);
    }
  }
}

TEST_CASE("kernel terms agree with the exhaustive path sum") {
  struct Case {
    int d, L, max_order;
    DistributionSpec spec;
  };
  const std::vector<Case> cases{{1, 4, 3, DistributionSpec::two_point(0.2, 2.0, -0.5)},
                                {1, 5, 3, DistributionSpec::rademacher()},
                                {2, 3, 2, DistributionSpec::two_point(0.3, 1.0, -3.0 / 7.0)}};
  for (const auto& c : cases) {
    const TorusGrid g(c.d, c.L);
    const Ensemble ens = enumerate_ensemble(g, c.spec);
    const double delta = 0.2;
    const std::size_t source = 1;
    const auto terms = estimate_terms_kernel(c.max_order, ens, delta, source);
    const auto d = static_cast<std::size_t>(c.d);
    for (const auto& t : terms)
      for (std::size_t x = 0; x < g.sites(); ++x) {
        const auto ref = irreducibility_check(t.order, 0, g, c.spec, delta, x, source);
        for (int i = 0; i < c.d; ++i)
          for (int j = 0; j < c.d; ++j)
            CHECK(std::abs(t.value(x, i, j) - ref.lhs[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)]) <
                  1e-14);
      }
  }
}

TEST_CASE("symbol terms are the transform of kernel terms") {
  const TorusGrid g(2, 3);
  const auto spec = DistributionSpec::two_point(0.3, 1.0, -3.0 / 7.0);
  const Ensemble ens = enumerate_ensemble(g, spec);
  const auto freqs = all_nonzero(g);
  const auto sym = estimate_terms_symbol(3, ens, 0.2, freqs);
  const auto ker = estimate_terms_kernel(3, ens, 0.2, 0);
  for (int n = 1; n <= 3; ++n) {
    const auto& s = sym[static_cast<std::size_t>(n - 1)];
    const auto& k = ker[static_cast<std::size_t>(n - 1)];
    for (std::size_t p = 0; p < freqs.size(); ++p)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          cplx ref = 0.0;
          for (std::size_t x = 0; x < g.sites(); ++x) {
            double phase = 0.0;
            for (int a = 0; a < 2; ++a) phase += freqs[p].angle(a, 3) * g.coord(x, a);
            ref += k.value(x, i, j) * std::polar(1.0, -phase);
          }
          CHECK(std::abs(s.value(p, i, j) - ref) < 1e-14);
        }
  }
}

TEST_CASE("kernel column examples") {
  const TorusGrid g(1, 8);
  const auto spec = DistributionSpec::rademacher();
  const Ensemble ens = make_ensemble(g, spec, 2000, 4);
  const TermEstimate one = estimate_term_kernel(1, ens, 0.2, 3);
  for (std::size_t x = 0; x < 8; ++x) {
    const double want = x == 3 ? 0.04 * (7.0 / 8.0) : 0.0;
    CHECK(std::abs(one.value(x, 0, 0).real() - want) <= 3.0 * one.stderr(x, 0, 0) + 1e-15);
  }
  const TermEstimate zero = estimate_term_kernel(2, ens, 0.0, 3);
  for (std::size_t x = 0; x < 8; ++x) CHECK(zero.value(x, 0, 0) == cplx(0.0));
}

TEST_CASE("kernel columns are translation covariant after averaging") {
  const TorusGrid g(1, 6);
  const auto spec = DistributionSpec::two_point(0.2, 2.0, -0.5);
  const Ensemble exact = enumerate_ensemble(g, spec);
  const TermEstimate at0 = estimate_term_kernel(2, exact, 0.2, 0);
  const TermEstimate at2 = estimate_term_kernel(2, exact, 0.2, 2);
  for (std::size_t x = 0; x < 6; ++x) CHECK(std::abs(at2.value((x + 2) % 6, 0, 0) - at0.value(x, 0, 0)) < 1e-15);

  const Ensemble mc = make_ensemble(g, spec, 3000, 12);
  const TermEstimate m0 = estimate_term_kernel(2, mc, 0.2, 0);
  const TermEstimate m2 = estimate_term_kernel(2, mc, 0.2, 2);
  for (std::size_t x = 0; x < 6; ++x) {
    const double se = std::hypot(m0.stderr(x, 0, 0), m2.stderr((x + 2) % 6, 0, 0));
    CHECK(std::abs(m2.value((x + 2) % 6, 0, 0) - m0.value(x, 0, 0)) <= 3.0 * se + 1e-15);
  }
}

TEST_CASE("estimates do not depend on worker count") {
  const TorusGrid g(2, 8);
  const Ensemble ens = make_ensemble(g, DistributionSpec::uniform_symmetric(1.0), 64, 1);
  const std::vector<FreqVector> freqs{FreqVector({1, 0}), FreqVector({2, 2})};
  const auto a = estimate_terms_symbol(3, ens, 0.1, freqs, 1);
  const auto b = estimate_terms_symbol(3, ens, 0.1, freqs, 3);
  const auto c = estimate_terms_kernel(3, ens, 0.1, 5, 1);
  const auto e = estimate_terms_kernel(3, ens, 0.1, 5, 4);
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(a[n].unit_value == b[n].unit_value);
    CHECK(a[n].unit_stderr == b[n].unit_stderr);
    CHECK(c[n].unit_value == e[n].unit_value);
    CHECK(c[n].unit_stderr == e[n].unit_stderr);
  }
}

TEST_CASE("sign conventions") {
  CHECK(series_signs(SignConvention::Alternating, 4) == std::vector<int>{-1, 1, -1, 1});
  CHECK(series_signs(SignConvention::Printed, 3) == std::vector<int>{1, -1, 1});
  CHECK(series_sign(SignConvention::Alternating, 2) == 1);
}

TEST_CASE("assembled series") {
  const TorusGrid g(1, 6);
  const auto spec = DistributionSpec::rademacher();
  const Ensemble ens = enumerate_ensemble(g, spec);
  const auto freqs = all_nonzero(g);
  const double delta = 0.05;
  const auto terms = estimate_terms_symbol(4, ens, delta, freqs);

  const K1Series one = assemble_K1(terms, series_signs(SignConvention::Alternating, 1), 1);
  CHECK(one.tail_order == 3);
  for (std::size_t p = 0; p < freqs.size(); ++p)
    CHECK(std::abs(one.value[p] - cplx(-delta * delta * 5.0 / 6.0)) < 1e-15);

  // Leading power delta^2.
  const auto half = estimate_terms_symbol(4, ens, delta / 2, freqs);
  const K1Series a = assemble_K1(terms, series_signs(SignConvention::Alternating, 4), 4);
  const K1Series b = assemble_K1(half, series_signs(SignConvention::Alternating, 4), 4);
  for (std::size_t p = 0; p < freqs.size(); ++p) CHECK(std::abs(b.value[p] / a.value[p] - 0.25) < 1e-2);

  // Mixed probe sets cannot be summed.
  const std::vector<FreqVector> other{FreqVector({1})};
  const auto mismatch = estimate_terms_symbol(1, ens, delta, other);
  std::vector<TermEstimate> mixed{terms[0], mismatch[0]};
  try {
    assemble_K1(mixed, series_signs(SignConvention::Alternating, 2), 2);
    FAIL("mixed probes accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InconsistentProbes);
  }
  CHECK_THROWS_AS(assemble_K1(terms, series_signs(SignConvention::Alternating, 5), 5), Error);
}

TEST_CASE("exact series converges to the exact effective symbol") {
  const TorusGrid g(1, 4);
  const auto spec = DistributionSpec::rademacher();
  const Ensemble ens = enumerate_ensemble(g, spec);
  const ExactResult oracle = enumerate_exact(g, spec, 0.1);
  const auto terms = estimate_terms_symbol(4, ens, 0.1, oracle.freqs);
  const K1Table alt = k1_projection(assemble_K1(terms, series_signs(SignConvention::Alternating, 4), 4));
  const K1Table printed = k1_projection(assemble_K1(terms, series_signs(SignConvention::Printed, 4), 4));
  for (std::size_t p = 0; p < oracle.freqs.size(); ++p) {
    CHECK(std::abs(alt.points[p].value - oracle.k1[p]) < 1e-6);
    CHECK(std::abs(printed.points[p].value - oracle.k1[p]) > 1e-3);
  }
}

TEST_CASE("monte carlo series stderr keeps per-sample correlation") {
  const TorusGrid g(1, 8);
  const Ensemble ens = make_ensemble(g, DistributionSpec::two_point(0.2, 2.0, -0.5), 500, 2);
  const std::vector<FreqVector> freqs{FreqVector({1}), FreqVector({3})};
  const auto terms = estimate_terms_symbol(2, ens, 0.2, freqs);
  const K1Series s = assemble_K1(terms, series_signs(SignConvention::Alternating, 2), 2);
  REQUIRE(terms[0].unit_per_sample != nullptr);
  const std::size_t count = ens.size();
  for (std::size_t p = 0; p < freqs.size(); ++p) {
    // Direct recomputation from per-sample values of the signed sum.
    const auto& ps = *terms[0].unit_per_sample;
    const std::size_t entries = terms[0].unit_value.size();
    std::vector<cplx> x(count);
    for (std::size_t m = 0; m < count; ++m)
      x[m] = -terms[0].scale() * ps[(0 * entries + p) * count + m] + terms[1].scale() * ps[(1 * entries + p) * count + m];
    cplx mean = 0.0;
    for (const auto& v : x) mean += v;
    mean /= static_cast<double>(count);
    double ss = 0.0;
    for (const auto& v : x) ss += std::norm(v - mean);
    CHECK(std::abs(s.value[p] - mean) < 1e-14);
    CHECK(s.stderr[p] == doctest::Approx(std::sqrt(ss / (count * (count - 1.0)))).epsilon(1e-9));
  }
}
