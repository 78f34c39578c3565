#include <cmath>
#include <vector>

#include "bard/error.hpp"
#include "bard/los.hpp"
#include "bard/process.hpp"
#include "bard/simulate.hpp"
#include "doctest.h"

using namespace bard;

namespace {

std::vector<LosDistribution> sample_laws() {
  return {LosDistribution(Geometric{0.3}),      LosDistribution(Geometric{0.02}),
          LosDistribution(NegativeBinomial{10, 0.1}), LosDistribution(NegativeBinomial{15, 0.3}),
          LosDistribution(NegativeBinomial{0.7, 0.5}), LosDistribution(DiscreteUniform{1, 3}),
          LosDistribution(DiscreteUniform{5, 20}), LosDistribution(ShiftedPoisson{25.0})};
}

// C(y + r - 1, y) p^r (1 - p)^y with the coefficient as an explicit product.
double nbinom_pmf_by_product(long len, long r, double p) {
  const long y = len - 1;
  double coeff = 1.0;
  for (long i = 1; i <= y; ++i) coeff *= static_cast<double>(r + i - 1) / static_cast<double>(i);
  return coeff * std::pow(p, static_cast<double>(r)) * std::pow(1.0 - p, static_cast<double>(y));
}

}  // namespace

TEST_CASE("los pmf examples") {
  CHECK(LosDistribution(Geometric{0.5}).pmf(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(LosDistribution(DiscreteUniform{1, 200}).pmf(7) == doctest::Approx(1.0 / 200).epsilon(1e-15));
  CHECK(LosDistribution(DiscreteUniform{1, 200}).pmf(201) == 0.0);

  const LosDistribution nb(NegativeBinomial{10, 0.1});
  CHECK(nb.pmf(10) == doctest::Approx(nbinom_pmf_by_product(10, 10, 0.1)).epsilon(1e-12));
  double total = 0.0;
  for (long len = 1; len <= 2000; ++len) {
    const double ref = nbinom_pmf_by_product(len, 10, 0.1);
    total += ref;
    if (len < 400) CHECK(nb.pmf(len) == doctest::Approx(ref).epsilon(1e-10));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(nb.mean() == doctest::Approx(1.0 + 10 * 0.9 / 0.1));
}

TEST_CASE("los pmf rejects non-positive lengths") {
  const LosDistribution g(Geometric{0.5});
  CHECK_THROWS_AS(g.pmf(0), DomainError);
  CHECK_THROWS_AS(g.log_pmf(-3), DomainError);
  CHECK_THROWS_AS(first_segment_pmf(g, 0), DomainError);
}

TEST_CASE("los parameter validation") {
  CHECK_THROWS_AS(LosDistribution(Geometric{0.0}), ConfigError);
  CHECK_THROWS_AS(LosDistribution(NegativeBinomial{-1, 0.5}), ConfigError);
  CHECK_THROWS_AS(LosDistribution(NegativeBinomial{2, 1.0}), ConfigError);
  CHECK_THROWS_AS(LosDistribution(DiscreteUniform{0, 3}), ConfigError);
  CHECK_THROWS_AS(LosDistribution(DiscreteUniform{5, 3}), ConfigError);
  CHECK_THROWS_AS(LosDistribution(ShiftedPoisson{0.0}), ConfigError);
}

TEST_CASE("los invariants: normalisation, cdf, survival") {
  for (const auto& dist : sample_laws()) {
    CAPTURE(dist.family());
    CHECK(dist.cdf(0) == 0.0);
    const long cap = dist.quantile(1.0 - 1e-12);
    double total = 0.0;
    double prev = 0.0;
    for (long len = 1; len <= cap; ++len) {
      const double pmf = dist.pmf(len);
      CHECK(pmf >= 0.0);
      total += pmf;
      const double c = dist.cdf(len);
      CHECK(c >= prev - 1e-15);
      prev = c;
      if (len % 7 == 0) {
        CHECK(c == doctest::Approx(total).epsilon(1e-10));
        CHECK(dist.survival(len) == doctest::Approx(1.0 - c).epsilon(1e-9));
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(dist.mean() > 0.0);
  }
}

TEST_CASE("first segment law") {
  SUBCASE("geometric is memoryless") {
    const LosDistribution g(Geometric{0.15});
    for (long len = 1; len < 60; ++len) CHECK(first_segment_pmf(g, len) == doctest::Approx(g.pmf(len)).epsilon(1e-12));
  }
  SUBCASE("uniform(1,3)") {
    const LosDistribution u(DiscreteUniform{1, 3});
    CHECK(first_segment_pmf(u, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(first_segment_pmf(u, 2) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(first_segment_pmf(u, 3) == doctest::Approx(1.0 / 6).epsilon(1e-15));
    CHECK(first_segment_pmf(u, 4) == 0.0);
  }
  SUBCASE("normalises for every family") {
    for (const auto& dist : sample_laws()) {
      CAPTURE(dist.family());
      double total = 0.0;
      long len = 1;
      for (; len < 100000; ++len) {
        total += first_segment_pmf(dist, len);
        if (std::exp(first_segment_log_survival(dist, len)) < 1e-12) break;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
      // log survival agrees with 1 - partial sums
      double partial = 0.0;
      for (long l = 1; l <= 20; ++l) {
        partial += first_segment_pmf(dist, l);
        CHECK(std::exp(first_segment_log_survival(dist, l)) == doctest::Approx(1.0 - partial).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("transition kernel examples") {
  const ProcessParams geo(LosDistribution(Geometric{0.2}), LosDistribution(Geometric{0.1}), 0.7);
  for (long t = 2; t < 30; ++t) {
    for (long c : {0L, 1L, t - 1}) {
      if (c >= t) continue;
      CHECK(transition_prob({c, SegmentType::Normal}, {c, SegmentType::Normal}, t, geo) ==
            doctest::Approx(0.8).epsilon(1e-12));
      CHECK(transition_prob({c, SegmentType::Normal}, {t, SegmentType::Abnormal}, t, geo) ==
            doctest::Approx(0.2).epsilon(1e-12));
      CHECK(transition_prob({c, SegmentType::Normal}, {t, SegmentType::Normal}, t, geo) == 0.0);
      CHECK(transition_prob({c, SegmentType::Abnormal}, {t, SegmentType::Normal}, t, geo) ==
            doctest::Approx(0.7 * 0.1).epsilon(1e-12));
      CHECK(transition_prob({c, SegmentType::Abnormal}, {t, SegmentType::Abnormal}, t, geo) ==
            doctest::Approx(0.3 * 0.1).epsilon(1e-12));
    }
  }
  // successor end outside {c, t}
  CHECK(transition_prob({2, SegmentType::Abnormal}, {3, SegmentType::Abnormal}, 6, geo) == 0.0);
  CHECK(transition_prob({2, SegmentType::Abnormal}, {2, SegmentType::Normal}, 6, geo) == 0.0);

  const ProcessParams nb(LosDistribution(NegativeBinomial{3, 0.2}), LosDistribution(NegativeBinomial{2, 0.4}), 0.4);
  const long t = 9;
  const long i = 4;
  const auto& ga = nb.los_abnormal;
  const double h = (ga.cdf(t - i) - ga.cdf(t - i - 1)) / (1.0 - ga.cdf(t - i - 1));
  CHECK(transition_prob({i, SegmentType::Abnormal}, {t, SegmentType::Normal}, t, nb) ==
        doctest::Approx(0.4 * h).epsilon(1e-10));
  CHECK(transition_prob({i, SegmentType::Abnormal}, {t, SegmentType::Abnormal}, t, nb) ==
        doctest::Approx(0.6 * h).epsilon(1e-10));
  CHECK(transition_prob({i, SegmentType::Abnormal}, {i, SegmentType::Abnormal}, t, nb) ==
        doctest::Approx((1.0 - ga.cdf(t - i)) / (1.0 - ga.cdf(t - i - 1))).epsilon(1e-10));
}

TEST_CASE("transition probabilities out of every state sum to one") {
  const std::vector<ProcessParams> grid{
      {LosDistribution(Geometric{0.3}), LosDistribution(Geometric{0.5}), 1.0},
      {LosDistribution(NegativeBinomial{10, 0.1}), LosDistribution(NegativeBinomial{15, 0.3}), 0.5},
      {LosDistribution(DiscreteUniform{1, 3}), LosDistribution(DiscreteUniform{2, 7}), 0.8},
      {LosDistribution(ShiftedPoisson{4.0}), LosDistribution(NegativeBinomial{0.5, 0.6}), 0.2},
  };
  for (const auto& params : grid) {
    const TransitionModel table(params, 51);
    for (long t = 1; t <= 50; ++t) {
      for (long c = 0; c < t; ++c) {
        for (SegmentType b : {SegmentType::Normal, SegmentType::Abnormal}) {
          double total = 0.0;
          for (long c2 : {c, t})
            for (SegmentType b2 : {SegmentType::Normal, SegmentType::Abnormal})
              total += transition_prob({c, b}, {c2, b2}, t, params);
          CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

          // Tabulated kernel agrees with the direct evaluation.
          const long elapsed = t - c;
          const bool first = c == 0;
          CHECK(std::exp(table.log_continue(b, elapsed, first)) ==
                doctest::Approx(transition_prob({c, b}, {c, b}, t, params)).epsilon(1e-9));
          for (SegmentType b2 : {SegmentType::Normal, SegmentType::Abnormal})
            CHECK(std::exp(table.log_birth(b, b2, elapsed, first)) ==
                  doctest::Approx(transition_prob({c, b}, {t, b2}, t, params)).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("uniform hazard at the maximum length is exactly one") {
  const ProcessParams params(LosDistribution(DiscreteUniform{2, 6}), LosDistribution(DiscreteUniform{1, 4}), 0.5);
  const TransitionModel table(params, 20);
  CHECK(table.log_hazard(SegmentType::Normal, 6, false) == 0.0);
  CHECK(table.log_hazard(SegmentType::Abnormal, 4, false) == 0.0);
  CHECK(table.log_continue(SegmentType::Abnormal, 4, false) == -INFINITY);
  CHECK(transition_prob({3, SegmentType::Normal}, {9, SegmentType::Abnormal}, 9, params) == 1.0);
  CHECK(transition_prob({3, SegmentType::Normal}, {3, SegmentType::Normal}, 9, params) == 0.0);
  // below the minimum length a segment cannot end
  CHECK(table.log_hazard(SegmentType::Normal, 1, false) == -INFINITY);
}

TEST_CASE("initial distribution") {
  const ProcessParams sym(LosDistribution(Geometric{0.1}), LosDistribution(Geometric{0.1}), 1.0);
  CHECK(initial_prob(SegmentType::Normal, sym) == doctest::Approx(0.5));
  const ProcessParams half(LosDistribution(Geometric{0.1}), LosDistribution(Geometric{0.1}), 0.5);
  CHECK(initial_prob(SegmentType::Normal, half) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(initial_prob(SegmentType::Abnormal, half) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(ProcessParams(LosDistribution(Geometric{0.1}), LosDistribution(Geometric{0.1}), 0.0), ConfigError);
}

TEST_CASE("long-run fraction of normal time matches the stationary initial probability") {
  const ProcessParams params(LosDistribution(NegativeBinomial{10, 0.1}), LosDistribution(NegativeBinomial{15, 0.3}),
                             0.5);
  Rng rng = make_stream(99, "test");
  const auto path = simulate_hidden(params, 1'000'000, rng);
  double normal = 0.0;
  for (const auto& s : path.segments)
    if (s.type == SegmentType::Normal) normal += static_cast<double>(s.length());
  const double frac = normal / static_cast<double>(path.n());
  // ~ 1.5e4 renewal cycles; the Monte Carlo standard error is below 0.004.
  CHECK(std::abs(frac - initial_prob(SegmentType::Normal, params)) < 0.012);
}
