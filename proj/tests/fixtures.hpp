#pragma once
// Shared generators for randomized test instances.

#include <cmath>
#include <random>
#include <vector>

#include "bard/filter.hpp"
#include "bard/rng.hpp"

namespace fixtures {

struct Instance {
  bard::DataMatrix data;
  bard::ModelParams params;
};

inline bard::LosDistribution random_los(bard::Rng& rng) {
  std::uniform_int_distribution<int> family(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (family(rng)) {
    case 0:
      return bard::LosDistribution(bard::Geometric{0.1 + 0.8 * u(rng)});
    case 1:
      return bard::LosDistribution(bard::NegativeBinomial{0.5 + 4.0 * u(rng), 0.2 + 0.7 * u(rng)});
    case 2: {
      const long a = 1 + static_cast<long>(3 * u(rng));
      return bard::LosDistribution(bard::DiscreteUniform{a, a + static_cast<long>(5 * u(rng))});
    }
    default:
      return bard::LosDistribution(bard::ShiftedPoisson{0.3 + 4.0 * u(rng)});
  }
}

// Small instance: n in [n_lo, n_hi], d in [1, 3], a few quadrature nodes.
inline Instance random_instance(std::uint64_t seed, long n_lo = 3, long n_hi = 8) {
  bard::Rng rng = bard::make_stream(seed, "test.instance");
  std::uniform_int_distribution<long> n_dist(n_lo, n_hi);
  std::uniform_int_distribution<std::size_t> d_dist(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const long n = n_dist(rng);
  const std::size_t d = d_dist(rng);

  bard::LikelihoodParams lp;
  lp.sigma2 = 0.5 + u(rng);
  lp.p.clear();
  for (std::size_t k = 0; k < d; ++k) lp.p.push_back(0.05 + 0.9 * u(rng));
  lp.quad_nodes = 6;
  lp.mu_prior = bard::MuPrior({{-1.5, -0.4}, {0.4, 1.5}});

  const auto normal = random_los(rng);
  const auto abnormal = random_los(rng);
  const double pi_n = 0.1 + 0.9 * u(rng);

  std::vector<double> values(static_cast<std::size_t>(n) * d);
  // Occasional level shift so both segment types carry posterior mass.
  const long shift_at = 1 + static_cast<long>(u(rng) * static_cast<double>(n));
  for (long t = 0; t < n; ++t)
    for (std::size_t k = 0; k < d; ++k)
      values[static_cast<std::size_t>(t) * d + k] = z(rng) * std::sqrt(lp.sigma2) + (t >= shift_at && k == 0 ? 1.0 : 0.0);
  return {bard::DataMatrix(n, d, std::move(values)),
          bard::ModelParams{bard::ProcessParams(normal, abnormal, pi_n), lp}};
}

// Data of n rows from N(0, 1) with an optional mean shift on the first
// `affected` columns over [start, end].
inline bard::DataMatrix noise_with_segment(long n, std::size_t d, std::uint64_t seed, long start = 0, long end = -1,
                                           std::size_t affected = 0, double mu = 0.0) {
  bard::Rng rng = bard::make_stream(seed, "test.noise");
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> values(static_cast<std::size_t>(n) * d);
  for (long t = 1; t <= n; ++t)
    for (std::size_t k = 0; k < d; ++k)
      values[static_cast<std::size_t>(t - 1) * d + k] = z(rng) + (t >= start && t <= end && k < affected ? mu : 0.0);
  return bard::DataMatrix(n, d, std::move(values));
}

}  // namespace fixtures
