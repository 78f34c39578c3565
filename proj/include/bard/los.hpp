#pragma once

#include <string>
#include <variant>

namespace bard {

// Length-of-stay laws on the positive integers. Every family is shifted or
// bounded so that the support starts at 1.

// q(1-q)^(len-1), mean 1/q.
struct Geometric {
  double q;
};

// 1 + (failures before the r-th success with success probability p).
// Mean 1 + r(1-p)/p. r may be any positive real.
struct NegativeBinomial {
  double r;
  double p;
};

// Uniform on {a, ..., b}, 1 <= a <= b.
struct DiscreteUniform {
  long a;
  long b;
};

// 1 + Poisson(lambda). Mean 1 + lambda.
struct ShiftedPoisson {
  double lambda;
};

class LosDistribution {
 public:
  using Law = std::variant<Geometric, NegativeBinomial, DiscreteUniform, ShiftedPoisson>;

  // Throws ConfigError when parameters are outside their valid ranges.
  explicit LosDistribution(Law law);

  const Law& law() const { return law_; }
  std::string family() const;

  // Pr(length = len). Throws DomainError for len < 1.
  double pmf(long len) const;
  double log_pmf(long len) const;

  // Pr(length <= len); cdf(0) == 0.
  double cdf(long len) const;
  // Pr(length > len), computed directly rather than as 1 - cdf.
  double survival(long len) const;
  double log_survival(long len) const;

  double mean() const;
  // Largest length with positive mass, or -1 for unbounded support.
  long max_length() const;
  // Smallest len with cdf(len) >= prob.
  long quantile(double prob) const;

  bool operator==(const LosDistribution& other) const;

 private:
  Law law_;
};

// Stationary forward-recurrence law of the first observed segment:
// pmf0(len) = survival(len - 1) / mean.
double first_segment_pmf(const LosDistribution& dist, long len);

// log Pr(first segment length > len) = log(sum_{j >= len} survival(j)) - log(mean).
double first_segment_log_survival(const LosDistribution& dist, long len);

// log sum_{j >= len} survival(j), evaluated by forward summation of the tail.
double log_survival_tail_sum(const LosDistribution& dist, long len);

}  // namespace bard
