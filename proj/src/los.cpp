#include "bard/los.hpp"

#include <boost/math/distributions/negative_binomial.hpp>
#include <boost/math/distributions/poisson.hpp>

#include <cmath>
#include <limits>

#include "bard/error.hpp"
#include "bard/logmath.hpp"

namespace bard {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate(const LosDistribution::Law& law) {
  std::visit(overloaded{
                 [](const Geometric& g) {
                   if (!(g.q > 0.0 && g.q <= 1.0)) throw ConfigError("geometric: q must lie in (0, 1]");
                 },
                 [](const NegativeBinomial& nb) {
                   if (!(nb.r > 0.0 && std::isfinite(nb.r)))
                     throw ConfigError("nbinom: r must be positive and finite");
                   if (!(nb.p > 0.0 && nb.p < 1.0)) throw ConfigError("nbinom: p must lie in (0, 1)");
                 },
                 [](const DiscreteUniform& u) {
                   if (u.a < 1 || u.b < u.a) throw ConfigError("uniform: need 1 <= a <= b");
                 },
                 [](const ShiftedPoisson& p) {
                   if (!(p.lambda > 0.0 && std::isfinite(p.lambda)))
                     throw ConfigError("poisson: lambda must be positive and finite");
                 },
             },
             law);
}

}  // namespace

LosDistribution::LosDistribution(Law law) : law_(law) { validate(law_); }

std::string LosDistribution::family() const {
  return std::visit(overloaded{
                        [](const Geometric&) { return std::string("geometric"); },
                        [](const NegativeBinomial&) { return std::string("nbinom"); },
                        [](const DiscreteUniform&) { return std::string("uniform"); },
                        [](const ShiftedPoisson&) { return std::string("poisson"); },
                    },
                    law_);
}

double LosDistribution::pmf(long len) const { return std::exp(log_pmf(len)); }

double LosDistribution::log_pmf(long len) const {
  if (len < 1) throw DomainError("los pmf: length must be >= 1");
  return std::visit(
      overloaded{
          [len](const Geometric& g) {
            if (g.q == 1.0) return len == 1 ? 0.0 : kNegInf;
            return std::log(g.q) + static_cast<double>(len - 1) * std::log1p(-g.q);
          },
          [len](const NegativeBinomial& nb) {
            const double y = static_cast<double>(len - 1);
            return std::lgamma(y + nb.r) - std::lgamma(nb.r) - std::lgamma(y + 1.0) +
                   nb.r * std::log(nb.p) + y * std::log1p(-nb.p);
          },
          [len](const DiscreteUniform& u) {
            if (len < u.a || len > u.b) return kNegInf;
            return -std::log(static_cast<double>(u.b - u.a + 1));
          },
          [len](const ShiftedPoisson& p) {
            const double y = static_cast<double>(len - 1);
            return y * std::log(p.lambda) - p.lambda - std::lgamma(y + 1.0);
          },
      },
      law_);
}

double LosDistribution::cdf(long len) const {
  if (len <= 0) return 0.0;
  return std::visit(
      overloaded{
          [len](const Geometric& g) { return -std::expm1(static_cast<double>(len) * std::log1p(-g.q)); },
          [len](const NegativeBinomial& nb) {
            return boost::math::cdf(boost::math::negative_binomial(nb.r, nb.p), static_cast<double>(len - 1));
          },
          [len](const DiscreteUniform& u) {
            if (len < u.a) return 0.0;
            if (len >= u.b) return 1.0;
            return static_cast<double>(len - u.a + 1) / static_cast<double>(u.b - u.a + 1);
          },
          [len](const ShiftedPoisson& p) {
            return boost::math::cdf(boost::math::poisson(p.lambda), static_cast<double>(len - 1));
          },
      },
      law_);
}

double LosDistribution::survival(long len) const {
  if (len <= 0) return 1.0;
  return std::visit(
      overloaded{
          [len](const Geometric& g) {
            if (g.q == 1.0) return 0.0;
            return std::exp(static_cast<double>(len) * std::log1p(-g.q));
          },
          [len](const NegativeBinomial& nb) {
            return boost::math::cdf(boost::math::complement(boost::math::negative_binomial(nb.r, nb.p),
                                                            static_cast<double>(len - 1)));
          },
          [len](const DiscreteUniform& u) {
            if (len < u.a) return 1.0;
            if (len >= u.b) return 0.0;
            return static_cast<double>(u.b - len) / static_cast<double>(u.b - u.a + 1);
          },
          [len](const ShiftedPoisson& p) {
            return boost::math::cdf(
                boost::math::complement(boost::math::poisson(p.lambda), static_cast<double>(len - 1)));
          },
      },
      law_);
}

double LosDistribution::log_survival(long len) const {
  if (len <= 0) return 0.0;
  if (const auto* g = std::get_if<Geometric>(&law_)) {
    if (g->q == 1.0) return kNegInf;
    return static_cast<double>(len) * std::log1p(-g->q);
  }
  const double s = survival(len);
  return s > 0.0 ? std::log(s) : kNegInf;
}

double LosDistribution::mean() const {
  return std::visit(overloaded{
                        [](const Geometric& g) { return 1.0 / g.q; },
                        [](const NegativeBinomial& nb) { return 1.0 + nb.r * (1.0 - nb.p) / nb.p; },
                        [](const DiscreteUniform& u) { return 0.5 * static_cast<double>(u.a + u.b); },
                        [](const ShiftedPoisson& p) { return 1.0 + p.lambda; },
                    },
                    law_);
}

long LosDistribution::max_length() const {
  if (const auto* u = std::get_if<DiscreteUniform>(&law_)) return u->b;
  if (const auto* g = std::get_if<Geometric>(&law_); g && g->q == 1.0) return 1;
  return -1;
}

long LosDistribution::quantile(double prob) const {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("los quantile: prob must lie in (0, 1)");
  const double tail = 1.0 - prob;
  // Exponential search then bisection on the survival function.
  long hi = 1;
  while (survival(hi) > tail) {
    if (hi > (std::numeric_limits<long>::max() >> 2)) throw NumericalError("los quantile: no convergence");
    hi *= 2;
  }
  long lo = hi / 2;  // survival(lo) > tail unless lo == 0
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    if (survival(mid) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

bool LosDistribution::operator==(const LosDistribution& other) const {
  if (law_.index() != other.law_.index()) return false;
  return std::visit(
      [&other](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        const auto& b = std::get<T>(other.law_);
        if constexpr (std::is_same_v<T, Geometric>) return a.q == b.q;
        if constexpr (std::is_same_v<T, NegativeBinomial>) return a.r == b.r && a.p == b.p;
        if constexpr (std::is_same_v<T, DiscreteUniform>) return a.a == b.a && a.b == b.b;
        if constexpr (std::is_same_v<T, ShiftedPoisson>) return a.lambda == b.lambda;
      },
      law_);
}

double first_segment_pmf(const LosDistribution& dist, long len) {
  if (len < 1) throw DomainError("first segment pmf: length must be >= 1");
  const double e = dist.mean();
  if (!(std::isfinite(e) && e > 0.0)) throw ConfigError("first segment pmf: mean must be finite");
  return dist.survival(len - 1) / e;
}

double log_survival_tail_sum(const LosDistribution& dist, long len) {
  if (len < 0) len = 0;
  if (const auto* g = std::get_if<Geometric>(&dist.law())) {
    // sum_{j >= len} (1-q)^j = (1-q)^len / q
    return dist.log_survival(len) - std::log(g->q);
  }
  if (const auto* u = std::get_if<DiscreteUniform>(&dist.law())) {
    if (len >= u->b) return kNegInf;
    // survival(j) = 1 for j < a, (b - j) / (b - a + 1) for a <= j < b
    const double width = static_cast<double>(u->b - u->a + 1);
    double total = 0.0;
    const long flat_end = std::min(u->a, u->b);
    if (len < flat_end) total += static_cast<double>(flat_end - len);
    const long from = std::max(len, u->a);
    if (from < u->b) {
      const double k = static_cast<double>(u->b - from);  // terms (b-from), ..., 1
      total += k * (k + 1.0) / (2.0 * width);
    }
    return std::log(total);
  }
  const double first = dist.log_survival(len);
  if (first == kNegInf) return kNegInf;
  // Terms are summed relative to the first one; the tail of these families is
  // eventually geometric or faster so the loop terminates.
  double rel_sum = 0.0;
  constexpr long kMaxTerms = 200'000'000;
  for (long j = len; j < len + kMaxTerms; ++j) {
    const double ls = dist.log_survival(j);
    if (ls == kNegInf) break;
    const double term = std::exp(ls - first);
    rel_sum += term;
    if (term < 1e-18 * rel_sum) break;
  }
  return first + std::log(rel_sum);
}

double first_segment_log_survival(const LosDistribution& dist, long len) {
  if (len <= 0) return 0.0;
  const double e = dist.mean();
  if (!(std::isfinite(e) && e > 0.0)) throw ConfigError("first segment law: mean must be finite");
  return log_survival_tail_sum(dist, len) - std::log(e);
}

}  // namespace bard
