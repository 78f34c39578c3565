#include "bard/hyperfit.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bard/error.hpp"

namespace bard {
namespace {

struct Moments {
  double mean;
  double var;  // biased (1/N)
};

Moments moments(std::span<const long> xs) {
  double mean = 0.0;
  for (long x : xs) mean += static_cast<double>(x);
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (long x : xs) var += (static_cast<double>(x) - mean) * (static_cast<double>(x) - mean);
  return {mean, var / static_cast<double>(xs.size())};
}

// Profile log-likelihood of NB(r, p = r / (r + ybar)) for y = x - 1, with
// derivatives in r. Lengths are grouped by value.
struct NbProfile {
  std::map<long, double> counts;  // y -> multiplicity
  double total = 0.0;
  double ybar = 0.0;

  double loglik(double r) const {
    double out = 0.0;
    for (const auto& [y, c] : counts)
      out += c * (std::lgamma(static_cast<double>(y) + r) - std::lgamma(static_cast<double>(y) + 1.0));
    out -= total * std::lgamma(r);
    out += total * r * std::log(r / (r + ybar));
    if (ybar > 0.0) out += total * ybar * std::log(ybar / (r + ybar));
    return out;
  }
  double score(double r) const {
    double out = -total * boost::math::digamma(r) + total * std::log(r / (r + ybar));
    for (const auto& [y, c] : counts) out += c * boost::math::digamma(static_cast<double>(y) + r);
    return out;
  }
  double curvature(double r) const {
    double out = -total * boost::math::trigamma(r) + total * (1.0 / r - 1.0 / (r + ybar));
    for (const auto& [y, c] : counts) out += c * boost::math::trigamma(static_cast<double>(y) + r);
    return out;
  }
};

LosFit geometric_fallback(std::span<const long> lengths, std::string why) {
  const double mean = moments(lengths).mean;
  return {LosDistribution(Geometric{std::min(1.0, 1.0 / mean)}), true, std::move(why)};
}

LosFit fit_negative_binomial(std::span<const long> lengths) {
  const Moments m = moments(lengths);
  const double ybar = m.mean - 1.0;
  if (!(ybar > 0.0) || !(m.var > ybar))
    return geometric_fallback(lengths, "variance <= mean - 1: no overdispersion, geometric fitted");

  NbProfile prof;
  for (long x : lengths) prof.counts[x - 1] += 1.0;
  prof.total = static_cast<double>(lengths.size());
  prof.ybar = ybar;

  const double r0 = ybar * ybar / (m.var - ybar);
  double theta = std::log(r0);
  double best = prof.loglik(r0);
  for (int iter = 0; iter < 100; ++iter) {
    const double r = std::exp(theta);
    const double g = r * prof.score(r);
    const double h = g + r * r * prof.curvature(r);
    double step = h < 0.0 ? -g / h : (g > 0.0 ? 1.0 : -1.0);
    step = std::clamp(step, -5.0, 5.0);
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      const double cand = prof.loglik(std::exp(theta + step));
      if (std::isfinite(cand) && cand >= best) {
        theta += step;
        improved = cand > best || std::abs(step) < 1e-12;
        best = cand;
        break;
      }
      step *= 0.5;
    }
    if (!improved || std::abs(step) < 1e-10) break;
    if (theta > std::log(1e8)) break;
  }
  const double r = std::exp(theta);
  if (r > 1e7) return geometric_fallback(lengths, "negative binomial size diverged");
  return {LosDistribution(NegativeBinomial{r, r / (r + ybar)}), false, {}};
}

}  // namespace

SegmentLengths collect_segment_lengths(std::span<const Segmentation> samples) {
  if (samples.empty()) throw DomainError("collect_segment_lengths: need at least one sample");
  SegmentLengths out;
  for (const auto& s : samples) {
    const auto& segs = s.segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (segs[i].type == SegmentType::Abnormal && i + 1 < segs.size()) {
        if (segs[i + 1].type == SegmentType::Normal) {
          ++out.abnormal_to_normal;
        } else {
          ++out.abnormal_to_abnormal;
        }
      }
      if (i == 0 || i + 1 == segs.size()) {
        ++out.censored;
        continue;
      }
      (segs[i].type == SegmentType::Normal ? out.normal : out.abnormal).push_back(segs[i].length());
    }
  }
  return out;
}

LosFamily family_of(const LosDistribution& dist) {
  switch (dist.law().index()) {
    case 0: return LosFamily::Geometric;
    case 1: return LosFamily::NegativeBinomial;
    case 2: return LosFamily::DiscreteUniform;
    default: return LosFamily::Poisson;
  }
}

LosFit fit_los(std::span<const long> lengths, LosFamily family) {
  if (lengths.size() < 2) throw DomainError("fit_los: need at least two observations");
  if (std::any_of(lengths.begin(), lengths.end(), [](long x) { return x < 1; }))
    throw DomainError("fit_los: lengths must be >= 1");
  switch (family) {
    case LosFamily::Geometric:
      return {LosDistribution(Geometric{std::min(1.0, 1.0 / moments(lengths).mean)}), false, {}};
    case LosFamily::NegativeBinomial:
      return fit_negative_binomial(lengths);
    case LosFamily::DiscreteUniform: {
      const auto [lo, hi] = std::minmax_element(lengths.begin(), lengths.end());
      return {LosDistribution(DiscreteUniform{*lo, *hi}), false, {}};
    }
    case LosFamily::Poisson: {
      const double lambda = moments(lengths).mean - 1.0;
      if (!(lambda > 0.0)) return geometric_fallback(lengths, "all lengths equal one, geometric fitted");
      return {LosDistribution(ShiftedPoisson{lambda}), false, {}};
    }
  }
  throw ConfigError("fit_los: unknown family");
}

double los_log_likelihood(std::span<const long> lengths, const LosDistribution& dist) {
  double out = 0.0;
  for (long x : lengths) out += dist.log_pmf(x);
  return out;
}

void McemConfig::validate() const {
  if (max_iters < 1) throw ConfigError("mcem: max_iters must be >= 1");
  if (samples_schedule.empty()) throw ConfigError("mcem: empty sample schedule");
  if (!std::is_sorted(samples_schedule.begin(), samples_schedule.end()))
    throw ConfigError("mcem: sample schedule must be nondecreasing");
  if (samples_schedule.front() < 1) throw ConfigError("mcem: sample counts must be positive");
  if (!(rel_tol > 0.0)) throw ConfigError("mcem: rel_tol must be positive");
}

std::size_t McemConfig::samples_at(std::size_t iter) const {
  return samples_schedule[std::min(iter, samples_schedule.size() - 1)];
}

std::string describe(const LosDistribution& dist) {
  std::ostringstream os;
  os.precision(10);
  std::visit(
      [&os](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Geometric>) os << "geometric(q=" << law.q << ")";
        if constexpr (std::is_same_v<T, NegativeBinomial>) os << "nbinom(r=" << law.r << ",p=" << law.p << ")";
        if constexpr (std::is_same_v<T, DiscreteUniform>) os << "uniform(a=" << law.a << ",b=" << law.b << ")";
        if constexpr (std::is_same_v<T, ShiftedPoisson>) os << "poisson(lambda=" << law.lambda << ")";
      },
      dist.law());
  return os.str();
}

McemResult mcem_fit(const DataMatrix& data, const ModelParams& initial, const McemConfig& config) {
  config.validate();
  ModelParams params = initial;
  McemResult result{initial.process, {}, false, {}};

  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    const InferenceModel model(data, params);
    FilterOptions fopts;
    fopts.alpha = config.alpha;
    fopts.seed = derive_seed(config.seed, "mcem", iter);
    fopts.check_ks = false;
    FilterResult filtered;
    try {
      filtered = run_filter(model, fopts);
    } catch (const NumericalError& e) {
      result.aborted = e.what();
      return result;
    }
    if (!std::isfinite(filtered.log_evidence)) {
      result.aborted = "non-finite log evidence at iteration " + std::to_string(iter);
      return result;
    }

    const std::size_t count = config.samples_at(iter);
    const auto samples = sample_posterior(filtered.history, model.transitions(), count,
                                          derive_seed(config.seed, "mcem.backward", iter), config.threads);
    const SegmentLengths lengths = collect_segment_lengths(samples);

    const ProcessParams& old = params.process;
    LosDistribution normal = old.los_normal;
    LosDistribution abnormal = old.los_abnormal;
    if (lengths.normal.size() >= 2) normal = fit_los(lengths.normal, family_of(old.los_normal)).dist;
    if (lengths.abnormal.size() >= 2) abnormal = fit_los(lengths.abnormal, family_of(old.los_abnormal)).dist;
    double pi_n = old.pi_n;
    if (config.fit_pi_n) {
      pi_n = (static_cast<double>(lengths.abnormal_to_normal) + 1.0) /
             (static_cast<double>(lengths.abnormal_to_normal + lengths.abnormal_to_abnormal) + 2.0);
    }
    ProcessParams next(normal, abnormal, pi_n);

    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    const double change = std::max({rel(next.los_normal.mean(), old.los_normal.mean()),
                                    rel(next.los_abnormal.mean(), old.los_abnormal.mean()), rel(next.pi_n, old.pi_n)});
    result.trace.push_back({iter, count, filtered.log_evidence, next.los_normal.mean(), next.los_abnormal.mean(),
                            next.pi_n, change, describe(next.los_normal), describe(next.los_abnormal)});
    params.process = next;
    result.fitted = next;
    if (change < config.rel_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace bard
