#include "bard/process.hpp"

#include <cmath>

#include "bard/error.hpp"
#include "bard/logmath.hpp"

namespace bard {
namespace {

// log survival of the segment law in force for a segment (first or not).
double segment_log_survival(const LosDistribution& dist, long len, bool first) {
  return first ? first_segment_log_survival(dist, len) : dist.log_survival(len);
}

double segment_log_pmf(const LosDistribution& dist, long len, bool first) {
  if (!first) return dist.log_pmf(len);
  return dist.log_survival(len - 1) - std::log(dist.mean());
}

struct Step {
  double log_continue;
  double log_hazard;
};

// Hazard of ending at elapsed length `len`, given the segment has lasted that long.
Step hazard_step(double log_pmf, double log_surv_prev, double log_surv) {
  if (log_surv_prev == kNegInf || log_surv == kNegInf) return {kNegInf, 0.0};
  const double log_cont = std::min(0.0, log_surv - log_surv_prev);
  const double log_haz = std::min(0.0, log_pmf - log_surv_prev);
  return {log_cont, log_haz};
}

}  // namespace

ProcessParams::ProcessParams(LosDistribution normal, LosDistribution abnormal, double pi_n)
    : los_normal(std::move(normal)), los_abnormal(std::move(abnormal)), pi_n(pi_n) {
  if (!(pi_n > 0.0 && pi_n <= 1.0)) throw ConfigError("pi_n must lie in (0, 1]");
  if (!std::isfinite(los_normal.mean()) || !std::isfinite(los_abnormal.mean()))
    throw ConfigError("LOS laws must have finite means");
}

double initial_prob(SegmentType b, const ProcessParams& params) {
  const double en = params.los_normal.mean();
  const double ea = params.los_abnormal.mean();
  const double pn = params.pi_n * en / (params.pi_n * en + ea);
  return b == SegmentType::Normal ? pn : 1.0 - pn;
}

double log_type_factor(SegmentType from, SegmentType to, const ProcessParams& params) {
  if (from == SegmentType::Normal) return to == SegmentType::Abnormal ? 0.0 : kNegInf;
  if (to == SegmentType::Normal) return std::log(params.pi_n);
  return params.pi_n >= 1.0 ? kNegInf : std::log1p(-params.pi_n);
}

double transition_prob(const HiddenState& from, const HiddenState& to, long t, const ProcessParams& params) {
  if (from.c < 0 || from.c >= t) throw DomainError("transition_prob: from.c must lie in [0, t)");
  const bool first = from.c == 0;
  const long elapsed = t - from.c;
  const LosDistribution& dist = params.los(from.b);
  const Step step = hazard_step(segment_log_pmf(dist, elapsed, first),
                                segment_log_survival(dist, elapsed - 1, first),
                                segment_log_survival(dist, elapsed, first));
  if (to.c == from.c) return to.b == from.b ? std::exp(step.log_continue) : 0.0;
  if (to.c == t) return std::exp(step.log_hazard + log_type_factor(from.b, to.b, params));
  return 0.0;
}

TransitionModel::Table TransitionModel::build(const LosDistribution& dist, long horizon, bool first) {
  Table out;
  const auto size = static_cast<std::size_t>(horizon) + 1;
  out.log_continue.assign(size, kNegInf);
  out.log_hazard.assign(size, 0.0);

  std::vector<double> log_surv(size);
  if (first) {
    // Tail sums T(len) = sum_{j >= len} S(j): one forward evaluation at the
    // horizon, then the backward recurrence T(len) = T(len + 1) + S(len).
    const double log_mean = std::log(dist.mean());
    double tail = log_survival_tail_sum(dist, horizon);
    log_surv[size - 1] = tail - log_mean;
    for (long len = horizon - 1; len >= 0; --len) {
      tail = log_add_exp(tail, dist.log_survival(len));
      log_surv[static_cast<std::size_t>(len)] = tail - log_mean;
    }
  } else {
    for (long len = 0; len <= horizon; ++len) log_surv[static_cast<std::size_t>(len)] = dist.log_survival(len);
  }

  for (long len = 1; len <= horizon; ++len) {
    const auto i = static_cast<std::size_t>(len);
    const Step step = hazard_step(segment_log_pmf(dist, len, first), log_surv[i - 1], log_surv[i]);
    out.log_continue[i] = step.log_continue;
    out.log_hazard[i] = step.log_hazard;
  }
  return out;
}

TransitionModel::TransitionModel(const ProcessParams& params, long horizon)
    : params_(params), horizon_(horizon) {
  if (horizon < 1) throw DomainError("TransitionModel: horizon must be >= 1");
  for (SegmentType b : {SegmentType::Normal, SegmentType::Abnormal}) {
    tables_[index(b)][0] = build(params.los(b), horizon, false);
    tables_[index(b)][1] = build(params.los(b), horizon, true);
    log_initial_[index(b)] = std::log(initial_prob(b, params));
    for (SegmentType to : {SegmentType::Normal, SegmentType::Abnormal})
      log_factor_[index(b)][index(to)] = log_type_factor(b, to, params);
  }
}

}  // namespace bard
