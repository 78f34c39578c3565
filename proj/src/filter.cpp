#include "bard/filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bard/error.hpp"
#include "bard/logmath.hpp"

namespace bard {
namespace {

constexpr SegmentType kTypes[2] = {SegmentType::Normal, SegmentType::Abnormal};

double normalise(std::vector<Particle>& particles, long t) {
  double total = kNegInf;
  for (const auto& p : particles) total = log_add_exp(total, p.log_prob);
  if (!std::isfinite(total))
    throw NumericalError("filter: total mass is zero or non-finite at t = " + std::to_string(t));
  for (auto& p : particles) p.log_prob -= total;
  return total;
}

}  // namespace

InferenceModel::InferenceModel(const DataMatrix& data, const ModelParams& params)
    : InferenceModel(data, params, kernels::active()) {}

InferenceModel::InferenceModel(const DataMatrix& data, const ModelParams& params, const kernels::KernelSet& kernel)
    : segments_(data, params.likelihood,
                QuadratureGrid::build(params.likelihood.mu_prior, params.likelihood.quad_nodes, params.likelihood.rule), kernel),
      transitions_(params.process, static_cast<long>(data.n())) {}

FilterState filter_init(const InferenceModel& model) {
  FilterState state;
  state.t = 1;
  for (SegmentType b : kTypes) {
    const double ml = model.segments().log_p(b, 1, 1);
    state.particles.push_back({0, b, model.transitions().log_initial(b) + ml, ml, 0});
  }
  state.log_evidence_increment = normalise(state.particles, 1);
  return state;
}

FilterState filter_step(const FilterState& state, const InferenceModel& model) {
  const long t = state.t;
  const long t_next = t + 1;
  if (t < 1 || t_next > model.n()) throw DomainError("filter_step: time index out of range");
  const auto& transitions = model.transitions();
  const auto& segments = model.segments();

  FilterState next;
  next.t = t_next;
  next.particles.reserve(state.particles.size() + 2);

  // log sum over parents of type b of mass x hazard
  double ending[2] = {kNegInf, kNegInf};

  for (const Particle& p : state.particles) {
    const long elapsed = t - p.c;
    const bool first = p.c == 0;
    const auto bi = static_cast<std::size_t>(p.b);
    ending[bi] = log_add_exp(ending[bi], p.log_prob + transitions.log_hazard(p.b, elapsed, first));

    const double log_cont = transitions.log_continue(p.b, elapsed, first);
    if (log_cont == kNegInf) continue;

    Particle q = p;
    if (q.b == SegmentType::Normal && q.steps_since_refresh >= kCacheRefreshInterval) {
      q.log_seg_ml = segments.log_p_normal(q.c + 1, t);
      q.steps_since_refresh = 0;
    }
    const auto step = segments.extend(q.b, q.log_seg_ml, q.c, t_next);
    q.log_prob = p.log_prob + log_cont + step.log_ratio;
    q.log_seg_ml = step.log_seg_ml;
    ++q.steps_since_refresh;
    if (q.log_prob != kNegInf) next.particles.push_back(q);
  }

  for (SegmentType to : kTypes) {
    double mass = kNegInf;
    for (SegmentType from : kTypes)
      mass = log_add_exp(mass, ending[static_cast<std::size_t>(from)] + transitions.log_factor(from, to));
    if (mass == kNegInf) continue;
    const double ml = segments.log_p(to, t_next, t_next);
    next.particles.push_back({t, to, mass + ml, ml, 0});
  }

  next.log_evidence_increment = normalise(next.particles, t_next);
  return next;
}

double ks_distance(std::span<const double> before, std::span<const double> after) {
  double cum_before = 0.0;
  double cum_after = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    cum_before += before[i];
    cum_after += after[i];
    worst = std::max(worst, std::abs(cum_before - cum_after));
  }
  return worst;
}

std::vector<Particle> src_prune(std::span<const Particle> particles, const SrcOptions& options, Rng& rng,
                                double* ks_out) {
  const double alpha = options.alpha;
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("src: alpha must lie in [0, 1)");
  if (alpha == 0.0) return {particles.begin(), particles.end()};

  const double log_alpha = std::log(alpha);
  double u = alpha * uniform_open01(rng);
  std::vector<Particle> kept;
  kept.reserve(particles.size());
  const bool track = options.check_ks || ks_out != nullptr;
  std::vector<double> before;
  std::vector<double> after;
  if (track) {
    before.reserve(particles.size());
    after.reserve(particles.size());
  }

  for (const Particle& p : particles) {
    const double w = std::exp(p.log_prob);
    double w_out = 0.0;
    if (w >= alpha) {
      kept.push_back(p);
      w_out = w;
    } else {
      u -= w;
      if (u <= 0.0) {
        Particle q = p;
        q.log_prob = log_alpha;
        kept.push_back(q);
        u += alpha;
        w_out = alpha;
      }
    }
    if (track) {
      before.push_back(w);
      after.push_back(w_out);
    }
  }

  if (track) {
    const double ks = ks_distance(before, after);
    if (ks_out) *ks_out = ks;
    if (options.check_ks && ks > alpha * (1.0 + 1e-9) + 1e-15)
      throw NumericalError("src: Kolmogorov-Smirnov distance " + std::to_string(ks) + " exceeds alpha");
  }
  normalise(kept, 0);
  return kept;
}

void FilterHistory::append(const FilterState& state) {
  if (state.t != n() + 1) throw DomainError("filter history: states must be appended in time order");
  for (const auto& p : state.particles)
    particles_.push_back({static_cast<std::int32_t>(p.c), p.b, p.log_prob});
  offsets_.push_back(particles_.size());
}

FilterHistory FilterHistory::from_raw(std::vector<std::size_t> offsets, std::vector<StoredParticle> particles) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != particles.size() ||
      !std::is_sorted(offsets.begin(), offsets.end()))
    throw InputError("filter history: inconsistent offsets");
  FilterHistory h;
  h.offsets_ = std::move(offsets);
  h.particles_ = std::move(particles);
  return h;
}

FilterResult run_filter(const InferenceModel& model, const FilterOptions& options) {
  FilterResult result;
  const long n = model.n();
  result.filtered_abnormal.assign(static_cast<std::size_t>(n) + 1, 0.0);
  Rng rng = make_stream(options.seed, "src");
  const SrcOptions src{options.alpha, options.check_ks};

  FilterState state = filter_init(model);
  for (long t = 1;; ++t) {
    if (t > 1) state = filter_step(state, model);
    result.log_evidence += state.log_evidence_increment;

    if (options.alpha > 0.0) {
      double ks = 0.0;
      state.particles = src_prune(state.particles, src, rng, options.check_ks ? &ks : nullptr);
      result.max_ks = std::max(result.max_ks, ks);
    }

    double abnormal = 0.0;
    for (const auto& p : state.particles)
      if (p.b == SegmentType::Abnormal) abnormal += std::exp(p.log_prob);
    result.filtered_abnormal[static_cast<std::size_t>(t)] = abnormal;
    result.max_particles = std::max(result.max_particles, state.particles.size());
    if (options.keep_history) result.history.append(state);
    if (t == n) break;
  }
  return result;
}

}  // namespace bard
