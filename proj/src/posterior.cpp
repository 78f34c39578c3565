#include "bard/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "bard/error.hpp"
#include "bard/logmath.hpp"

namespace bard {
namespace {

// Index drawn with probability proportional to exp(log_w[i]).
std::size_t draw_index(std::span<const double> log_w, Rng& rng, long t) {
  double hi = kNegInf;
  for (double v : log_w) hi = std::max(hi, v);
  if (!std::isfinite(hi))
    throw NumericalError("backward sampling: zero conditional mass at t = " + std::to_string(t));
  double total = 0.0;
  for (double v : log_w) total += std::exp(v - hi);
  double u = uniform01(rng) * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    const double w = std::exp(log_w[i] - hi);
    if (w <= 0.0) continue;
    last_positive = i;
    u -= w;
    if (u < 0.0) return i;
  }
  return last_positive;
}

}  // namespace

bool Segmentation::valid(long n) const {
  if (segments.empty()) return false;
  long expect = 1;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.start != expect || s.end < s.start) return false;
    if (i > 0 && s.type == SegmentType::Normal && segments[i - 1].type == SegmentType::Normal) return false;
    expect = s.end + 1;
  }
  return expect == n + 1;
}

IntervalSet Segmentation::abnormal_intervals() const {
  IntervalSet out;
  for (const auto& s : segments)
    if (s.type == SegmentType::Abnormal) out.push_back({s.start, s.end});
  return out;
}

Segmentation backward_sample(const FilterHistory& history, const TransitionModel& transitions, Rng& rng) {
  const long n = history.n();
  if (n < 1) throw DomainError("backward_sample: empty filter history");
  std::vector<Segment> reversed;
  std::vector<double> log_w;

  auto final_state = history.at(n);
  log_w.resize(final_state.size());
  for (std::size_t i = 0; i < final_state.size(); ++i) log_w[i] = final_state[i].log_prob;
  const auto& chosen = final_state[draw_index(log_w, rng, n)];
  long c = chosen.c;
  SegmentType b = chosen.b;
  reversed.push_back({c + 1, n, b});

  while (c > 0) {
    const long t = c;
    const SegmentType next_type = b;
    auto state = history.at(t);
    log_w.resize(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) {
      const auto& p = state[i];
      log_w[i] = p.log_prob + transitions.log_birth(p.b, next_type, t - p.c, p.c == 0);
    }
    const auto& parent = state[draw_index(log_w, rng, t)];
    c = parent.c;
    b = parent.b;
    reversed.push_back({c + 1, t, b});
  }
  return Segmentation{{reversed.rbegin(), reversed.rend()}};
}

std::vector<Segmentation> sample_posterior(const FilterHistory& history, const TransitionModel& transitions,
                                           std::size_t count, std::uint64_t seed, unsigned threads) {
  std::vector<Segmentation> out(count);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = make_stream(seed, "backward", i);
      out[i] = backward_sample(history, transitions, rng);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    work(0, count);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t begin = std::min(count, w * chunk);
    const std::size_t end = std::min(count, begin + chunk);
    pool.emplace_back(work, begin, end);
  }
  return out;
}

PosteriorSummary marginal_abnormal(std::span<const Segmentation> samples, long n) {
  if (samples.empty()) throw DomainError("marginal_abnormal: need at least one sample");
  std::vector<double> diff(static_cast<std::size_t>(n) + 2, 0.0);
  for (const auto& s : samples) {
    for (const auto& seg : s.segments) {
      if (seg.type != SegmentType::Abnormal) continue;
      diff[static_cast<std::size_t>(seg.start)] += 1.0;
      diff[static_cast<std::size_t>(seg.end) + 1] -= 1.0;
    }
  }
  PosteriorSummary summary;
  summary.sample_count = samples.size();
  summary.marginal_abnormal.assign(static_cast<std::size_t>(n) + 1, 0.0);
  double running = 0.0;
  const double scale = 1.0 / static_cast<double>(samples.size());
  for (long t = 1; t <= n; ++t) {
    running += diff[static_cast<std::size_t>(t)];
    summary.marginal_abnormal[static_cast<std::size_t>(t)] = running * scale;
  }
  return summary;
}

LossSpec::LossSpec(double g) : gamma(g) {
  if (!(g > 0.0 && std::isfinite(g))) throw ConfigError("gamma must be positive");
}

PointEstimate map_segmentation(const PosteriorSummary& summary, const LossSpec& loss) {
  const long n = summary.n();
  const double threshold = loss.threshold();
  PointEstimate est;
  est.abnormal.assign(static_cast<std::size_t>(n) + 1, false);
  for (long t = 1; t <= n; ++t) {
    const bool a = summary.marginal_abnormal[static_cast<std::size_t>(t)] >= threshold;
    est.abnormal[static_cast<std::size_t>(t)] = a;
    if (!a) continue;
    if (!est.segments.empty() && est.segments.back().end == t - 1) {
      est.segments.back().end = t;
    } else {
      est.segments.push_back({t, t});
    }
  }
  return est;
}

}  // namespace bard
