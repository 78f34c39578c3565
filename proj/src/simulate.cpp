#include "bard/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bard/error.hpp"

namespace bard {
namespace {

constexpr double kTruncation = 1e-12;

double draw_mu(const MuLaw& law, Rng& rng) {
  if (const auto* u = std::get_if<UniformMu>(&law)) {
    double x = uniform01(rng) * u->support.total_length();
    for (const auto& iv : u->support.intervals()) {
      const double w = iv.hi - iv.lo;
      if (x < w) return iv.lo + x;
      x -= w;
    }
    return u->support.intervals().back().hi;
  }
  if (const auto* nm = std::get_if<NormalMu>(&law)) {
    std::normal_distribution<double> dist(nm->mean, nm->sd);
    return dist(rng);
  }
  const auto& values = std::get<EmpiricalMu>(law).values;
  const auto i = std::min(values.size() - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(values.size())));
  return values[i];
}

}  // namespace

LosSampler::LosSampler(const LosDistribution& dist, bool first) {
  const long cap = dist.quantile(1.0 - kTruncation);
  double total = 0.0;
  if (first) {
    // The first-segment law has a heavier tail; extend until it is covered too.
    const double mean = dist.mean();
    for (long len = 1;; ++len) {
      total += dist.survival(len - 1) / mean;
      cdf_.push_back(total);
      if (total >= 1.0 - kTruncation || (len >= cap && dist.survival(len) == 0.0)) break;
      if (len > 100 * cap + 1000) break;
    }
  } else {
    for (long len = 1; len <= cap; ++len) {
      total += dist.pmf(len);
      cdf_.push_back(total);
    }
  }
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

long LosSampler::draw(Rng& rng) const {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<long>(std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1)) + 1;
}

void Scenario::validate() const {
  if (n_target < 1) throw ConfigError("scenario: n_target must be >= 1");
  if (d < 1) throw ConfigError("scenario: d must be >= 1");
  if (!process && !layout) throw ConfigError("scenario: need either a process or a fixed layout");
  if (!(affected.lo > 0.0 && affected.hi < 1.0 && affected.lo <= affected.hi))
    throw ConfigError("scenario: affected fractions must satisfy 0 < lo <= hi < 1");
  if (const auto* t = std::get_if<StudentTNoise>(&noise); t && !(t->df > 2.0))
    throw ConfigError("scenario: student-t noise needs df > 2");
  if (const auto* g = std::get_if<GaussianNoise>(&noise); g && !(g->sigma2 > 0.0))
    throw ConfigError("scenario: gaussian noise needs sigma2 > 0");
  if (const auto* e = std::get_if<EmpiricalMu>(&mu); e && e->values.empty())
    throw ConfigError("scenario: empirical mu list is empty");
  if (const auto* nm = std::get_if<NormalMu>(&mu); nm && !(nm->sd >= 0.0))
    throw ConfigError("scenario: normal mu law needs sd >= 0");
  if (layout) {
    if (layout->starts.empty() || layout->intensities.empty())
      throw ConfigError("scenario: fixed layout needs starts and intensities");
    if (layout->followed_by_abnormal.size() != layout->starts.size())
      throw ConfigError("scenario: followed_by_abnormal must match starts");
    if (!std::is_sorted(layout->starts.begin(), layout->starts.end()) || layout->starts.front() < 1 ||
        layout->starts.back() > n_target)
      throw ConfigError("scenario: fixed starts must be increasing and within 1..n_target");
  }
}

Segmentation Truth::segmentation() const {
  Segmentation s;
  for (const auto& ts : segments) s.segments.push_back(ts.segment);
  return s;
}

IntervalSet Truth::abnormal_intervals() const { return segmentation().abnormal_intervals(); }

IntervalSet Truth::abnormal_regions() const { return merge_adjacent(abnormal_intervals()); }

std::vector<bool> Truth::abnormal_labels() const {
  std::vector<bool> out(static_cast<std::size_t>(n) + 1, false);
  for (const auto& ts : segments)
    if (ts.segment.type == SegmentType::Abnormal)
      for (long t = ts.segment.start; t <= ts.segment.end; ++t) out[static_cast<std::size_t>(t)] = true;
  return out;
}

Segmentation simulate_hidden(const ProcessParams& process, long n_target, Rng& rng) {
  if (n_target < 1) throw DomainError("simulate_hidden: n_target must be >= 1");
  const LosSampler normal_first(process.los_normal, true);
  const LosSampler abnormal_first(process.los_abnormal, true);
  const LosSampler normal(process.los_normal);
  const LosSampler abnormal(process.los_abnormal);

  Segmentation out;
  SegmentType type = uniform01(rng) < initial_prob(SegmentType::Normal, process) ? SegmentType::Normal
                                                                                  : SegmentType::Abnormal;
  long len = (type == SegmentType::Normal ? normal_first : abnormal_first).draw(rng);
  long pos = 1;
  for (;;) {
    out.segments.push_back({pos, pos + len - 1, type});
    pos += len;
    if (pos > n_target) break;
    if (type == SegmentType::Normal) {
      type = SegmentType::Abnormal;
    } else {
      type = uniform01(rng) < process.pi_n ? SegmentType::Normal : SegmentType::Abnormal;
    }
    len = (type == SegmentType::Normal ? normal : abnormal).draw(rng);
  }
  return out;
}

Segmentation fixed_layout_hidden(const FixedLayout& layout, long n, Rng& rng) {
  Segmentation out;
  long pos = 1;
  auto draw_len = [&]() {
    const auto i = std::min(layout.intensities.size() - 1,
                            static_cast<std::size_t>(uniform01(rng) * static_cast<double>(layout.intensities.size())));
    std::poisson_distribution<long> pois(layout.intensities[i]);
    return 1 + pois(rng);
  };
  for (std::size_t i = 0; i < layout.starts.size(); ++i) {
    const long start = std::max(layout.starts[i], pos);
    const long limit = i + 1 < layout.starts.size() ? layout.starts[i + 1] - 2 : n;
    if (start > limit) continue;
    if (start > pos) out.segments.push_back({pos, start - 1, SegmentType::Normal});
    long end = std::min(start + draw_len() - 1, limit);
    out.segments.push_back({start, end, SegmentType::Abnormal});
    if (layout.followed_by_abnormal[i] && end < limit) {
      const long second_end = std::min(end + draw_len(), limit);
      out.segments.push_back({end + 1, second_end, SegmentType::Abnormal});
      end = second_end;
    }
    pos = end + 1;
  }
  if (pos <= n) out.segments.push_back({pos, n, SegmentType::Normal});
  return out;
}

SimulatedData simulate_data(const Segmentation& segmentation, const Scenario& scenario, Rng& rng) {
  scenario.validate();
  const long n = segmentation.n();
  const std::size_t d = scenario.d;
  if (!segmentation.valid(n)) throw DomainError("simulate_data: invalid segmentation");

  std::vector<double> values(static_cast<std::size_t>(n) * d);
  if (const auto* g = std::get_if<GaussianNoise>(&scenario.noise)) {
    std::normal_distribution<double> noise(0.0, std::sqrt(g->sigma2));
    for (double& v : values) v = noise(rng);
  } else {
    const auto& t = std::get<StudentTNoise>(scenario.noise);
    std::student_t_distribution<double> noise(t.df);
    const double scale = t.standardize ? std::sqrt((t.df - 2.0) / t.df) : 1.0;
    for (double& v : values) v = scale * noise(rng);
  }

  Truth truth;
  truth.n = n;
  truth.d = d;
  std::vector<std::size_t> dims(d);
  for (const auto& seg : segmentation.segments) {
    TruthSegment ts{seg, 0.0, {}};
    if (seg.type == SegmentType::Abnormal) {
      const double frac = scenario.affected.lo + (scenario.affected.hi - scenario.affected.lo) * uniform01(rng);
      if (scenario.affected.exact_count) {
        const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(frac * static_cast<double>(d))));
        std::iota(dims.begin(), dims.end(), std::size_t{0});
        for (std::size_t i = 0; i < count; ++i) {
          const auto j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(d - i));
          std::swap(dims[i], dims[j]);
        }
        ts.affected.assign(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(count));
        std::sort(ts.affected.begin(), ts.affected.end());
      } else {
        for (std::size_t k = 0; k < d; ++k)
          if (uniform01(rng) < frac) ts.affected.push_back(k);
      }
      ts.mu = draw_mu(scenario.mu, rng);
      for (long t = seg.start; t <= seg.end; ++t)
        for (std::size_t k : ts.affected) values[static_cast<std::size_t>(t - 1) * d + k] += ts.mu;
    }
    truth.segments.push_back(std::move(ts));
  }
  return {DataMatrix(static_cast<std::size_t>(n), d, std::move(values)), std::move(truth)};
}

SimulatedData simulate(const Scenario& scenario) {
  scenario.validate();
  Rng hidden_rng = make_stream(scenario.seed, "simulate.hidden");
  Rng data_rng = make_stream(scenario.seed, "simulate.data");
  const Segmentation hidden = scenario.layout ? fixed_layout_hidden(*scenario.layout, scenario.n_target, hidden_rng)
                                              : simulate_hidden(*scenario.process, scenario.n_target, hidden_rng);
  return simulate_data(hidden, scenario, data_rng);
}

}  // namespace bard
