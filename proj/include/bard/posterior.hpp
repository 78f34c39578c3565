#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bard/filter.hpp"
#include "bard/interval.hpp"
#include "bard/process.hpp"
#include "bard/rng.hpp"

namespace bard {

struct Segment {
  long start;
  long end;
  SegmentType type;

  long length() const { return end - start + 1; }
  bool operator==(const Segment&) const = default;
};

// Contiguous typed segments covering 1..n.
struct Segmentation {
  std::vector<Segment> segments;

  long n() const { return segments.empty() ? 0 : segments.back().end; }
  // Tiling of 1..n and no Normal segment directly after a Normal one.
  bool valid(long n) const;
  IntervalSet abnormal_intervals() const;
  bool operator==(const Segmentation&) const = default;
};

// Draws one segmentation from p(x_{1:n} | y_{1:n}) given stored filtering
// distributions. Throws NumericalError if a conditional has zero total mass.
Segmentation backward_sample(const FilterHistory& history, const TransitionModel& transitions, Rng& rng);

// `count` independent draws; draw i uses stream ("backward", i) of `seed`, so
// results do not depend on the thread count.
std::vector<Segmentation> sample_posterior(const FilterHistory& history, const TransitionModel& transitions,
                                           std::size_t count, std::uint64_t seed, unsigned threads = 1);

struct PosteriorSummary {
  // Index t = 1..n; index 0 unused.
  std::vector<double> marginal_abnormal;
  std::size_t sample_count = 0;

  long n() const { return static_cast<long>(marginal_abnormal.size()) - 1; }
};

PosteriorSummary marginal_abnormal(std::span<const Segmentation> samples, long n);

// Asymmetric loss: cost 1 for a false abnormal call, gamma for a missed one.
struct LossSpec {
  double gamma = 1.0 / 3.0;

  explicit LossSpec(double gamma);
  double threshold() const { return 1.0 / (1.0 + gamma); }
  // Posterior expected loss of calling t abnormal / normal given Pr(A) = prob.
  double expected_loss(bool call_abnormal, double prob) const {
    return call_abnormal ? (1.0 - prob) : gamma * prob;
  }
};

struct PointEstimate {
  std::vector<bool> abnormal;       // index t = 1..n
  std::vector<Interval> segments;   // maximal abnormal runs
};

// Label A iff marginal >= 1 / (1 + gamma); runs of A become reported segments.
PointEstimate map_segmentation(const PosteriorSummary& summary, const LossSpec& loss);

}  // namespace bard
