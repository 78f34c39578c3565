#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "bard/data.hpp"
#include "bard/likelihood.hpp"
#include "bard/posterior.hpp"
#include "bard/process.hpp"
#include "bard/rng.hpp"

namespace bard {

// Inverse-cdf sampler for a LOS law truncated at its 1 - 1e-12 quantile.
// With first = true it samples the stationary first-segment law instead.
class LosSampler {
 public:
  explicit LosSampler(const LosDistribution& dist, bool first = false);
  long draw(Rng& rng) const;
  long max_length() const { return static_cast<long>(cdf_.size()); }

 private:
  std::vector<double> cdf_;  // cdf_[i] = Pr(len <= i + 1), last entry 1
};

struct UniformMu {
  MuPrior support;
};
struct NormalMu {
  double mean;
  double sd;
};
struct EmpiricalMu {
  std::vector<double> values;
};
using MuLaw = std::variant<UniformMu, NormalMu, EmpiricalMu>;

struct GaussianNoise {
  double sigma2 = 1.0;
};
struct StudentTNoise {
  double df = 15.0;
  bool standardize = false;  // rescale to unit variance
};
using NoiseLaw = std::variant<GaussianNoise, StudentTNoise>;

// Fraction of dimensions affected in each abnormal segment, drawn uniformly
// from [lo, hi] per segment. exact_count affects round(fraction * d) dimensions
// chosen at random (at least one); otherwise each dimension independently.
struct AffectedLaw {
  double lo = 0.04;
  double hi = 0.04;
  bool exact_count = false;
};

// Abnormal segments at fixed starts, with lengths 1 + Poisson(lambda) and
// lambda drawn from `intensities`. A flagged start gets a second abnormal
// segment immediately after the first.
struct FixedLayout {
  std::vector<long> starts;
  std::vector<bool> followed_by_abnormal;
  std::vector<double> intensities;
};

struct Scenario {
  long n_target = 1000;
  std::size_t d = 200;
  std::optional<ProcessParams> process;
  std::optional<FixedLayout> layout;
  AffectedLaw affected;
  MuLaw mu = UniformMu{MuPrior({{0.3, 0.7}})};
  NoiseLaw noise = GaussianNoise{};
  std::uint64_t seed = 1;

  // Throws ConfigError on violated invariants.
  void validate() const;
};

struct TruthSegment {
  Segment segment;
  double mu = 0.0;                    // 0 for normal segments
  std::vector<std::size_t> affected;  // empty for normal segments
};

struct Truth {
  long n = 0;
  std::size_t d = 0;
  std::vector<TruthSegment> segments;

  Segmentation segmentation() const;
  IntervalSet abnormal_intervals() const;
  // Maximal runs of abnormal time points: back-to-back abnormal segments joined.
  // A per-time-point call cannot separate such segments, so these are the
  // units segmentations are scored against by default.
  IntervalSet abnormal_regions() const;
  // Index t = 1..n.
  std::vector<bool> abnormal_labels() const;
};

struct SimulatedData {
  DataMatrix data;
  Truth truth;
};

// Alternating renewal path: first segment from the stationary law, normal
// always followed by abnormal, abnormal followed by normal w.p. pi_n; whole
// segments are generated until the total length reaches n_target.
Segmentation simulate_hidden(const ProcessParams& process, long n_target, Rng& rng);
Segmentation fixed_layout_hidden(const FixedLayout& layout, long n, Rng& rng);

SimulatedData simulate_data(const Segmentation& segmentation, const Scenario& scenario, Rng& rng);

// Hidden path and data from the scenario's own seed (streams "simulate.hidden"
// and "simulate.data").
SimulatedData simulate(const Scenario& scenario);

}  // namespace bard
