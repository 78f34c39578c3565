#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bard/filter.hpp"
#include "bard/posterior.hpp"

namespace bard {

struct SegmentLengths {
  std::vector<long> normal;
  std::vector<long> abnormal;
  std::size_t censored = 0;  // first/last segments dropped
  // Among interior abnormal segments followed by another segment.
  std::size_t abnormal_to_normal = 0;
  std::size_t abnormal_to_abnormal = 0;
};

// E-step sufficient statistics. The first and last segment of every sample are
// censored and excluded.
SegmentLengths collect_segment_lengths(std::span<const Segmentation> samples);

enum class LosFamily { Geometric, NegativeBinomial, DiscreteUniform, Poisson };

LosFamily family_of(const LosDistribution& dist);

struct LosFit {
  LosDistribution dist;
  bool fell_back = false;  // degenerate data; a Geometric law was fitted instead
  std::string note;
};

// Maximum-likelihood fit within a family. Requires at least two observations.
LosFit fit_los(std::span<const long> lengths, LosFamily family);

// Log-likelihood of observed lengths under a law.
double los_log_likelihood(std::span<const long> lengths, const LosDistribution& dist);

struct McemConfig {
  std::size_t max_iters = 10;
  // Posterior samples per iteration; the last entry repeats once exhausted.
  std::vector<std::size_t> samples_schedule{50, 100, 200, 400, 800, 1000};
  double rel_tol = 0.05;
  std::uint64_t seed = 1;
  double alpha = 1e-4;
  bool fit_pi_n = true;
  unsigned threads = 1;

  void validate() const;
  std::size_t samples_at(std::size_t iter) const;
};

struct McemIteration {
  std::size_t iter;
  std::size_t samples;
  double log_evidence;  // under the parameters used for this E-step
  double mean_normal;
  double mean_abnormal;
  double pi_n;
  double rel_change;
  std::string los_normal;
  std::string los_abnormal;
};

struct McemResult {
  ProcessParams fitted;
  std::vector<McemIteration> trace;
  bool converged = false;
  // Non-empty when an E-step produced a non-finite evidence; the trace holds
  // the iterations completed before the failure.
  std::string aborted;
};

McemResult mcem_fit(const DataMatrix& data, const ModelParams& initial, const McemConfig& config);

std::string describe(const LosDistribution& dist);

}  // namespace bard
