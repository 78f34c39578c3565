#pragma once

#include <cstdint>
#include <vector>

#include "bard/filter.hpp"
#include "bard/posterior.hpp"

namespace bard {

struct InferenceSettings {
  double alpha = 1e-4;
  std::size_t samples = 1000;
  double gamma = 1.0 / 3.0;
};

struct Detection {
  FilterResult filter;
  std::vector<Segmentation> samples;
  PosteriorSummary summary;
  PointEstimate estimate;
};

// Forward filter, posterior sampling, marginals and the loss-based point
// estimate. Filter pruning uses seed's "src" stream, sampling its "backward"
// streams.
Detection detect(const InferenceModel& model, const InferenceSettings& settings, std::uint64_t seed,
                 unsigned threads = 1, bool check_ks = kDebugChecks);

// Sampling stage alone, from a stored filter history.
Detection summarise(FilterResult filter, const TransitionModel& transitions, const InferenceSettings& settings,
                    std::uint64_t seed, unsigned threads = 1);

}  // namespace bard
