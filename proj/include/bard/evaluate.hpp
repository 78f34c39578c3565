#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bard/interval.hpp"
#include "bard/posterior.hpp"

namespace bard {

// D_k = min over estimated intervals of 1 - |E n I| / sqrt(|E| |I|); 1 when
// nothing overlaps (or the estimated set is empty).
double dissimilarity(const Interval& truth, std::span<const Interval> estimated);

struct DetectionCounts {
  std::size_t detected = 0;         // true segments hit by some estimate
  std::size_t false_positives = 0;  // estimates hitting no true segment
};

DetectionCounts tp_fp(std::span<const Interval> truth, std::span<const Interval> estimated);

struct CalibrationBin {
  double lo;
  double hi;
  std::size_t count = 0;
  std::size_t abnormal = 0;

  double centre() const { return 0.5 * (lo + hi); }
  double fraction() const { return count ? static_cast<double>(abnormal) / static_cast<double>(count) : 0.0; }
};

// Equal-width bins on [0, 1]; probability 1 falls in the last bin.
// truth_abnormal is indexed t = 1..n like the summary.
std::vector<CalibrationBin> calibration(const PosteriorSummary& summary, const std::vector<bool>& truth_abnormal,
                                        std::size_t bins = 10);
// Adds the points of one replicate into existing bins (pooling across replicates).
void accumulate_calibration(std::vector<CalibrationBin>& bins, const PosteriorSummary& summary,
                            const std::vector<bool>& truth_abnormal);

// Symmetrised mean dissimilarity between two interval sets; 0 when both are empty.
double consistency(std::span<const Interval> a, std::span<const Interval> b);

struct EvalReport {
  std::vector<double> d_values;  // one per true segment (1 when missed)
  std::size_t true_segments = 0;
  std::size_t estimated_segments = 0;
  std::size_t detected = 0;
  std::size_t false_positives = 0;
  std::vector<CalibrationBin> calibration;

  double detection_proportion() const;
  // Mean D over detected true segments only; NaN when none were detected.
  double mean_d_detected() const;
};

EvalReport evaluate_segmentation(std::span<const Interval> truth, std::span<const Interval> estimated);

// Percentile bootstrap interval for the mean of replicate-level metrics.
std::pair<double, double> bootstrap_mean_ci(std::span<const double> values, std::size_t reps, double level,
                                            std::uint64_t seed);

}  // namespace bard
